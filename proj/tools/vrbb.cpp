// vrbb: run experiment grids, redraw plots from CSV output, solve references.
//
//   vrbb run --spec exp.cfg --methods svrg,svrg2bb --lambda 1e-3 --out results
//   vrbb plot --from results
//   vrbb reference --data a9a.txt --lambda 1e-4 --tol 1e-12
//
// The reference cache directory comes from VRBB_CACHE_DIR (unset disables it).

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/harness/csv.hpp"
#include "vrbb/harness/experiment.hpp"
#include "vrbb/harness/plot.hpp"
#include "vrbb/harness/spec.hpp"
#include "vrbb/losses.hpp"
#include "vrbb/reference.hpp"

namespace {

int exit_code(const vrbb::error& e) {
  const std::string c = e.category();
  if (c == "config") return 2;
  if (c == "parse" || c == "label") return 3;
  if (c == "io") return 4;
  if (c == "dimension") return 5;
  return 1;
}

std::string cache_dir_from_env() {
  const char* v = std::getenv("VRBB_CACHE_DIR");
  return v ? v : "";
}

int cmd_run(const std::string& spec_file, const std::vector<std::pair<std::string, std::string>>& overrides) {
  using namespace vrbb::harness;
  ExperimentSpec spec;
  spec.cache_dir = cache_dir_from_env();
  if (!spec_file.empty()) spec = load_spec_file(spec_file, spec);
  for (const auto& [k, v] : overrides) apply_setting(spec, k, v);

  auto table = run_experiment(spec);
  emit_csv(table, spec.out_dir);
  auto plots = emit_plots(table, std::filesystem::path(spec.out_dir) / "plots");
  if (!plots.notice.empty()) std::cerr << "notice: " << plots.notice << "\n";

  for (const auto& [key, cell] : table.cells) {
    std::printf("lambda=%-8g %-12s ", key.lambda, vrbb::to_string(key.method).c_str());
    if (cell.skipped) {
      std::printf("skipped (%s)\n", cell.diagnostic.c_str());
      continue;
    }
    const auto& row = table.rows[cell.winner];
    std::printf("%s=%-8g final_gap=%.3e\n", to_string(row.step_kind).c_str(), row.step_param,
                cell.winner_mean_gap);
  }
  std::printf("wrote %zu runs to %s\n", table.rows.size(), spec.out_dir.c_str());
  return 0;
}

int cmd_plot(const std::string& from, const std::string& out) {
  using namespace vrbb::harness;
  auto table = load_winners(from);
  auto dir = out.empty() ? std::filesystem::path(from) / "plots" : std::filesystem::path(out);
  auto plots = emit_plots(table, dir);
  if (!plots.notice.empty()) std::cerr << "notice: " << plots.notice << "\n";
  for (const auto& f : plots.files) std::printf("%s\n", f.string().c_str());
  return 0;
}

int cmd_reference(const std::string& data, const std::string& labels, const std::string& model,
                  double lambda, double tol, const std::string& cache_dir) {
  std::ifstream in(data);
  if (!in) throw vrbb::io_error("cannot open dataset " + data);
  auto ds = vrbb::parse_libsvm(in, vrbb::LabelRule::from_string(labels));
  vrbb::LossModel lm(ds, lambda, vrbb::loss_kind_from_string(model));
  bool hit = false;
  auto sol = vrbb::cached_reference(lm, tol, cache_dir, &hit);
  std::printf("f_star=%.17g\ngrad_norm=%.3e\niterations=%zu\nconverged=%d\ncache=%s\n",
              sol.f_star, sol.grad_norm, sol.iterations, sol.converged ? 1 : 0,
              cache_dir.empty() ? "off" : (hit ? "hit" : "miss"));
  return sol.converged ? 0 : 6;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced stochastic optimization with BB-type corrections"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment grid and write CSVs and plots");
  std::string spec_file;
  run->add_option("--spec", spec_file, "key = value experiment file");
  std::vector<std::pair<std::string, std::string>> overrides;
  const std::vector<std::pair<std::string, std::string>> run_flags = {
      {"data", "LIBSVM dataset path"},
      {"synth", "synthetic source n,d,seed"},
      {"separability", "synthetic label agreement with the true hyperplane, in [0,1]"},
      {"labels", "label rule: pm1|sign|raw|map:a=-1,b=1[;drop]"},
      {"dim", "force the feature dimension"},
      {"name", "dataset name used in output files"},
      {"subsample", "keep the first N samples"},
      {"scale", "rescale features to max |x| = 1 (true|false)"},
      {"model", "logistic|svm"},
      {"lambda", "comma-separated regularization values"},
      {"methods", "comma-separated methods"},
      {"grid", "step grid for every step kind"},
      {"eta-grid", "constant step grid"},
      {"eta0-grid", "SVRG-BB initial step grid"},
      {"c1-grid", "SVRG-2BBS c1 grid"},
      {"eta0", "BBS fallback step (default 1/L)"},
      {"step", "fix one step: constant|epochbb|m1|m2|m3:value"},
      {"epochs", "epochs per run"},
      {"m", "inner iterations per epoch, or 2n"},
      {"seeds", "comma-separated seeds"},
      {"anchor", "last|random"},
      {"variance-point", "last|start"},
      {"enumeration-cap", "exact variance enumeration up to this n"},
      {"variance-samples", "sampled variance estimate size above the cap"},
      {"ref-tol", "reference gradient-norm tolerance"},
      {"out", "output directory"},
  };
  std::vector<std::string> values(run_flags.size());
  for (std::size_t k = 0; k < run_flags.size(); ++k)
    run->add_option("--" + run_flags[k].first, values[k], run_flags[k].second);

  // plot
  auto* plot = app.add_subcommand("plot", "redraw plots from a results directory");
  std::string from, plot_out;
  plot->add_option("--from", from, "results directory holding index.csv")->required();
  plot->add_option("--out", plot_out, "plot directory (default <from>/plots)");

  // reference
  auto* ref = app.add_subcommand("reference", "solve (or load) the reference minimizer");
  std::string ref_data, ref_model = "logistic", ref_labels = "pm1";
  double ref_lambda = 0.0, ref_tol = 1e-12;
  ref->add_option("--data", ref_data, "LIBSVM dataset path")->required();
  ref->add_option("--lambda", ref_lambda, "regularization")->required();
  ref->add_option("--tol", ref_tol, "gradient-norm tolerance");
  ref->add_option("--model", ref_model, "logistic|svm");
  ref->add_option("--labels", ref_labels, "label rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      for (std::size_t k = 0; k < run_flags.size(); ++k)
        if (run->count("--" + run_flags[k].first))
          overrides.emplace_back(run_flags[k].first, values[k]);
      return cmd_run(spec_file, overrides);
    }
    if (*plot) return cmd_plot(from, plot_out);
    if (*ref) return cmd_reference(ref_data, ref_labels, ref_model, ref_lambda, ref_tol,
                                   cache_dir_from_env());
  } catch (const vrbb::error& e) {
    std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
