#pragma once

// Grid-search driver: for every λ solve the reference, run every
// (method, step parameter, seed) and pick the grid point with the smallest
// mean final gap per (method, λ) cell.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/harness/spec.hpp"
#include "vrbb/losses.hpp"
#include "vrbb/optimizer.hpp"
#include "vrbb/reference.hpp"
#include "vrbb/stepsize.hpp"

namespace vrbb::harness {

enum class StepKind { constant, epochbb, c1 };

inline std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::constant: return "eta";
    case StepKind::epochbb: return "eta0";
    case StepKind::c1: return "c1";
  }
  return "?";
}

inline StepKind step_kind_for(Method m) {
  if (m == Method::svrgbb) return StepKind::epochbb;
  if (is_bbs(m)) return StepKind::c1;
  return StepKind::constant;
}

struct RunRow {
  std::string dataset;
  LossKind model = LossKind::logistic;
  double lambda = 0.0;
  Method method = Method::svrg;
  StepKind step_kind = StepKind::constant;
  double step_param = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> records;
  bool diverged = false;
  std::string diagnostic;

  /// Gap at the last epoch; +inf for diverged or empty runs.
  double final_gap() const {
    if (diverged || records.empty() || !std::isfinite(records.back().gap))
      return std::numeric_limits<double>::infinity();
    return records.back().gap;
  }

  std::string file_stem() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s_%s_lam%.6g_%s_%s%.6g_seed%llu", dataset.c_str(),
                  vrbb::to_string(model).c_str(), lambda, vrbb::to_string(method).c_str(),
                  to_string(step_kind).c_str(), step_param, static_cast<unsigned long long>(seed));
    return buf;
  }
};

struct CellKey {
  double lambda;
  Method method;
  friend bool operator<(const CellKey& a, const CellKey& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.method < b.method;
  }
};

struct CellInfo {
  double f_star = 0.0;
  bool skipped = false;
  std::string diagnostic;
  std::size_t winner = 0;  // index into rows: winning grid point, first seed
  double winner_mean_gap = std::numeric_limits<double>::infinity();
};

struct ResultTable {
  std::string dataset;
  LossKind model = LossKind::logistic;
  std::vector<RunRow> rows;
  std::map<CellKey, CellInfo> cells;
  std::vector<std::string> notes;  // run metadata (decisions, fallbacks)
};

inline SparseDataset load_dataset(const ExperimentSpec& spec) {
  SparseDataset ds;
  if (spec.synth) {
    ds = synth_binary(spec.synth->n, spec.synth->d, spec.synth->seed, spec.separability);
  } else {
    std::ifstream in(*spec.data_path);
    if (!in) throw io_error("cannot open dataset " + *spec.data_path);
    ds = parse_libsvm(in, LabelRule::from_string(spec.label_rule), spec.force_dim);
  }
  if (spec.subsample > 0 && spec.subsample < ds.n()) ds = ds.head(spec.subsample);
  if (spec.scale_max_abs) ds = scale_max_abs(ds);
  return ds;
}

inline const std::vector<double>& grid_for(const ExperimentSpec& spec, StepKind kind,
                                           std::vector<double>& scratch) {
  if (spec.step) {
    const auto& f = *spec.step;
    bool match = (kind == StepKind::constant && f.kind == "constant") ||
                 (kind == StepKind::epochbb && f.kind == "epochbb") ||
                 (kind == StepKind::c1 && (f.kind == "m1" || f.kind == "m2" || f.kind == "m3"));
    if (match) {
      scratch = {f.value};
      return scratch;
    }
  }
  switch (kind) {
    case StepKind::constant: return spec.eta_grid;
    case StepKind::epochbb: return spec.eta0_grid;
    case StepKind::c1: return spec.c1_grid;
  }
  return spec.eta_grid;
}

inline StepSizeSchedule schedule_for(Method method, double param, const LossModel& model,
                                     const ExperimentSpec& spec) {
  switch (step_kind_for(method)) {
    case StepKind::constant: return ConstantStep{param};
    case StepKind::epochbb: return EpochBBStep{param};
    case StepKind::c1: {
      double eta0 = spec.eta0.value_or(1.0 / model.smoothness());
      Preset p = method == Method::svrg2bbs_m1   ? Preset::M1
                 : method == Method::svrg2bbs_m2 ? Preset::M2
                                                 : Preset::M3;
      return preset(p, model.n(), param, eta0 * model.lambda(), eta0);
    }
  }
  return ConstantStep{param};
}

/// Runs the whole grid. Cells whose reference does not converge are skipped
/// with a diagnostic.
inline ResultTable run_experiment(const ExperimentSpec& spec, const SparseDataset& data) {
  spec.validate();
  ResultTable table;
  table.dataset = spec.dataset_name();
  table.model = spec.model;
  auto shared = std::make_shared<const SparseDataset>(data);
  const std::size_t m = spec.m == 0 ? 2 * data.n() : spec.m;
  table.notes.push_back("n=" + std::to_string(data.n()) + " d=" + std::to_string(data.d()) +
                        " m=" + std::to_string(m));
  table.notes.push_back(std::string("variance_point=") +
                        (spec.variance_point == VariancePoint::last_iterate ? "last_inner_iterate"
                                                                            : "epoch_start"));
  table.notes.push_back(data.n() <= spec.enumeration_cap
                            ? "variance=exact_enumeration"
                            : "variance=sampled_" + std::to_string(spec.variance_samples));
  table.notes.push_back(std::string("anchor_option=") +
                        (spec.anchor_option == AnchorOption::last_iterate ? "1" : "2"));
  table.notes.push_back("first_epoch=plain_svrg_with_fallback_step");
  table.notes.push_back("winner=min_mean_final_gap_over_seeds");

  for (double lambda : spec.lambdas) {
    LossModel model(shared, lambda, spec.model);
    auto ref = cached_reference(model, spec.ref_tol, spec.cache_dir);
    char buf[160];
    std::snprintf(buf, sizeof buf, "lambda=%.6g reference: f_star=%.17g grad_norm=%.3e iters=%zu",
                  lambda, ref.f_star, ref.grad_norm, ref.iterations);
    table.notes.push_back(buf);

    for (Method method : spec.methods) {
      CellInfo cell;
      cell.f_star = ref.f_star;
      if (!ref.converged) {
        cell.skipped = true;
        cell.diagnostic = "reference did not reach tolerance";
        table.cells[{lambda, method}] = cell;
        continue;
      }
      const StepKind kind = step_kind_for(method);
      std::vector<double> scratch;
      const auto& grid = grid_for(spec, kind, scratch);
      bool have_winner = false;
      for (double param : grid) {
        double gap_sum = 0.0;
        std::size_t first_row = table.rows.size();
        for (std::uint64_t seed : spec.seeds) {
          RunConfig cfg;
          cfg.method = method;
          cfg.schedule = schedule_for(method, param, model, spec);
          cfg.epochs = spec.epochs;
          cfg.m = m;
          cfg.anchor_option = spec.anchor_option;
          cfg.seed = seed;
          cfg.variance_point = spec.variance_point;
          cfg.enumeration_cap = spec.enumeration_cap;
          cfg.variance_samples = spec.variance_samples;
          auto res = optimize(model, cfg, Vector::Zero(static_cast<Eigen::Index>(data.d())),
                              ref.f_star);

          RunRow row;
          row.dataset = table.dataset;
          row.model = spec.model;
          row.lambda = lambda;
          row.method = method;
          row.step_kind = kind;
          row.step_param = param;
          row.seed = seed;
          row.records = std::move(res.records);
          row.diverged = res.diverged;
          row.diagnostic = res.diagnostic;
          if (res.step_fallbacks || res.correction_fallbacks)
            table.notes.push_back(row.file_stem() + ": step_fallbacks=" +
                                  std::to_string(res.step_fallbacks) + " correction_fallbacks=" +
                                  std::to_string(res.correction_fallbacks));
          gap_sum += row.final_gap();
          table.rows.push_back(std::move(row));
        }
        double mean_gap = gap_sum / static_cast<double>(spec.seeds.size());
        if (!have_winner || mean_gap < cell.winner_mean_gap) {
          cell.winner_mean_gap = mean_gap;
          cell.winner = first_row;
          have_winner = true;
        }
      }
      table.cells[{lambda, method}] = cell;
    }
  }
  return table;
}

inline ResultTable run_experiment(const ExperimentSpec& spec) {
  return run_experiment(spec, load_dataset(spec));
}

}  // namespace vrbb::harness
