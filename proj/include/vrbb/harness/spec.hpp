#pragma once

// Experiment description: a flat `key = value` file (one setting per line,
// '#' starts a comment) with command-line overrides applied on top.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/losses.hpp"
#include "vrbb/optimizer.hpp"
#include "vrbb/stepsize.hpp"

namespace vrbb::harness {

struct SynthSource {
  std::size_t n = 1000;
  std::size_t d = 20;
  std::uint64_t seed = 1;
};

/// Step grid {10^0, ..., 10^-5}.
inline std::vector<double> default_grid() { return {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5}; }

struct ExperimentSpec {
  // data
  std::optional<std::string> data_path;
  std::optional<SynthSource> synth;
  double separability = 0.8;
  std::string label_rule = "pm1";
  std::size_t subsample = 0;  // 0 keeps every sample
  bool scale_max_abs = false;
  std::optional<std::size_t> force_dim;
  std::string name;  // derived from the source when empty

  // model and methods
  LossKind model = LossKind::logistic;
  std::vector<double> lambdas{1e-3};
  std::vector<Method> methods{Method::svrg, Method::svrg2bb};

  // step parameters
  std::vector<double> eta_grid = default_grid();   // constant η
  std::vector<double> eta0_grid = default_grid();  // SVRG-BB initial step
  std::vector<double> c1_grid = default_grid();    // SVRG-2BBS ξ scale
  std::optional<double> eta0;                      // BBS fallback ratio; default 1/L
  std::optional<StepFlag> step;                    // replaces the grid of its kind

  // run control
  std::size_t epochs = 30;
  std::size_t m = 0;  // 0 means 2n
  std::vector<std::uint64_t> seeds{1};
  AnchorOption anchor_option = AnchorOption::last_iterate;
  VariancePoint variance_point = VariancePoint::last_iterate;
  std::size_t enumeration_cap = 5000;
  std::size_t variance_samples = 1024;
  double ref_tol = 1e-10;
  std::string cache_dir;  // empty disables the reference cache
  std::string out_dir = "results";

  void validate() const {
    if (!data_path && !synth) throw config_error("experiment needs --data or --synth");
    if (data_path && synth) throw config_error("--data and --synth are mutually exclusive");
    if (methods.empty()) throw config_error("method list is empty");
    if (lambdas.empty()) throw config_error("lambda list is empty");
    if (seeds.empty()) throw config_error("seed list is empty");
    for (double l : lambdas)
      if (!(l > 0.0)) throw config_error("every lambda must be > 0");
    for (const auto* g : {&eta_grid, &eta0_grid, &c1_grid})
      for (double v : *g)
        if (!(v > 0.0)) throw config_error("every grid value must be > 0");
    if (eta0 && !(*eta0 > 0.0)) throw config_error("eta0 must be > 0");
  }

  std::string dataset_name() const {
    if (!name.empty()) return name;
    if (synth)
      return "synth-" + std::to_string(synth->n) + "x" + std::to_string(synth->d) + "-s" +
             std::to_string(synth->seed);
    std::string p = *data_path;
    auto slash = p.find_last_of('/');
    if (slash != std::string::npos) p = p.substr(slash + 1);
    return p;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  while (true) {
    auto p = s.find(sep);
    auto item = trim(s.substr(0, p));
    if (!item.empty()) out.push_back(item);
    if (p == std::string_view::npos) break;
    s = s.substr(p + 1);
  }
  return out;
}

inline double to_real(const std::string& key, std::string_view v) {
  double x = 0;
  if (!vrbb::detail::parse_double(trim(v), x))
    throw config_error("'" + key + "': expected a number, got '" + std::string(v) + "'");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, std::string_view v) {
  std::uint64_t x = 0;
  auto t = trim(v);
  if (!vrbb::detail::parse_index(t, x))
    throw config_error("'" + key + "': expected a non-negative integer, got '" + t + "'");
  return x;
}

inline std::vector<double> to_reals(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (const auto& t : split(v, ',')) out.push_back(to_real(key, t));
  return out;
}

inline bool to_bool(const std::string& key, std::string_view v) {
  auto t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw config_error("'" + key + "': expected a boolean");
}

}  // namespace detail

inline SynthSource parse_synth(std::string_view v) {
  auto parts = detail::split(v, ',');
  if (parts.size() != 3) throw config_error("--synth expects n,d,seed");
  SynthSource s{detail::to_uint("synth", parts[0]), detail::to_uint("synth", parts[1]),
                detail::to_uint("synth", parts[2])};
  if (s.n == 0 || s.d == 0) throw config_error("--synth needs n, d >= 1");
  return s;
}

/// Applies one setting. Keys match the long command-line flag names.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, std::string_view value) {
  using namespace detail;
  if (key == "data") {
    spec.data_path = trim(value);
    spec.synth.reset();
  } else if (key == "synth") {
    spec.synth = parse_synth(value);
    spec.data_path.reset();
  } else if (key == "separability") spec.separability = to_real(key, value);
  else if (key == "labels") spec.label_rule = trim(value);
  else if (key == "subsample") spec.subsample = to_uint(key, value);
  else if (key == "scale") spec.scale_max_abs = to_bool(key, value);
  else if (key == "dim") spec.force_dim = to_uint(key, value);
  else if (key == "name") spec.name = trim(value);
  else if (key == "model") spec.model = loss_kind_from_string(trim(value));
  else if (key == "lambda") spec.lambdas = to_reals(key, value);
  else if (key == "methods") {
    spec.methods.clear();
    for (const auto& m : split(value, ',')) spec.methods.push_back(method_from_string(m));
  } else if (key == "grid") spec.eta_grid = spec.eta0_grid = spec.c1_grid = to_reals(key, value);
  else if (key == "eta-grid") spec.eta_grid = to_reals(key, value);
  else if (key == "eta0-grid") spec.eta0_grid = to_reals(key, value);
  else if (key == "c1-grid") spec.c1_grid = to_reals(key, value);
  else if (key == "eta0") spec.eta0 = to_real(key, value);
  else if (key == "step") spec.step = parse_step_flag(trim(value));
  else if (key == "epochs") spec.epochs = to_uint(key, value);
  else if (key == "m") {
    auto t = trim(value);
    spec.m = t == "2n" ? 0 : to_uint(key, t);
  } else if (key == "seeds") {
    spec.seeds.clear();
    for (const auto& s : split(value, ',')) spec.seeds.push_back(to_uint(key, s));
  } else if (key == "anchor") {
    auto t = trim(value);
    if (t == "last" || t == "1") spec.anchor_option = AnchorOption::last_iterate;
    else if (t == "random" || t == "2") spec.anchor_option = AnchorOption::random_iterate;
    else throw config_error("'anchor': expected last|random");
  } else if (key == "variance-point") {
    auto t = trim(value);
    if (t == "last") spec.variance_point = VariancePoint::last_iterate;
    else if (t == "start") spec.variance_point = VariancePoint::epoch_start;
    else throw config_error("'variance-point': expected last|start");
  } else if (key == "enumeration-cap") spec.enumeration_cap = to_uint(key, value);
  else if (key == "variance-samples") spec.variance_samples = to_uint(key, value);
  else if (key == "ref-tol") spec.ref_tol = to_real(key, value);
  else if (key == "cache-dir") spec.cache_dir = trim(value);
  else if (key == "out") spec.out_dir = trim(value);
  else throw config_error("unknown setting '" + key + "'");
}

inline void apply_settings_text(ExperimentSpec& spec, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("spec line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(spec, detail::trim(std::string_view(t).substr(0, eq)),
                  std::string_view(t).substr(eq + 1));
  }
}

inline ExperimentSpec load_spec_file(const std::string& path, ExperimentSpec base = {}) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open spec file " + path);
  apply_settings_text(base, in);
  return base;
}

}  // namespace vrbb::harness
