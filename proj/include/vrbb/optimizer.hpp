#pragma once

// Outer/inner loop of the variance-reduced method family:
//   for each epoch: w̃ = anchor, g̃ = ∇F(w̃), build (Ã, Ã_i),
//   m inner steps w_t = w_{t-1} - η v_t with
//     v_t = ∇f_i(w_{t-1}) - ∇f_i(w̃) + g̃ - Ã_i (w_{t-1} - w̃) + Ã (w_{t-1} - w̃),
//   next anchor = w_m (option 1) or w_t for a uniform t in {0..m-1} (option 2).

#include <Eigen/Dense>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vrbb/correction.hpp"
#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/losses.hpp"
#include "vrbb/stepsize.hpp"

namespace vrbb {

enum class Method { svrg, svrg2, svrg2d, svrg2bb, svrg2bbs_m1, svrg2bbs_m2, svrg2bbs_m3, svrgbb };

inline constexpr Method all_methods[] = {Method::svrg,        Method::svrg2,       Method::svrg2d,
                                         Method::svrg2bb,     Method::svrg2bbs_m1, Method::svrg2bbs_m2,
                                         Method::svrg2bbs_m3, Method::svrgbb};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::svrg: return "svrg";
    case Method::svrg2: return "svrg2";
    case Method::svrg2d: return "svrg2d";
    case Method::svrg2bb: return "svrg2bb";
    case Method::svrg2bbs_m1: return "svrg2bbs-m1";
    case Method::svrg2bbs_m2: return "svrg2bbs-m2";
    case Method::svrg2bbs_m3: return "svrg2bbs-m3";
    case Method::svrgbb: return "svrgbb";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (Method m : all_methods)
    if (to_string(m) == s) return m;
  throw config_error("unknown method '" + std::string(s) + "'");
}

inline CorrectionKind correction_for(Method m) {
  switch (m) {
    case Method::svrg:
    case Method::svrgbb: return CorrectionKind::none;
    case Method::svrg2: return CorrectionKind::full_hessian;
    case Method::svrg2d: return CorrectionKind::diag_hessian;
    default: return CorrectionKind::bb_scalar;
  }
}

inline bool is_bbs(Method m) {
  return m == Method::svrg2bbs_m1 || m == Method::svrg2bbs_m2 || m == Method::svrg2bbs_m3;
}

enum class AnchorOption { last_iterate, random_iterate };

/// Where the per-epoch variance ‖v - ∇F(w)‖² is measured. At the epoch
/// start w = w̃ and the variance is identically zero.
enum class VariancePoint { last_iterate, epoch_start };

/// Read-only view handed to the per-epoch observer after the inner loop.
struct EpochView {
  std::size_t epoch;  // 1-based
  const CorrectionOperator& correction;
  const Vector& anchor;       // w̃ of this epoch
  const Vector& grad_anchor;  // g̃
  const Vector& last_iterate;
  const Vector& next_anchor;
};

struct RunConfig {
  Method method = Method::svrg;
  StepSizeSchedule schedule = ConstantStep{0.1};
  std::size_t epochs = 10;
  std::size_t m = 0;  // 0 means 2n
  AnchorOption anchor_option = AnchorOption::last_iterate;
  std::uint64_t seed = 1;
  std::optional<double> delta_floor;  // default: 1e-8·max(1, L)
  bool record_variance = true;
  VariancePoint variance_point = VariancePoint::last_iterate;
  std::size_t enumeration_cap = 5000;
  std::size_t variance_samples = 1024;
  CorrectionOptions correction;
  std::function<void(const EpochView&)> observer;
  std::function<void(std::size_t k, std::size_t t, double eta)> step_observer;

  std::size_t epoch_length(std::size_t n) const { return m == 0 ? 2 * n : m; }

  void validate() const {
    bool bbs = is_bbs(method);
    bool compatible = std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, GeneralizedBBStep>) return bbs;
          else if constexpr (std::is_same_v<S, EpochBBStep>) return method == Method::svrgbb;
          else return !bbs && method != Method::svrgbb;
        },
        schedule);
    if (!compatible)
      throw config_error("step schedule is incompatible with method " + to_string(method));
  }
};

struct EpochRecord {
  std::size_t epoch = 0;         // 1-based
  double wall_time_sec = 0.0;    // cumulative, optimizer work only
  double fval = 0.0;             // F(w̃_k)
  double gap = std::numeric_limits<double>::quiet_NaN();       // F(w̃_k) - F(w*)
  double variance = std::numeric_limits<double>::quiet_NaN();  // ‖v - ∇F(w)‖²
  double step_size = 0.0;        // step used at the last inner iteration
  std::uint64_t grad_evals = 0;  // cumulative per-sample gradient evaluations
};

/// Field-wise bit equality (NaN fields compare equal to themselves).
inline bool identical(const EpochRecord& a, const EpochRecord& b) {
  auto same = [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  };
  return a.epoch == b.epoch && same(a.wall_time_sec, b.wall_time_sec) && same(a.fval, b.fval) &&
         same(a.gap, b.gap) && same(a.variance, b.variance) && same(a.step_size, b.step_size) &&
         a.grad_evals == b.grad_evals;
}

struct RunResult {
  Vector w;
  std::vector<EpochRecord> records;
  bool diverged = false;
  std::string diagnostic;
  std::uint64_t hess_vec_products = 0;
  std::size_t step_fallbacks = 0;        // BB step fell back to the last valid ratio or η₀
  std::size_t correction_fallbacks = 0;  // BB correction degraded to None
  std::vector<double> bb_scalars;        // raw Ã^k per epoch (NaN when unused)
  std::size_t variance_sample_count = 0; // per measurement; == n when enumerated
};

/// v_t for sample i.
inline Vector direction(const LossModel& model, const CorrectionOperator& corr, const Vector& w,
                        const Vector& anchor, const Vector& g_anchor, std::size_t i) {
  model.check(w);
  model.check(anchor);
  model.check(g_anchor);
  const auto& a = model.row(i);
  Vector u = w - anchor;
  Vector v = g_anchor + model.lambda() * u;
  a.axpy(model.slope(i, a.dot(w)) - model.slope(i, a.dot(anchor)), v);
  corr.add_sample(i, u, -1.0, v);
  corr.add_mean(u, 1.0, v);
  return v;
}

struct VarianceMeasurement {
  double value = 0.0;
  std::size_t samples = 0;
  bool exact = true;
};

/// (1/n) Σ_i ‖v_i - ∇F(w)‖², exact by enumeration when n <= cap, otherwise a
/// uniform-with-replacement estimate from `samples` draws.
inline VarianceMeasurement measure_variance(const LossModel& model, const CorrectionOperator& corr,
                                            const Vector& w, const Vector& anchor,
                                            const Vector& g_anchor, std::size_t cap = 5000,
                                            std::size_t samples = 1024,
                                            std::uint64_t seed = 0) {
  Vector g = model.grad_full(w);
  VarianceMeasurement out;
  const std::size_t n = model.n();
  if (n <= cap) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += (direction(model, corr, w, anchor, g_anchor, i) - g).squaredNorm();
    out.value = s / static_cast<double>(n);
    out.samples = n;
    out.exact = true;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double s = 0.0;
  for (std::size_t k = 0; k < samples; ++k)
    s += (direction(model, corr, w, anchor, g_anchor, pick(rng)) - g).squaredNorm();
  out.value = s / static_cast<double>(samples);
  out.samples = samples;
  out.exact = false;
  return out;
}

/// Step-size state carried across epochs: the BB ratio for the current
/// epoch and the last valid one.
struct StepState {
  std::optional<double> ratio;
  std::optional<double> last_valid;
};

struct EpochOutcome {
  Vector next_anchor;
  Vector last_iterate;
  double last_step = 0.0;
};

/// m inner steps from w̃. `k` is the 0-based epoch index used for T = k·m + t.
template <class Rng>
EpochOutcome run_epoch(const LossModel& model, const RunConfig& config,
                       const CorrectionOperator& corr, const StepState& steps,
                       const Vector& anchor, const Vector& g_anchor, Rng& rng, std::size_t k,
                       double divergence_radius) {
  const std::size_t n = model.n();
  const std::size_t m = config.epoch_length(n);
  if (m == 0) throw config_error("epoch length m must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::optional<std::size_t> keep;
  EpochOutcome out;
  if (config.anchor_option == AnchorOption::random_iterate) {
    keep = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    if (*keep == 0) out.next_anchor = anchor;
  }

  Vector w = anchor;
  Vector u(anchor.size());
  Vector v(anchor.size());
  const double lambda = model.lambda();
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t i = pick(rng);
    const auto& a = model.row(i);
    u = w - anchor;
    v = g_anchor + lambda * u;
    a.axpy(model.slope(i, a.dot(w)) - model.slope(i, a.dot(anchor)), v);
    corr.add_sample(i, u, -1.0, v);
    corr.add_mean(u, 1.0, v);

    const double eta = step_from_ratio(config.schedule, steps.ratio, k, t, m);
    w -= eta * v;
    out.last_step = eta;
    if (config.step_observer) config.step_observer(k, t, eta);

    const double norm = w.norm();
    if (!std::isfinite(norm) || norm > divergence_radius)
      throw divergence_error(k + 1, t + 1, "iterate norm " + std::to_string(norm));
    if (keep && *keep == t + 1) out.next_anchor = w;
  }
  out.last_iterate = w;
  if (!keep) out.next_anchor = w;
  return out;
}

/// Runs `config.epochs` epochs from w0. When `f_star` is given every record
/// carries the optimality gap. Divergence stops the run and is reported in
/// the result with the records gathered so far.
inline RunResult optimize(const LossModel& model, const RunConfig& config, const Vector& w0,
                          std::optional<double> f_star = std::nullopt) {
  config.validate();
  model.check(w0);
  if (!w0.allFinite()) throw config_error("initial point must be finite");
  using clock = std::chrono::steady_clock;

  const std::size_t n = model.n();
  const std::size_t m = config.epoch_length(n);
  if (m == 0) throw config_error("epoch length m must be >= 1");
  const double delta = config.delta_floor.value_or(default_delta_floor(model));
  const double radius = 1e8 * (1.0 + w0.norm());
  const CorrectionKind ckind = correction_for(config.method);

  RunResult res;
  res.w = w0;
  std::mt19937_64 rng(config.seed);

  Vector anchor = w0;
  std::optional<Vector> prev_anchor, prev_grad;
  StepState steps;
  double elapsed = 0.0;
  std::uint64_t grad_evals = 0;

  for (std::size_t k = 0; k < config.epochs; ++k) {
    auto t0 = clock::now();
    Vector g_anchor = model.grad_full(anchor);
    grad_evals += n;

    CorrectionOperator corr;
    try {
      corr = CorrectionOperator::build(ckind, model, anchor, prev_anchor ? &*prev_anchor : nullptr,
                                       delta, &g_anchor, prev_grad ? &*prev_grad : nullptr,
                                       config.correction);
    } catch (const degenerate_anchor_error&) {
      corr = CorrectionOperator::build(CorrectionKind::none, model, anchor, nullptr, delta);
      ++res.correction_fallbacks;
    }
    res.bb_scalars.push_back(corr.kind() == CorrectionKind::bb_scalar
                                 ? corr.bb_raw()
                                 : std::numeric_limits<double>::quiet_NaN());

    steps.ratio.reset();
    if (prev_anchor && !std::holds_alternative<ConstantStep>(config.schedule)) {
      try {
        steps.ratio = bb_ratio({*prev_anchor, anchor, *prev_grad, g_anchor});
        steps.last_valid = steps.ratio;
      } catch (const curvature_error&) {
        steps.ratio = steps.last_valid;
        ++res.step_fallbacks;
      }
    }

    EpochOutcome outcome;
    try {
      outcome = run_epoch(model, config, corr, steps, anchor, g_anchor, rng, k, radius);
    } catch (const divergence_error& e) {
      res.diverged = true;
      res.diagnostic = e.what();
      return res;
    }
    grad_evals += 2 * m + corr.grad_evals_per_sample() * m;
    if (corr.kind() == CorrectionKind::full_hessian)
      res.hess_vec_products += m + (corr.uses_dense_hessian() ? n : m * n);
    elapsed += std::chrono::duration<double>(clock::now() - t0).count();

    EpochRecord rec;
    rec.epoch = k + 1;
    rec.wall_time_sec = elapsed;
    rec.fval = model.value(outcome.next_anchor);
    if (!std::isfinite(rec.fval)) {
      res.diverged = true;
      res.diagnostic = "objective became non-finite at epoch " + std::to_string(k + 1);
      return res;
    }
    if (f_star) rec.gap = rec.fval - *f_star;
    rec.step_size = outcome.last_step;
    rec.grad_evals = grad_evals;
    if (config.record_variance) {
      const Vector& at =
          config.variance_point == VariancePoint::last_iterate ? outcome.last_iterate : anchor;
      auto vm = measure_variance(model, corr, at, anchor, g_anchor, config.enumeration_cap,
                                 config.variance_samples, config.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
      rec.variance = vm.value;
      res.variance_sample_count = vm.samples;
    }
    res.records.push_back(rec);

    if (config.observer)
      config.observer(EpochView{k + 1, corr, anchor, g_anchor, outcome.last_iterate,
                                outcome.next_anchor});

    prev_anchor = anchor;
    prev_grad = std::move(g_anchor);
    anchor = outcome.next_anchor;
    res.w = anchor;
  }
  return res;
}

}  // namespace vrbb
