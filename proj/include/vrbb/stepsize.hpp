#pragma once

// Step sizes for the inner loop: constant η, the per-epoch SVRG-BB step
// (1/m)‖Δw‖²/(Δwᵀ Δg), and the generalized BB step (ξ_t/m₁)‖Δw‖²/(Δwᵀ Δg)
// with ξ_t either fixed or decaying as c₁/(1 + c₂T), T = k·m + t.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"

namespace vrbb {

struct XiFixed {
  double c1;
};

struct XiDecay {
  double c1;
  double c2;
};

using XiMode = std::variant<XiFixed, XiDecay>;

inline double xi(const XiMode& mode, double T) {
  if (const auto* f = std::get_if<XiFixed>(&mode)) return f->c1;
  const auto& d = std::get<XiDecay>(mode);
  return d.c1 / (1.0 + d.c2 * T);
}

struct ConstantStep {
  double eta;
};

/// SVRG-BB: (1/m)·BB ratio, constant within an epoch; `eta0` before two
/// anchors exist.
struct EpochBBStep {
  double eta0;
};

/// SVRG-2BBS: (ξ_t/m₁)·BB ratio. Before two anchors exist the BB ratio is
/// replaced by `eta0`.
struct GeneralizedBBStep {
  double m1;
  XiMode xi;
  double eta0;
};

using StepSizeSchedule = std::variant<ConstantStep, EpochBBStep, GeneralizedBBStep>;

/// Anchors w̃_{k-2}, w̃_{k-1} and their full gradients.
struct EpochAnchors {
  Vector w_prev2, w_prev1;
  Vector g_prev2, g_prev1;
};

/// ‖Δw‖² / (Δwᵀ Δg). Throws curvature_error when the curvature is not positive.
inline double bb_ratio(const EpochAnchors& a) {
  if (a.w_prev1.size() != a.w_prev2.size() || a.g_prev1.size() != a.w_prev1.size() ||
      a.g_prev2.size() != a.w_prev1.size())
    throw dimension_error("epoch anchors disagree in dimension");
  Vector dw = a.w_prev1 - a.w_prev2;
  double curv = dw.dot(a.g_prev1 - a.g_prev2);
  if (!(curv > 0.0) || !std::isfinite(curv))
    throw curvature_error("non-positive curvature Δwᵀ Δg = " + std::to_string(curv));
  return dw.squaredNorm() / curv;
}

/// Global inner-iteration counter T = k·m + t, starting at 0.
inline double global_iteration(std::size_t k, std::size_t t, std::size_t m) {
  return static_cast<double>(k) * static_cast<double>(m) + static_cast<double>(t);
}

/// Step size given the epoch's BB ratio (nullopt before two anchors exist).
inline double step_from_ratio(const StepSizeSchedule& schedule, const std::optional<double>& ratio,
                              std::size_t k, std::size_t t, std::size_t m) {
  if (const auto* c = std::get_if<ConstantStep>(&schedule)) return c->eta;
  if (const auto* e = std::get_if<EpochBBStep>(&schedule))
    return ratio ? *ratio / static_cast<double>(m) : e->eta0;
  const auto& g = std::get<GeneralizedBBStep>(schedule);
  return xi(g.xi, global_iteration(k, t, m)) / g.m1 * (ratio ? *ratio : g.eta0);
}

/// Step size for epoch k (0-based) and inner step t (0-based) with epoch
/// length m. `anchors` is null until two anchors exist.
inline double step(const StepSizeSchedule& schedule, const EpochAnchors* anchors, std::size_t k,
                   std::size_t t, std::size_t m) {
  if (std::holds_alternative<ConstantStep>(schedule)) return std::get<ConstantStep>(schedule).eta;
  std::optional<double> ratio;
  if (anchors) ratio = bb_ratio(*anchors);
  return step_from_ratio(schedule, ratio, k, t, m);
}

enum class Preset { M1, M2, M3 };

inline Preset preset_from_string(std::string_view s) {
  if (s == "M1" || s == "m1") return Preset::M1;
  if (s == "M2" || s == "m2") return Preset::M2;
  if (s == "M3" || s == "m3") return Preset::M3;
  throw config_error("unknown preset '" + std::string(s) + "'");
}

/// M1: m₁ = 2n, fixed ξ. M2: m₁ = n, decaying ξ. M3: m₁ = 1, decaying ξ.
/// Only m₁ changes; the epoch length m is untouched.
inline GeneralizedBBStep preset(Preset p, std::size_t n, double c1, double c2, double eta0) {
  if (n == 0) throw config_error("preset needs n >= 1");
  switch (p) {
    case Preset::M1: return {2.0 * static_cast<double>(n), XiFixed{c1}, eta0};
    case Preset::M2: return {static_cast<double>(n), XiDecay{c1, c2}, eta0};
    case Preset::M3: return {1.0, XiDecay{c1, c2}, eta0};
  }
  throw config_error("unknown preset");
}

inline GeneralizedBBStep preset(std::string_view name, std::size_t n, double c1, double c2,
                                double eta0) {
  return preset(preset_from_string(name), n, c1, c2, eta0);
}

/// Textual step flag: "constant:η", "epochbb:η₀", "m1:c₁", "m2:c₁", "m3:c₁".
struct StepFlag {
  std::string kind;
  double value;
};

inline StepFlag parse_step_flag(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw config_error("step flag needs kind:value");
  StepFlag f{std::string(s.substr(0, colon)), 0.0};
  if (!detail::parse_double(s.substr(colon + 1), f.value) || !(f.value > 0.0))
    throw config_error("step value must be a positive number");
  if (f.kind != "constant" && f.kind != "epochbb" && f.kind != "m1" && f.kind != "m2" &&
      f.kind != "m3")
    throw config_error("unknown step kind '" + f.kind + "'");
  return f;
}

}  // namespace vrbb
