#pragma once

// Closed-form convergence constants and empirical checks of the variance
// assumption  E‖∇f_i(w) - ∇f_i(w̃) - Ã_i(w - w̃)‖² ≤ α E‖∇f_i(w) - ∇f_i(w̃)‖².

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>

#include "vrbb/correction.hpp"
#include "vrbb/error.hpp"
#include "vrbb/losses.hpp"

namespace vrbb {

struct ProblemConstants {
  double mu = 0.0;       // strong convexity modulus (= λ)
  double L = 0.0;        // max per-sample smoothness
  double L_tilde = 0.0;  // Hessian Lipschitz constant
  double M = 0.0;        // bound on ‖w - w̃‖²

  static ProblemConstants of(const LossModel& model, double L_tilde = 0.0, double M = 0.0) {
    return {model.strong_convexity(), model.smoothness(), L_tilde, M};
  }
};

struct RateEstimate {
  double value = std::numeric_limits<double>::infinity();
  bool feasible = false;
  double eta0 = 0.0;  // step bracket (Theorem-3 form only)
  double eta1 = 0.0;
};

/// α = L̃²M / (4μ²) for the exact-Hessian correction.
inline double alpha_svrg2(const ProblemConstants& c) {
  if (!(c.mu > 0.0)) throw config_error("alpha_svrg2 needs mu > 0");
  return c.L_tilde * c.L_tilde * c.M / (4.0 * c.mu * c.mu);
}

/// α = 4L²/μ for the BB-scalar and diagonal corrections.
inline double alpha_bb_diag(double L, double mu) {
  if (!(mu > 0.0)) throw config_error("alpha_bb_diag needs mu > 0");
  return 4.0 * L * L / mu;
}

inline double alpha_bb_diag(const ProblemConstants& c) { return alpha_bb_diag(c.L, c.mu); }

/// Option-2 rate on the function gap:
///   β = 1/(μη(1 - ηL(2α+1))m) + 2Lηα/(1 - ηL(2α+1)).
inline RateEstimate beta_theorem1(double mu, double L, double alpha, double eta, std::size_t m) {
  RateEstimate r;
  const double denom = 1.0 - eta * L * (2.0 * alpha + 1.0);
  if (!(denom > 0.0) || !(eta > 0.0) || m == 0) return r;
  r.value = 1.0 / (mu * eta * denom * static_cast<double>(m)) + 2.0 * L * eta * alpha / denom;
  r.feasible = r.value < 1.0;
  return r;
}

/// Option-1 rate on the squared distance:
///   γ = (1 - 2ημ(1 - ηL(2α+1)))^m + 2αηL²/(μ(1 - ηL(2α+1))).
inline RateEstimate gamma_theorem2(double mu, double L, double alpha, double eta, std::size_t m) {
  RateEstimate r;
  const double denom = 1.0 - eta * L * (2.0 * alpha + 1.0);
  if (!(denom > 0.0)) return r;
  const double contraction = 1.0 - 2.0 * eta * mu * denom;
  r.value = std::pow(contraction, static_cast<double>(m)) +
            2.0 * alpha * eta * L * L / (mu * denom);
  r.feasible = contraction >= 0.0 && contraction < 1.0 && r.value < 1.0;
  return r;
}

/// Rate for the variable BB step with ξ_t ∈ [ξ₀, ξ₁]:
///   η₀ = ξ₀/(m₁L), η₁ = ξ₁/(m₁μ),
///   γ̃ = (1 - 2η₀μ(1 - η₁L(2α+1)))^m + 2αη₁²L²/(η₀μ(1 - η₁L(2α+1))).
inline RateEstimate gamma_theorem3(double mu, double L, double alpha, double xi0, double xi1,
                                   double m1, std::size_t m) {
  if (!(xi0 > 0.0) || xi1 < xi0) throw config_error("gamma_theorem3 needs 0 < xi0 <= xi1");
  RateEstimate r;
  r.eta0 = xi0 / (m1 * L);
  r.eta1 = xi1 / (m1 * mu);
  const double denom = 1.0 - r.eta1 * L * (2.0 * alpha + 1.0);
  if (!(denom > 0.0)) return r;
  const double contraction = 1.0 - 2.0 * r.eta0 * mu * denom;
  r.value = std::pow(contraction, static_cast<double>(m)) +
            2.0 * alpha * r.eta1 * r.eta1 * L * L / (r.eta0 * mu * denom);
  r.feasible = contraction >= 0.0 && contraction < 1.0 && r.value < 1.0;
  return r;
}

/// Enumerated LHS/RHS of the variance assumption at one (w, w̃) pair;
/// nullopt when the RHS vanishes.
inline std::optional<double> alpha_ratio(const LossModel& model, const CorrectionOperator& corr,
                                         const Vector& w, const Vector& anchor) {
  Vector u = w - anchor;
  double lhs = 0.0, rhs = 0.0;
  Vector diff(w.size());
  for (std::size_t i = 0; i < model.n(); ++i) {
    diff = model.grad_sample(i, w) - model.grad_sample(i, anchor);
    rhs += diff.squaredNorm();
    corr.add_sample(i, u, -1.0, diff);
    lhs += diff.squaredNorm();
  }
  if (!(rhs > 0.0)) return std::nullopt;
  return lhs / rhs;
}

struct TrajectoryPoint {
  Vector w;
  Vector anchor;
};

/// Max enumerated ratio over the supplied points (0 when none qualify).
inline double estimate_alpha_empirical(const LossModel& model, const CorrectionOperator& corr,
                                       std::span<const TrajectoryPoint> points) {
  double best = 0.0;
  for (const auto& p : points)
    if (auto r = alpha_ratio(model, corr, p.w, p.anchor)) best = std::max(best, *r);
  return best;
}

/// Analytic Hessian Lipschitz constant of a logistic sample:
/// |d/dz σ(z)(1-σ(z))| ≤ 1/(6√3), so L̃_i = ‖a_i‖³/(6√3).
inline double hessian_lipschitz_bound(const LossModel& model, std::size_t i) {
  if (model.kind() != LossKind::logistic)
    throw config_error("Hessian Lipschitz constant only defined for the logistic model");
  double r = std::sqrt(model.row(i).squared_norm());
  return r * r * r / (6.0 * std::sqrt(3.0));
}

/// Numerical L̃ = max over random (i, u, v) of ‖∇²f_i(u) - ∇²f_i(v)‖ / ‖u - v‖,
/// with the operator norm probed by Hessian-vector products along a_i and a
/// random direction. Points are drawn in a ball of `radius` around `center`.
inline double estimate_hessian_lipschitz(const LossModel& model, const Vector& center,
                                         double radius, std::size_t trials, std::uint64_t seed) {
  if (model.kind() != LossKind::logistic)
    throw config_error("Hessian Lipschitz constant only defined for the logistic model");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, model.n() - 1);
  auto random_dir = [&] {
    Vector x(center.size());
    for (auto& e : x) e = gauss(rng);
    return Vector(x / x.norm());
  };
  double best = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    std::size_t i = pick(rng);
    Vector u = center + radius * random_dir();
    Vector v = center + radius * random_dir();
    double dist = (u - v).norm();
    if (!(dist > 0.0)) continue;
    Vector probes[2] = {model.row(i).to_dense(), random_dir()};
    for (auto& p : probes) {
      double pn = p.norm();
      if (!(pn > 0.0)) continue;
      p /= pn;
      double op = (model.hess_vec_sample(i, u, p) - model.hess_vec_sample(i, v, p)).norm();
      best = std::max(best, op / dist);
    }
  }
  return best;
}

}  // namespace vrbb
