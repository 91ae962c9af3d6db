#pragma once

// Finite-sum linear-model losses F(w) = (1/n) Σ f_i(w) with
//   logistic:       f_i(w) = log(1 + exp(-b_i a_i^T w)) + (λ/2)‖w‖²
//   squared hinge:  f_i(w) = ½ [1 - b_i a_i^T w]_+² + (λ/2)‖w‖²
// Every per-sample gradient has the form c_i a_i + λw and every per-sample
// Hessian h_i a_i a_i^T + λI, so the oracles below work on the scalars
// (c_i, h_i) and touch only the nonzeros of a_i.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"

namespace vrbb {

enum class LossKind { logistic, squared_hinge };

inline std::string to_string(LossKind k) {
  return k == LossKind::logistic ? "logistic" : "svm";
}

inline LossKind loss_kind_from_string(std::string_view s) {
  if (s == "logistic" || s == "lr") return LossKind::logistic;
  if (s == "svm" || s == "squared_hinge" || s == "squared-hinge") return LossKind::squared_hinge;
  throw config_error("unknown model kind '" + std::string(s) + "'");
}

namespace detail {

/// σ(t) = 1 / (1 + e^{-t}) without overflow.
inline double sigmoid(double t) noexcept {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + e^t) without overflow.
inline double log1pexp(double t) noexcept {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace detail

class LossModel {
 public:
  LossModel(std::shared_ptr<const SparseDataset> data, double lambda, LossKind kind)
      : data_(std::move(data)), lambda_(lambda), kind_(kind) {
    if (!data_ || data_->n() == 0) throw config_error("loss model needs a non-empty dataset");
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw config_error("lambda must be >= 0");
    if (!data_->all_labels_pm1()) throw config_error("classification labels must be in {-1,+1}");
    row_sqnorm_max_ = 0.0;
    for (const auto& a : data_->samples())
      row_sqnorm_max_ = std::max(row_sqnorm_max_, a.squared_norm());
  }

  LossModel(const SparseDataset& data, double lambda, LossKind kind)
      : LossModel(std::make_shared<const SparseDataset>(data), lambda, kind) {}

  std::size_t n() const noexcept { return data_->n(); }
  std::size_t d() const noexcept { return data_->d(); }
  double lambda() const noexcept { return lambda_; }
  LossKind kind() const noexcept { return kind_; }
  const SparseDataset& data() const noexcept { return *data_; }
  std::shared_ptr<const SparseDataset> data_ptr() const noexcept { return data_; }
  const SparseVector& row(std::size_t i) const { return data_->sample(i); }
  double label(std::size_t i) const { return data_->label(i); }

  // -- scalar pieces in terms of the linear prediction z = a_i^T w ----------

  /// Data term of f_i (without the regularizer).
  double loss(std::size_t i, double z) const noexcept {
    double b = data_->label(i);
    if (kind_ == LossKind::logistic) return detail::log1pexp(-b * z);
    double r = std::max(0.0, 1.0 - b * z);
    return 0.5 * r * r;
  }

  /// c_i with ∇f_i(w) = c_i a_i + λw.
  double slope(std::size_t i, double z) const noexcept {
    double b = data_->label(i);
    if (kind_ == LossKind::logistic) return -b * detail::sigmoid(-b * z);
    return -b * std::max(0.0, 1.0 - b * z);
  }

  /// h_i with ∇²f_i(w) = h_i a_i a_i^T + λI. The hinge kink (margin exactly
  /// 1) takes the inactive branch.
  double curvature(std::size_t i, double z) const noexcept {
    if (kind_ == LossKind::logistic) {
      double s = detail::sigmoid(z);
      return s * (1.0 - s);
    }
    return 1.0 - data_->label(i) * z > 0.0 ? 1.0 : 0.0;
  }

  double predict(std::size_t i, const Vector& w) const { return data_->sample(i).dot(w); }

  // -- oracles ----------------------------------------------------------------

  double value_sample(std::size_t i, const Vector& w) const {
    check(w);
    return loss(i, predict(i, w)) + 0.5 * lambda_ * w.squaredNorm();
  }

  double value(const Vector& w) const {
    check(w);
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += loss(i, predict(i, w));
    return s / static_cast<double>(n()) + 0.5 * lambda_ * w.squaredNorm();
  }

  Vector grad_sample(std::size_t i, const Vector& w) const {
    check(w);
    Vector g = lambda_ * w;
    data_->sample(i).axpy(slope(i, predict(i, w)), g);
    return g;
  }

  /// (1/n) Σ ∇f_i(w) in one pass.
  Vector grad_full(const Vector& w) const {
    check(w);
    Vector g = Vector::Zero(w.size());
    for (std::size_t i = 0; i < n(); ++i) data_->sample(i).axpy(slope(i, predict(i, w)), g);
    g /= static_cast<double>(n());
    g += lambda_ * w;
    return g;
  }

  Vector hess_vec_sample(std::size_t i, const Vector& w, const Vector& v) const {
    check(w);
    check(v);
    const auto& a = data_->sample(i);
    Vector out = lambda_ * v;
    a.axpy(curvature(i, a.dot(w)) * a.dot(v), out);
    return out;
  }

  Vector hess_diag_sample(std::size_t i, const Vector& w) const {
    check(w);
    const auto& a = data_->sample(i);
    Vector out = Vector::Constant(w.size(), lambda_);
    double h = curvature(i, a.dot(w));
    for (std::size_t k = 0; k < a.nnz(); ++k) out[a.indices()[k]] += h * a.values()[k] * a.values()[k];
    return out;
  }

  /// Dense (1/n) Σ ∇²f_i(w); O(nnz·d) time, O(d²) memory.
  Eigen::MatrixXd hess_full_dense(const Vector& w) const {
    check(w);
    const auto dd = static_cast<Eigen::Index>(d());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dd, dd);
    for (std::size_t i = 0; i < n(); ++i) {
      const auto& a = data_->sample(i);
      double h = curvature(i, a.dot(w));
      if (h == 0.0) continue;
      for (std::size_t p = 0; p < a.nnz(); ++p)
        for (std::size_t q = 0; q < a.nnz(); ++q)
          H(a.indices()[p], a.indices()[q]) += h * a.values()[p] * a.values()[q];
    }
    H /= static_cast<double>(n());
    H.diagonal().array() += lambda_;
    return H;
  }

  /// Per-sample gradient Lipschitz constant L_i.
  double smoothness(std::size_t i) const {
    double c = kind_ == LossKind::logistic ? 0.25 : 1.0;
    return c * data_->sample(i).squared_norm() + lambda_;
  }

  /// L = max_i L_i.
  double smoothness() const noexcept {
    double c = kind_ == LossKind::logistic ? 0.25 : 1.0;
    return c * row_sqnorm_max_ + lambda_;
  }

  /// μ = λ.
  double strong_convexity() const noexcept { return lambda_; }

  void check(const Vector& w) const {
    if (static_cast<std::size_t>(w.size()) != d())
      throw dimension_error("vector has dimension " + std::to_string(w.size()) +
                            ", model expects " + std::to_string(d()));
  }

 private:
  std::shared_ptr<const SparseDataset> data_;
  double lambda_;
  LossKind kind_;
  double row_sqnorm_max_ = 0.0;
};

}  // namespace vrbb
