#pragma once

// Curvature-correction pairs (Ã, Ã_i) for the variance-reduced direction
//   v = ∇f_i(w) - ∇f_i(w̃) + g̃ - Ã_i (w - w̃) + Ã (w - w̃),
// with the invariant (1/n) Σ_i Ã_i = Ã so that v stays unbiased.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/losses.hpp"

namespace vrbb {

enum class CorrectionKind {
  none,          // SVRG
  full_hessian,  // SVRG-2
  diag_hessian,  // SVRG-2D
  bb_scalar,     // SVRG-2BB
};

inline std::string to_string(CorrectionKind k) {
  switch (k) {
    case CorrectionKind::none: return "none";
    case CorrectionKind::full_hessian: return "full_hessian";
    case CorrectionKind::diag_hessian: return "diag_hessian";
    case CorrectionKind::bb_scalar: return "bb_scalar";
  }
  return "?";
}

/// δ = 1e-8 · max(1, L̂).
inline double default_delta_floor(const LossModel& model) {
  return 1e-8 * std::max(1.0, model.smoothness());
}

/// Second BB form s^T y / ‖y‖².
inline double bb_scalar_alternative(const Vector& s, const Vector& y) {
  if (s.size() != y.size()) throw dimension_error("s and y differ in dimension");
  double yy = y.squaredNorm();
  if (!(yy > 0.0)) throw degenerate_anchor_error("bb_scalar_alternative: y is zero");
  return s.dot(y) / yy;
}

/// BB curvature scalar s^T y / ‖s‖².
inline double bb_scalar(const Vector& s, const Vector& y) {
  if (s.size() != y.size()) throw dimension_error("s and y differ in dimension");
  double ss = s.squaredNorm();
  if (!(ss > 0.0)) throw degenerate_anchor_error("bb_scalar: s is zero");
  return s.dot(y) / ss;
}

struct CorrectionOptions {
  /// FullHessian assembles the dense mean Hessian when d <= this cap and
  /// falls back to matrix-free (1/n) Σ products above it.
  std::size_t dense_hessian_cap = 256;
};

class CorrectionOperator {
 public:
  /// The zero operator.
  CorrectionOperator() = default;

  /// Builds the pair anchored at `anchor`. BBScalar needs `prev_anchor`; when
  /// it is absent the operator degrades to None. Full gradients at the
  /// anchors may be passed in to skip recomputation.
  static CorrectionOperator build(CorrectionKind kind, const LossModel& model, const Vector& anchor,
                                  const Vector* prev_anchor, double delta_floor,
                                  const Vector* grad_anchor = nullptr,
                                  const Vector* grad_prev = nullptr,
                                  const CorrectionOptions& opts = {}) {
    model.check(anchor);
    CorrectionOperator op;
    op.model_ = &model;
    op.kind_ = kind;
    op.anchor_ = anchor;
    op.delta_ = delta_floor;
    switch (kind) {
      case CorrectionKind::none:
        break;
      case CorrectionKind::full_hessian:
        op.cache_anchor_curvature();
        if (model.d() <= opts.dense_hessian_cap) {
          op.dense_ = model.hess_full_dense(anchor);
          op.has_dense_ = true;
        }
        break;
      case CorrectionKind::diag_hessian: {
        op.cache_anchor_curvature();
        op.diag_ = Vector::Zero(anchor.size());
        for (std::size_t i = 0; i < model.n(); ++i) {
          const auto& a = model.row(i);
          for (std::size_t k = 0; k < a.nnz(); ++k)
            op.diag_[a.indices()[k]] += op.h_anchor_[i] * a.values()[k] * a.values()[k];
        }
        op.diag_ /= static_cast<double>(model.n());
        op.diag_.array() += model.lambda();
        break;
      }
      case CorrectionKind::bb_scalar: {
        if (prev_anchor == nullptr) {
          op.kind_ = CorrectionKind::none;
          break;
        }
        model.check(*prev_anchor);
        op.prev_ = *prev_anchor;
        op.s_ = anchor - *prev_anchor;
        op.s_sqnorm_ = op.s_.squaredNorm();
        if (!(op.s_sqnorm_ > 0.0))
          throw degenerate_anchor_error("BB correction: current and previous anchors coincide");
        Vector y = (grad_anchor ? *grad_anchor : model.grad_full(anchor)) -
                   (grad_prev ? *grad_prev : model.grad_full(*prev_anchor));
        op.bb_raw_ = op.s_.dot(y) / op.s_sqnorm_;
        op.bb_ = std::max(op.bb_raw_, delta_floor);
        break;
      }
    }
    return op;
  }

  CorrectionKind kind() const noexcept { return kind_; }
  const Vector& anchor() const noexcept { return anchor_; }
  double delta_floor() const noexcept { return delta_; }
  bool uses_dense_hessian() const noexcept { return has_dense_; }

  /// BB scalar Ã^k before and after the δ floor.
  double bb_raw() const noexcept { return bb_raw_; }
  double bb() const noexcept { return bb_; }
  const Vector& mean_diagonal() const noexcept { return diag_; }

  /// Per-sample BB scalar Ã^k_i (not floored).
  double bb_sample(std::size_t i) const {
    const auto& a = model_->row(i);
    double dc = model_->slope(i, a.dot(anchor_)) - model_->slope(i, a.dot(prev_));
    return dc * a.dot(s_) / s_sqnorm_ + model_->lambda();
  }

  /// out += scale · Ã_i u
  void add_sample(std::size_t i, const Vector& u, double scale, Vector& out) const {
    switch (kind_) {
      case CorrectionKind::none:
        return;
      case CorrectionKind::full_hessian: {
        const auto& a = model_->row(i);
        a.axpy(scale * h_anchor_[i] * a.dot(u), out);
        out += (scale * model_->lambda()) * u;
        return;
      }
      case CorrectionKind::diag_hessian: {
        const auto& a = model_->row(i);
        double h = scale * h_anchor_[i];
        for (std::size_t k = 0; k < a.nnz(); ++k) {
          auto j = a.indices()[k];
          out[j] += h * a.values()[k] * a.values()[k] * u[j];
        }
        out += (scale * model_->lambda()) * u;
        return;
      }
      case CorrectionKind::bb_scalar:
        out += (scale * bb_sample(i)) * u;
        return;
    }
  }

  /// out += scale · Ã u
  void add_mean(const Vector& u, double scale, Vector& out) const {
    switch (kind_) {
      case CorrectionKind::none:
        return;
      case CorrectionKind::full_hessian:
        if (has_dense_) {
          out.noalias() += scale * (dense_ * u);
        } else {
          Vector acc = Vector::Zero(u.size());
          for (std::size_t i = 0; i < model_->n(); ++i) {
            const auto& a = model_->row(i);
            a.axpy(h_anchor_[i] * a.dot(u), acc);
          }
          out += (scale / static_cast<double>(model_->n())) * acc;
          out += (scale * model_->lambda()) * u;
        }
        return;
      case CorrectionKind::diag_hessian:
        out += scale * diag_.cwiseProduct(u);
        return;
      case CorrectionKind::bb_scalar:
        out += (scale * bb_) * u;
        return;
    }
  }

  Vector apply_sample(std::size_t i, const Vector& u) const {
    check(u);
    Vector out = Vector::Zero(u.size());
    add_sample(i, u, 1.0, out);
    return out;
  }

  Vector apply_mean(const Vector& u) const {
    check(u);
    Vector out = Vector::Zero(u.size());
    add_mean(u, 1.0, out);
    return out;
  }

  /// Per-sample gradient evaluations spent by one add_sample call.
  std::size_t grad_evals_per_sample() const noexcept {
    return kind_ == CorrectionKind::bb_scalar ? 2 : 0;
  }

 private:
  void cache_anchor_curvature() {
    h_anchor_.resize(model_->n());
    for (std::size_t i = 0; i < model_->n(); ++i)
      h_anchor_[i] = model_->curvature(i, model_->row(i).dot(anchor_));
  }

  void check(const Vector& u) const {
    if (u.size() != anchor_.size() && kind_ != CorrectionKind::none)
      throw dimension_error("correction operand has wrong dimension");
  }

  const LossModel* model_ = nullptr;
  CorrectionKind kind_ = CorrectionKind::none;
  Vector anchor_;
  double delta_ = 0.0;

  // full / diag
  std::vector<double> h_anchor_;
  Eigen::MatrixXd dense_;
  bool has_dense_ = false;
  Vector diag_;

  // bb
  Vector prev_;
  Vector s_;
  double s_sqnorm_ = 0.0;
  double bb_raw_ = 0.0;
  double bb_ = 0.0;
};

}  // namespace vrbb
