#pragma once

// Shared fixtures and independent dense reference implementations.

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "vrbb/data.hpp"
#include "vrbb/losses.hpp"

namespace vrbb::test {

/// Random sparse instance; feature density `density`, entries N(0, scale²).
inline SparseDataset random_instance(std::size_t n, std::size_t d, std::uint64_t seed,
                                     double density = 0.6, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::bernoulli_distribution keep(density), pos(0.5);
  SparseDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    SparseVector a(d);
    for (std::uint32_t j = 0; j < d; ++j)
      if (keep(rng)) a.push_back(j, g(rng));
    ds.push_back(std::move(a), pos(rng) ? 1.0 : -1.0);
  }
  ds.set_dim(d);
  return ds;
}

inline Vector random_vector(std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& x : v) x = g(rng);
  return v;
}

/// Dense copy of the design matrix, one sample per row.
inline Eigen::MatrixXd dense_rows(const SparseDataset& ds) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n()),
                                            static_cast<Eigen::Index>(ds.d()));
  for (std::size_t i = 0; i < ds.n(); ++i) A.row(static_cast<Eigen::Index>(i)) = ds.sample(i).to_dense();
  return A;
}

/// Straightforward dense per-sample loss, written from the formulas
/// independently of LossModel.
struct NaiveLoss {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double lambda;
  bool logistic;

  NaiveLoss(const SparseDataset& ds, double lam, LossKind kind)
      : A(dense_rows(ds)), b(Eigen::Map<const Eigen::VectorXd>(ds.labels().data(),
                                                              static_cast<Eigen::Index>(ds.n()))),
        lambda(lam), logistic(kind == LossKind::logistic) {}

  double f(std::size_t i, const Vector& w) const {
    double m = b[i] * A.row(i).dot(w);
    double data = logistic ? std::log(1.0 + std::exp(-m)) : 0.5 * std::pow(std::max(0.0, 1.0 - m), 2);
    return data + 0.5 * lambda * w.squaredNorm();
  }

  double F(const Vector& w) const {
    double s = 0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) s += f(i, w);
    return s / static_cast<double>(A.rows());
  }

  Vector grad(std::size_t i, const Vector& w) const {
    double m = b[i] * A.row(i).dot(w);
    double c = logistic ? -b[i] / (1.0 + std::exp(m)) : -b[i] * std::max(0.0, 1.0 - m);
    return c * A.row(i).transpose() + lambda * w;
  }

  Vector grad_full(const Vector& w) const {
    Vector g = Vector::Zero(w.size());
    for (Eigen::Index i = 0; i < A.rows(); ++i) g += grad(i, w);
    return g / static_cast<double>(A.rows());
  }

  Eigen::MatrixXd hess(std::size_t i, const Vector& w) const {
    double z = A.row(i).dot(w);
    double h;
    if (logistic) {
      double s = 1.0 / (1.0 + std::exp(-z));
      h = s * (1.0 - s);
    } else {
      h = 1.0 - b[i] * z > 0.0 ? 1.0 : 0.0;
    }
    Eigen::MatrixXd H = h * A.row(i).transpose() * A.row(i);
    H.diagonal().array() += lambda;
    return H;
  }
};

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace vrbb::test
