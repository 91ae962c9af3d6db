#pragma once

// High-accuracy minimizer for optimality-gap reporting: limited-memory BFGS
// (two-loop recursion) with a halving Armijo backtracking line search, plus
// a versioned on-disk cache of solutions.

#include <Eigen/Dense>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "vrbb/data.hpp"
#include "vrbb/error.hpp"
#include "vrbb/losses.hpp"

namespace vrbb {

struct ReferenceSolution {
  Vector w_star;
  double f_star = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  double tolerance = 0.0;
  bool converged = false;
};

struct LbfgsOptions {
  double tol = 1e-12;
  std::size_t max_iter = 10000;
  std::size_t memory = 10;
  double armijo = 1e-4;
  std::size_t max_backtracks = 60;
};

/// Minimizes `fg(w, grad) -> value` from w0.
///
/// Steps are accepted on sufficient decrease. Once the predicted decrease
/// falls below the resolution of F in double precision the Armijo test is
/// meaningless, so a unit quasi-Newton step is then accepted when it does
/// not raise F beyond that resolution and it shrinks the gradient norm.
template <class ValueGrad>
ReferenceSolution lbfgs_minimize(ValueGrad&& fg, Vector w0, const LbfgsOptions& opt = {}) {
  const double eps = std::numeric_limits<double>::epsilon();
  ReferenceSolution sol;
  sol.tolerance = opt.tol;
  Vector w = std::move(w0);
  Vector g(w.size());
  double f = fg(w, g);
  std::deque<Vector> S, Y;
  std::deque<double> rho;
  Vector w_new(w.size()), g_new(w.size());

  std::size_t it = 0;
  for (; it < opt.max_iter; ++it) {
    if (g.norm() <= opt.tol) break;

    // two-loop recursion
    Vector q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t j = S.size(); j-- > 0;) {
      alpha[j] = rho[j] * S[j].dot(q);
      q -= alpha[j] * Y[j];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t j = 0; j < S.size(); ++j) {
      double beta = rho[j] * Y[j].dot(q);
      q += (alpha[j] - beta) * S[j];
    }
    Vector p = -q;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {  // lost descent: restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      p = -g;
      slope = -g.squaredNorm();
    }

    double step = S.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    bool accepted = false;
    const double resolution = 4.0 * eps * std::max(1.0, std::abs(f));
    for (std::size_t b = 0; b < opt.max_backtracks; ++b) {
      w_new = w + step * p;
      double f_new = fg(w_new, g_new);
      if (std::isfinite(f_new)) {
        if (f_new <= f + opt.armijo * step * slope) {
          accepted = true;
        } else if (-opt.armijo * step * slope < resolution && f_new <= f + resolution &&
                   g_new.norm() < g.norm()) {
          accepted = true;
        }
      }
      if (accepted) {
        Vector s = w_new - w;
        Vector y = g_new - g;
        double sy = s.dot(y);
        if (sy > eps * s.norm() * y.norm()) {
          S.push_back(std::move(s));
          Y.push_back(std::move(y));
          rho.push_back(1.0 / sy);
          if (S.size() > opt.memory) {
            S.pop_front();
            Y.pop_front();
            rho.pop_front();
          }
        }
        w.swap(w_new);
        g.swap(g_new);
        f = f_new;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no progress possible at this precision
  }
  sol.w_star = std::move(w);
  sol.f_star = f;
  sol.grad_norm = g.norm();
  sol.iterations = it;
  sol.converged = sol.grad_norm <= opt.tol;
  return sol;
}

/// Reference minimizer of a strongly convex loss model, started at w = 0.
inline ReferenceSolution solve_reference(const LossModel& model, double tol = 1e-12,
                                         std::size_t max_iter = 10000, std::size_t memory = 10) {
  if (!(model.lambda() > 0.0)) throw config_error("reference solver needs lambda > 0");
  if (!(tol > 0.0)) throw config_error("reference tolerance must be positive");
  LbfgsOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  opt.memory = memory;
  auto fg = [&model](const Vector& w, Vector& g) {
    g = model.grad_full(w);
    return model.value(w);
  };
  return lbfgs_minimize(fg, Vector::Zero(static_cast<Eigen::Index>(model.d())), opt);
}

// -- on-disk cache ------------------------------------------------------------
//
// Text header, one "key value" pair per line, reals in hex-float so they
// round-trip exactly, terminated by a "data" line and followed by d raw
// little-endian float64 values:
//
//   VRBB-REFERENCE 1
//   dataset_hash <16 hex digits>
//   model logistic|svm
//   lambda <hexfloat>
//   tol <hexfloat>
//   dim <d>
//   f_star <hexfloat>
//   grad_norm <hexfloat>
//   iterations <count>
//   converged 0|1
//   data
//   <8·d bytes>

struct ReferenceKey {
  std::uint64_t dataset_hash = 0;
  LossKind kind = LossKind::logistic;
  double lambda = 0.0;
  double tol = 0.0;

  static ReferenceKey of(const LossModel& model, double tol) {
    return {vrbb::dataset_hash(model.data()), model.kind(), model.lambda(), tol};
  }

  std::string filename() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "ref-%016llx-%s-%a-%a.vrbbref",
                  static_cast<unsigned long long>(dataset_hash), to_string(kind).c_str(), lambda,
                  tol);
    return buf;
  }
};

namespace detail {

inline std::string hexfloat(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, p);
}

inline double parse_hexfloat(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || p != s.data() + s.size()) throw io_error("bad hex float '" + s + "'");
  return v;
}

}  // namespace detail

inline void save_reference(const std::filesystem::path& path, const ReferenceKey& key,
                           const ReferenceSolution& sol) {
  static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path.string());
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(key.dataset_hash));
  out << "VRBB-REFERENCE 1\n"
      << "dataset_hash " << hash << "\n"
      << "model " << to_string(key.kind) << "\n"
      << "lambda " << detail::hexfloat(key.lambda) << "\n"
      << "tol " << detail::hexfloat(key.tol) << "\n"
      << "dim " << sol.w_star.size() << "\n"
      << "f_star " << detail::hexfloat(sol.f_star) << "\n"
      << "grad_norm " << detail::hexfloat(sol.grad_norm) << "\n"
      << "iterations " << sol.iterations << "\n"
      << "converged " << (sol.converged ? 1 : 0) << "\n"
      << "data\n";
  out.write(reinterpret_cast<const char*>(sol.w_star.data()),
            static_cast<std::streamsize>(sol.w_star.size() * sizeof(double)));
  if (!out) throw io_error("write failed for " + path.string());
}

/// Returns nullopt when the file is missing or was written for another key.
inline std::optional<ReferenceSolution> load_reference(const std::filesystem::path& path,
                                                       const ReferenceKey& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "VRBB-REFERENCE 1")
    throw io_error("not a reference cache file: " + path.string());
  ReferenceSolution sol;
  std::size_t dim = 0;
  std::uint64_t hash = 0;
  std::string model;
  double lambda = 0, tol = 0;
  while (std::getline(in, line) && line != "data") {
    auto sp = line.find(' ');
    if (sp == std::string::npos) throw io_error("malformed cache header line '" + line + "'");
    std::string k = line.substr(0, sp), v = line.substr(sp + 1);
    if (k == "dataset_hash") hash = std::stoull(v, nullptr, 16);
    else if (k == "model") model = v;
    else if (k == "lambda") lambda = detail::parse_hexfloat(v);
    else if (k == "tol") tol = detail::parse_hexfloat(v);
    else if (k == "dim") dim = std::stoull(v);
    else if (k == "f_star") sol.f_star = detail::parse_hexfloat(v);
    else if (k == "grad_norm") sol.grad_norm = detail::parse_hexfloat(v);
    else if (k == "iterations") sol.iterations = std::stoull(v);
    else if (k == "converged") sol.converged = v == "1";
    else throw io_error("unknown cache header key '" + k + "'");
  }
  if (line != "data") throw io_error("truncated cache header: " + path.string());
  if (hash != key.dataset_hash || model != to_string(key.kind) || lambda != key.lambda ||
      tol != key.tol)
    return std::nullopt;
  sol.tolerance = tol;
  sol.w_star.resize(static_cast<Eigen::Index>(dim));
  in.read(reinterpret_cast<char*>(sol.w_star.data()),
          static_cast<std::streamsize>(dim * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != dim * sizeof(double))
    throw io_error("truncated cache payload: " + path.string());
  return sol;
}

/// solve_reference with a cache lookup in `cache_dir` (no caching when empty).
inline ReferenceSolution cached_reference(const LossModel& model, double tol,
                                          const std::filesystem::path& cache_dir,
                                          bool* hit = nullptr) {
  if (hit) *hit = false;
  auto key = ReferenceKey::of(model, tol);
  if (!cache_dir.empty()) {
    auto path = cache_dir / key.filename();
    if (auto sol = load_reference(path, key)) {
      if (hit) *hit = true;
      return *sol;
    }
  }
  auto sol = solve_reference(model, tol);
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    save_reference(cache_dir / key.filename(), key, sol);
  }
  return sol;
}

}  // namespace vrbb
