#pragma once

// Sparse labeled datasets: LIBSVM text I/O, synthetic generation, scaling.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrbb/error.hpp"

namespace vrbb {

using Vector = Eigen::VectorXd;

/// Sparse feature row. Indices are 0-based, strictly increasing and below
/// `dim()`; zero values are never stored.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}

  /// Validating constructor. Zero values are dropped.
  SparseVector(std::size_t dim, const std::vector<std::pair<std::uint32_t, double>>& entries)
      : dim_(dim) {
    idx_.reserve(entries.size());
    val_.reserve(entries.size());
    for (const auto& [j, v] : entries) push_back(j, v);
  }

  void push_back(std::uint32_t j, double v) {
    if (!idx_.empty() && j <= idx_.back())
      throw dimension_error("sparse indices must be strictly increasing");
    if (j >= dim_) throw dimension_error("sparse index out of range");
    if (v == 0.0) return;
    idx_.push_back(j);
    val_.push_back(v);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return idx_.size(); }
  const std::vector<std::uint32_t>& indices() const noexcept { return idx_; }
  const std::vector<double>& values() const noexcept { return val_; }

  /// Smallest ambient dimension that holds every stored index.
  std::size_t required_dim() const noexcept { return idx_.empty() ? 0 : idx_.back() + 1; }

  void set_dim(std::size_t d) {
    if (d < required_dim()) throw dimension_error("dimension smaller than max index + 1");
    dim_ = d;
  }

  double dot(const Vector& w) const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < idx_.size(); ++k) s += val_[k] * w[idx_[k]];
    return s;
  }

  /// y += a * x
  void axpy(double a, Vector& y) const noexcept {
    for (std::size_t k = 0; k < idx_.size(); ++k) y[idx_[k]] += a * val_[k];
  }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : val_) s += v * v;
    return s;
  }

  Vector to_dense() const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
    axpy(1.0, out);
    return out;
  }

  /// Entry-wise equality; ambient dimension is compared by the owning dataset.
  bool same_entries(const SparseVector& o) const noexcept {
    return idx_ == o.idx_ && val_ == o.val_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint32_t> idx_;
  std::vector<double> val_;
};

/// Immutable-after-construction training set of n sparse rows and real labels.
class SparseDataset {
 public:
  SparseDataset() = default;

  /// Appending never decreases the dimension.
  void push_back(SparseVector sample, double label) {
    dim_ = std::max(dim_, sample.dim());
    samples_.push_back(std::move(sample));
    labels_.push_back(label);
  }

  std::size_t n() const noexcept { return samples_.size(); }
  std::size_t d() const noexcept { return dim_; }
  const SparseVector& sample(std::size_t i) const { return samples_[i]; }
  double label(std::size_t i) const { return labels_[i]; }
  const std::vector<SparseVector>& samples() const noexcept { return samples_; }
  const std::vector<double>& labels() const noexcept { return labels_; }

  std::size_t nnz() const noexcept {
    std::size_t s = 0;
    for (const auto& a : samples_) s += a.nnz();
    return s;
  }

  /// Forces the ambient dimension, e.g. so that train/test splits agree.
  void set_dim(std::size_t d) {
    for (auto& a : samples_) a.set_dim(d);
    dim_ = d;
  }

  bool all_labels_pm1() const noexcept {
    return std::all_of(labels_.begin(), labels_.end(),
                       [](double b) { return b == 1.0 || b == -1.0; });
  }

  /// First `count` samples (order preserved).
  SparseDataset head(std::size_t count) const {
    SparseDataset out;
    count = std::min(count, n());
    for (std::size_t i = 0; i < count; ++i) out.push_back(samples_[i], labels_[i]);
    out.set_dim(dim_);
    return out;
  }

  friend bool operator==(const SparseDataset& a, const SparseDataset& b) {
    if (a.dim_ != b.dim_ || a.labels_ != b.labels_ || a.samples_.size() != b.samples_.size())
      return false;
    for (std::size_t i = 0; i < a.samples_.size(); ++i)
      if (!a.samples_[i].same_entries(b.samples_[i])) return false;
    return true;
  }

 private:
  std::vector<SparseVector> samples_;
  std::vector<double> labels_;
  std::size_t dim_ = 0;
};

/// How raw file labels become stored labels.
struct LabelRule {
  enum class Kind { raw, plus_minus_one, sign, map };
  Kind kind = Kind::plus_minus_one;
  std::vector<std::pair<double, double>> mapping;  // Kind::map only
  bool drop_unmapped = false;                      // Kind::map only

  static LabelRule raw() { return {Kind::raw, {}, false}; }
  static LabelRule plus_minus_one() { return {Kind::plus_minus_one, {}, false}; }
  /// label > 0 -> +1, otherwise -1 (e.g. {0,1}-labeled files).
  static LabelRule sign() { return {Kind::sign, {}, false}; }
  static LabelRule map(std::vector<std::pair<double, double>> m, bool drop = false) {
    return {Kind::map, std::move(m), drop};
  }

  /// Parses "raw", "pm1", "sign" or "map:3=-1,8=1[;drop]".
  static LabelRule from_string(std::string_view s);

  /// nullopt means "drop this row" (map rule with drop_unmapped).
  std::optional<double> apply(double raw_label, std::size_t line) const {
    switch (kind) {
      case Kind::raw:
        return raw_label;
      case Kind::plus_minus_one:
        if (raw_label != 1.0 && raw_label != -1.0)
          throw label_error(line, "label not in {-1,+1}");
        return raw_label;
      case Kind::sign:
        return raw_label > 0.0 ? 1.0 : -1.0;
      case Kind::map:
        for (const auto& [from, to] : mapping)
          if (from == raw_label) return to;
        if (drop_unmapped) return std::nullopt;
        throw label_error(line, "label outside mapping domain");
    }
    return raw_label;
  }
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

inline bool parse_index(std::string_view tok, std::uint64_t& out) {
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end;
}

inline void format_double(std::string& out, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace detail

inline LabelRule LabelRule::from_string(std::string_view s) {
  if (s == "raw") return raw();
  if (s == "pm1") return plus_minus_one();
  if (s == "sign") return sign();
  if (s.substr(0, 4) == "map:") {
    s.remove_prefix(4);
    bool drop = false;
    if (auto semi = s.find(';'); semi != std::string_view::npos) {
      if (s.substr(semi + 1) != "drop") throw config_error("unknown label-map flag");
      drop = true;
      s = s.substr(0, semi);
    }
    std::vector<std::pair<double, double>> m;
    while (!s.empty()) {
      auto comma = s.find(',');
      auto item = s.substr(0, comma);
      auto eq = item.find('=');
      double from = 0, to = 0;
      if (eq == std::string_view::npos || !detail::parse_double(item.substr(0, eq), from) ||
          !detail::parse_double(item.substr(eq + 1), to))
        throw config_error("bad label map entry '" + std::string(item) + "'");
      m.emplace_back(from, to);
      s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
    }
    return map(std::move(m), drop);
  }
  throw config_error("unknown label rule '" + std::string(s) + "'");
}

/// Reads `label idx:val ...` lines with 1-based indices. Blank lines are
/// skipped; text after '#' is ignored. The dimension is the max observed
/// index unless `force_dim` is given.
inline SparseDataset parse_libsvm(std::istream& in,
                                  const LabelRule& rule = LabelRule::plus_minus_one(),
                                  std::optional<std::size_t> force_dim = std::nullopt) {
  SparseDataset ds;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    auto toks = detail::split_ws(sv);
    if (toks.empty()) continue;

    double raw_label = 0;
    if (!detail::parse_double(toks[0], raw_label))
      throw parse_error(lineno, "non-numeric label '" + std::string(toks[0]) + "'");

    entries.clear();
    std::uint64_t prev = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      auto colon = toks[k].find(':');
      if (colon == std::string_view::npos)
        throw parse_error(lineno, "expected idx:val, got '" + std::string(toks[k]) + "'");
      std::uint64_t idx = 0;
      double val = 0;
      if (!detail::parse_index(toks[k].substr(0, colon), idx) || idx == 0 ||
          idx > std::numeric_limits<std::uint32_t>::max())
        throw parse_error(lineno, "bad index in '" + std::string(toks[k]) + "'");
      if (!detail::parse_double(toks[k].substr(colon + 1), val))
        throw parse_error(lineno, "bad value in '" + std::string(toks[k]) + "'");
      if (idx <= prev)
        throw parse_error(lineno, "indices must be strictly increasing (index " +
                                      std::to_string(idx) + ")");
      prev = idx;
      if (val != 0.0) entries.emplace_back(static_cast<std::uint32_t>(idx - 1), val);
    }

    auto label = rule.apply(raw_label, lineno);
    if (!label) continue;
    std::size_t need = entries.empty() ? 0 : entries.back().first + 1;
    ds.push_back(SparseVector(need, entries), *label);
  }
  if (force_dim) {
    if (*force_dim < ds.d())
      throw dimension_error("forced dimension " + std::to_string(*force_dim) +
                            " is below max index " + std::to_string(ds.d()));
    ds.set_dim(*force_dim);
  } else {
    ds.set_dim(ds.d());
  }
  return ds;
}

inline SparseDataset parse_libsvm(const std::string& text,
                                  const LabelRule& rule = LabelRule::plus_minus_one(),
                                  std::optional<std::size_t> force_dim = std::nullopt) {
  std::istringstream in(text);
  return parse_libsvm(in, rule, force_dim);
}

/// Canonical text: 1-based indices, shortest round-trip number formatting,
/// '+' prefix on positive labels.
inline std::string write_libsvm(const SparseDataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double b = ds.label(i);
    if (b > 0) out.push_back('+');
    detail::format_double(out, b);
    const auto& a = ds.sample(i);
    for (std::size_t k = 0; k < a.nnz(); ++k) {
      out.push_back(' ');
      out += std::to_string(a.indices()[k] + 1);
      out.push_back(':');
      detail::format_double(out, a.values()[k]);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_libsvm(const SparseDataset& ds, std::ostream& os) { os << write_libsvm(ds); }

/// Deterministic synthetic binary problem: Gaussian features (each coordinate
/// present with probability 0.9), labels from a random hyperplane, each
/// flipped with probability (1 - separability) / 2.
inline SparseDataset synth_binary(std::size_t n, std::size_t d, std::uint64_t seed,
                                  double separability = 0.8) {
  if (n == 0 || d == 0) throw config_error("synth_binary needs n, d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector w_true(static_cast<Eigen::Index>(d));
  for (auto& x : w_true) x = gauss(rng);
  w_true /= w_true.norm();

  const double flip = 0.5 * (1.0 - std::clamp(separability, 0.0, 1.0));
  SparseDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    SparseVector a(d);
    for (std::size_t j = 0; j < d; ++j) {
      double v = gauss(rng);
      if (unif(rng) < 0.9) a.push_back(static_cast<std::uint32_t>(j), v);
    }
    double b = a.dot(w_true) >= 0.0 ? 1.0 : -1.0;
    if (unif(rng) < flip) b = -b;
    ds.push_back(std::move(a), b);
  }
  ds.set_dim(d);
  return ds;
}

/// Divides every feature column by its max absolute value (columns that are
/// identically zero are left alone).
inline SparseDataset scale_max_abs(const SparseDataset& ds) {
  std::vector<double> maxabs(ds.d(), 0.0);
  for (const auto& a : ds.samples())
    for (std::size_t k = 0; k < a.nnz(); ++k)
      maxabs[a.indices()[k]] = std::max(maxabs[a.indices()[k]], std::abs(a.values()[k]));
  SparseDataset out;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& a = ds.sample(i);
    SparseVector s(ds.d());
    for (std::size_t k = 0; k < a.nnz(); ++k) {
      auto j = a.indices()[k];
      s.push_back(j, maxabs[j] > 0 ? a.values()[k] / maxabs[j] : a.values()[k]);
    }
    out.push_back(std::move(s), ds.label(i));
  }
  out.set_dim(ds.d());
  return out;
}

/// FNV-1a over the dataset's exact bits; keys the reference cache.
inline std::uint64_t dataset_hash(const SparseDataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= c[k];
      h *= 1099511628211ULL;
    }
  };
  std::uint64_t n = ds.n(), d = ds.d();
  mix(&n, sizeof n);
  mix(&d, sizeof d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double b = ds.label(i);
    mix(&b, sizeof b);
    const auto& a = ds.sample(i);
    std::uint64_t nnz = a.nnz();
    mix(&nnz, sizeof nnz);
    mix(a.indices().data(), a.nnz() * sizeof(std::uint32_t));
    mix(a.values().data(), a.nnz() * sizeof(double));
  }
  return h;
}

}  // namespace vrbb
