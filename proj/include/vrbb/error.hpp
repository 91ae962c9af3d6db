#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vrbb {

/// Base of every exception thrown by the library. `category()` is a short
/// machine-readable tag that the CLI maps onto its exit diagnostics.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* category() const noexcept { return "error"; }
};

class parse_error : public error {
 public:
  parse_error(std::size_t line, const std::string& msg)
      : error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* category() const noexcept override { return "parse"; }

 private:
  std::size_t line_;
};

class label_error : public error {
 public:
  label_error(std::size_t line, const std::string& msg)
      : error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* category() const noexcept override { return "label"; }

 private:
  std::size_t line_;
};

class dimension_error : public error {
 public:
  using error::error;
  const char* category() const noexcept override { return "dimension"; }
};

class config_error : public error {
 public:
  using error::error;
  const char* category() const noexcept override { return "config"; }
};

/// s == 0 when forming a secant pair.
class degenerate_anchor_error : public error {
 public:
  using error::error;
  const char* category() const noexcept override { return "degenerate-anchor"; }
};

/// s^T y <= 0 when forming a BB step.
class curvature_error : public error {
 public:
  using error::error;
  const char* category() const noexcept override { return "curvature"; }
};

class divergence_error : public error {
 public:
  divergence_error(std::size_t epoch, std::size_t step, const std::string& msg)
      : error("diverged at epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step) + ": " + msg),
        epoch_(epoch),
        step_(step) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t step() const noexcept { return step_; }
  const char* category() const noexcept override { return "divergence"; }

 private:
  std::size_t epoch_;
  std::size_t step_;
};

class io_error : public error {
 public:
  using error::error;
  const char* category() const noexcept override { return "io"; }
};

}  // namespace vrbb
