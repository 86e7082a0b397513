#pragma once

#include <stdexcept>
#include <string>

namespace hessianlab {

/// Argument outside the domain of a formula (k out of range, tuple outside the cone, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input object (non-Hermitian matrix, mismatched grids, non-finite data).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterate leaves the admissible cone.
class ConeViolationError : public std::runtime_error {
 public:
  ConeViolationError(const std::string& what, std::size_t point, double margin)
      : std::runtime_error(what), point_(point), margin_(margin) {}
  std::size_t point() const noexcept { return point_; }
  double margin() const noexcept { return margin_; }

 private:
  std::size_t point_;
  double margin_;
};

class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace hessianlab
