#pragma once

#include "hessianlab/grid.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>

namespace hessianlab {

/// Inverse of the constant-coefficient difference operator
///   L0 u = sum_{a,b} C_ab D_ab u
/// (D_aa the 3-point second difference, D_ab the centered mixed difference) on
/// mean-zero periodic functions, diagonalized by a real FFT.
class ConstantCoefficientInverse {
 public:
  explicit ConstantCoefficientInverse(const TorusGrid& grid);
  ~ConstantCoefficientInverse();
  ConstantCoefficientInverse(const ConstantCoefficientInverse&) = delete;
  ConstantCoefficientInverse& operator=(const ConstantCoefficientInverse&) = delete;

  /// C is the real symmetric (2n)x(2n) coefficient matrix.
  void set_coefficients(const Eigen::MatrixXd& c);

  /// out = L0^{-1} in with the mean of `in` discarded and mean(out) = 0.
  void apply(std::span<const double> in, std::span<double> out);

  /// Symbol of L0 at integer wave vector k (components in [0, N)).
  static double symbol(const Eigen::MatrixXd& c, const Coords& k, const TorusGrid& grid);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hessianlab
