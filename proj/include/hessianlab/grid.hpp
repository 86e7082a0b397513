#pragma once

// Fields on the flat torus T^{2n} = R^{2n} / (L Z)^{2n} with N points per real axis.
// Real axes are ordered (x_1, y_1, ..., x_n, y_n) with z_i = x_i + i y_i, row-major
// (x_1 slowest, y_n fastest).

#include "hessianlab/symmetric.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hessianlab {

inline constexpr std::size_t kDefaultPointBudget = 2'000'000;
inline constexpr int kMaxAxes = 2 * kMaxDimension;

using Coords = std::array<int, kMaxAxes>;

class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int n, int points_per_axis, double period, std::size_t budget = kDefaultPointBudget);

  int dimension() const noexcept { return n_; }
  int axes() const noexcept { return 2 * n_; }
  int points_per_axis() const noexcept { return N_; }
  double period() const noexcept { return L_; }
  double spacing() const noexcept { return L_ / N_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }

  Coords coords(std::size_t index) const noexcept;
  std::size_t index(const Coords& c) const noexcept;
  /// Real coordinate of `index` along `axis`.
  double position(std::size_t index, int axis) const noexcept;

  /// Signed index offsets to the +1 and -1 neighbours along every axis (periodic wrap).
  void neighbour_offsets(std::size_t index, std::ptrdiff_t* up, std::ptrdiff_t* down) const noexcept;

  bool operator==(const TorusGrid& o) const noexcept { return n_ == o.n_ && N_ == o.N_ && L_ == o.L_; }

 private:
  int n_ = 0;
  int N_ = 0;
  double L_ = 0.0;
  std::size_t size_ = 0;
  std::array<std::size_t, kMaxAxes> strides_{};
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const TorusGrid& grid, double value);
  ScalarField(const TorusGrid& grid, std::vector<double> data);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double max() const;
  double min() const;
  bool all_finite() const;

 private:
  TorusGrid grid_;
  std::vector<double> data_;
};

/// n x n Hermitian matrix per grid point, column-major per point.
class HermitianField {
 public:
  HermitianField() = default;
  explicit HermitianField(const TorusGrid& grid);
  static HermitianField constant(const TorusGrid& grid, const HermitianMatrix& value);

  const TorusGrid& grid() const noexcept { return grid_; }
  int dimension() const noexcept { return grid_.dimension(); }
  std::size_t size() const noexcept { return grid_.size(); }

  Eigen::Map<const Eigen::MatrixXcd> at(std::size_t p) const {
    const int n = dimension();
    return {data_.data() + p * n * n, n, n};
  }
  /// Writes the Hermitian part of `value`.
  void set(std::size_t p, const Eigen::MatrixXcd& value);

  std::vector<std::complex<double>>& data() noexcept { return data_; }
  const std::vector<std::complex<double>>& data() const noexcept { return data_; }

  HermitianField& operator+=(const HermitianField& o);
  /// this += s * o
  HermitianField& add_scaled(double s, const HermitianField& o);

 private:
  TorusGrid grid_;
  std::vector<std::complex<double>> data_;
};

/// Pointwise tuples of a field of pencils, stored as n doubles per point (descending).
class EigenField {
 public:
  EigenField() = default;
  EigenField(const TorusGrid& grid, std::vector<double> values);
  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  EigenTuple at(std::size_t p) const;
  const double* raw(std::size_t p) const { return values_.data() + p * grid_.dimension(); }

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

/// Background geometry: Kaehler metric omega, the closed form chi in the closed cone,
/// and the semipositive form chi_tilde (>= kappa omega when kappa > 0).
struct BackgroundData {
  HermitianField omega;
  HermitianField chi;
  HermitianField chi_tilde;
  double kappa = 0.0;
  /// det(omega) per point; the density of omega^n.
  ScalarField volume;
  /// omega^{-1/2} per point.
  HermitianField omega_inv_sqrt;
  /// omega is the same matrix at every point.
  bool constant_metric = false;

  const TorusGrid& grid() const noexcept { return omega.grid(); }
};

/// Validates the invariants (omega PD with margin, chi in the closed cone of degree m,
/// chi_tilde PSD) and precomputes the volume density and omega^{-1/2}.
BackgroundData make_background(HermitianField omega, HermitianField chi, HermitianField chi_tilde, double kappa, int m);

// Stencils. `d` receives the (2n)x(2n) second-difference matrix, row-major.
void real_second_differences(const TorusGrid& grid, const double* u, std::size_t p, double* d);
void real_first_differences(const TorusGrid& grid, const double* u, std::size_t p, double* g);
/// d^2/dz^i dzbar^j from the real second-derivative matrix.
Eigen::MatrixXcd complex_from_real(const double* d, int n);

/// Discrete i ddbar phi by second-order centered periodic differences.
HermitianField complex_hessian(const ScalarField& phi);

/// Pointwise generalized eigenvalues of A with respect to G.
EigenField eigen_field(const HermitianField& a, const HermitianField& g);

/// h^{2n} sum g * volume with fixed tree summation order.
double integrate(const ScalarField& g, const ScalarField& volume);

/// (int |g|^p dvol)^{1/p}; p = infinity gives the grid max of |g|.
double lp_norm(const ScalarField& g, double p, const ScalarField& volume);

/// int e^{nf} (1 + n|f|)^p dvol.
double entropy_functional(const ScalarField& f, double p, const ScalarField& volume);

/// Periodic Gaussian convolution with standard deviation sigma (separable, positive weights).
ScalarField mollify(const ScalarField& g, double sigma);

}  // namespace hessianlab
