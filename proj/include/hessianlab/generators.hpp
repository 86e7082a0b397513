#pragma once

// Built-in data: trigonometric polynomials with exact derivatives, right-hand sides,
// constant-coefficient backgrounds and manufactured problems.

#include "hessianlab/grid.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hessianlab {

struct TrigMode {
  Coords k{};  // integer wave vector
  double amplitude = 0.0;
  double phase = 0.0;
};

/// sum_j A_j cos(2 pi / L * k_j . x + theta_j)
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  TrigPolynomial(int n, double period, std::vector<TrigMode> modes);

  /// `count` random modes with |k_a| <= max_wavenumber, unit-scale amplitudes, then
  /// rescaled so that the sup of the exact complex Hessian entries equals `hessian_scale`.
  static TrigPolynomial random(int n, double period, int max_wavenumber, int count, double hessian_scale,
                               std::uint64_t seed);

  int dimension() const noexcept { return n_; }
  const std::vector<TrigMode>& modes() const noexcept { return modes_; }
  TrigPolynomial scaled(double s) const;

  double value(const double* x) const;
  /// (2n)x(2n) real Hessian, row-major.
  void real_hessian(const double* x, double* d) const;

  ScalarField sample(const TorusGrid& grid) const;
  /// Exact i ddbar at the grid points.
  HermitianField exact_complex_hessian(const TorusGrid& grid) const;

 private:
  int n_ = 0;
  double period_ = 0.0;
  std::vector<TrigMode> modes_;
};

ScalarField constant_field(const TorusGrid& grid, double value);

/// amplitude * exp(-|x - center|^2 / (2 width^2)), minimum-image distance.
ScalarField gaussian_bump(const TorusGrid& grid, const std::vector<double>& center, double width, double amplitude);

/// f with e^{nf} = min(cap, |x - x0|^{-a}); in L^q iff a q < 2n.
ScalarField lq_sample(const TorusGrid& grid, const std::vector<double>& center, double exponent, double cap);

/// Shifts f by a constant so that int e^{mf} omega^n = int (chi + chi_tilde)^m ^ omega^{n-m}.
ScalarField normalize_mass(const ScalarField& f, const BackgroundData& bg, int m);

/// chi_tilde = kappa * omega, all three forms constant.
BackgroundData constant_background(const TorusGrid& grid, const std::vector<double>& omega_diag,
                                   const std::vector<double>& chi_diag, double kappa, int m);

/// Same, with chi replaced by chi_0 + i ddbar(potential) (exact derivatives).
BackgroundData potential_background(const TorusGrid& grid, const std::vector<double>& omega_diag,
                                    const std::vector<double>& chi_diag, const TrigPolynomial& potential, double kappa,
                                    int m);

/// chi + chi_tilde + t omega.
HermitianField stage_form(const BackgroundData& bg, double t);

/// f* = (1/m)(log S_m(lambda(chi + chi_tilde + t omega + i ddbar phi*)) - log C(n,m)).
/// `discrete` uses the difference stencil, otherwise the exact Hessian of phi*.
ScalarField manufactured_rhs(const BackgroundData& bg, double t, int m, const TrigPolynomial& phi_star, bool discrete);

/// S_k(lambda(form)) with respect to omega, pointwise.
ScalarField form_elem_sym(const HermitianField& form, const BackgroundData& bg, int k);

/// Smallest pointwise worst cone margin of lambda(form) with respect to omega.
double min_cone_margin(const HermitianField& form, const BackgroundData& bg, int m);

/// Largest s in (0, 1] with min_cone_margin(stage + s * i ddbar phi*) >= target (bisection).
double amplitude_for_margin(const BackgroundData& bg, double t, int m, const TrigPolynomial& phi_star, double target);

}  // namespace hessianlab
