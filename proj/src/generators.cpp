#include "hessianlab/generators.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace hessianlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Generalized eigenvalues of `form` at p, using the precomputed omega^{-1/2}.
void local_eigenvalues(const HermitianField& form, const BackgroundData& bg, std::size_t p,
                       Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& es, double* out) {
  const auto w = bg.omega_inv_sqrt.at(p);
  const Eigen::MatrixXcd c = w * form.at(p) * w;
  es.compute(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  const int n = form.dimension();
  for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()[n - 1 - i];
}

}  // namespace

TrigPolynomial::TrigPolynomial(int n, double period, std::vector<TrigMode> modes)
    : n_(n), period_(period), modes_(std::move(modes)) {}

TrigPolynomial TrigPolynomial::random(int n, double period, int max_wavenumber, int count, double hessian_scale,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wave(-max_wavenumber, max_wavenumber);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::vector<TrigMode> modes;
  while (static_cast<int>(modes.size()) < count) {
    TrigMode mode;
    bool nonzero = false;
    for (int a = 0; a < 2 * n; ++a) {
      mode.k[a] = wave(rng);
      nonzero = nonzero || mode.k[a] != 0;
    }
    mode.amplitude = unit(rng);
    mode.phase = angle(rng);
    if (nonzero) modes.push_back(mode);
  }
  TrigPolynomial poly(n, period, std::move(modes));
  // Bound on every entry of the complex Hessian: (2pi/L)^2 / 4 * sum |A| (k_x^2 + k_y^2) style sum.
  const double c = std::pow(kTwoPi / period, 2);
  double bound = 0.0;
  for (const auto& mode : poly.modes_) {
    double k2 = 0.0;
    for (int a = 0; a < 2 * n; ++a) k2 += mode.k[a] * mode.k[a];
    bound += std::abs(mode.amplitude) * c * k2 * 0.5;
  }
  return bound > 0.0 ? poly.scaled(hessian_scale / bound) : poly;
}

TrigPolynomial TrigPolynomial::scaled(double s) const {
  TrigPolynomial out = *this;
  for (auto& mode : out.modes_) mode.amplitude *= s;
  return out;
}

double TrigPolynomial::value(const double* x) const {
  const double c = kTwoPi / period_;
  double v = 0.0;
  for (const auto& mode : modes_) {
    double arg = mode.phase;
    for (int a = 0; a < 2 * n_; ++a) arg += c * mode.k[a] * x[a];
    v += mode.amplitude * std::cos(arg);
  }
  return v;
}

void TrigPolynomial::real_hessian(const double* x, double* d) const {
  const int axes = 2 * n_;
  const double c = kTwoPi / period_;
  std::fill(d, d + axes * axes, 0.0);
  for (const auto& mode : modes_) {
    double arg = mode.phase;
    for (int a = 0; a < axes; ++a) arg += c * mode.k[a] * x[a];
    const double w = -mode.amplitude * std::cos(arg) * c * c;
    for (int a = 0; a < axes; ++a)
      for (int b = 0; b < axes; ++b) d[a * axes + b] += w * mode.k[a] * mode.k[b];
  }
}

ScalarField TrigPolynomial::sample(const TorusGrid& grid) const {
  ScalarField f(grid, 0.0);
  std::array<double, kMaxAxes> x{};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (int a = 0; a < grid.axes(); ++a) x[a] = grid.position(p, a);
    f[p] = value(x.data());
  }
  return f;
}

HermitianField TrigPolynomial::exact_complex_hessian(const TorusGrid& grid) const {
  HermitianField out(grid);
  std::array<double, kMaxAxes> x{};
  std::array<double, kMaxAxes * kMaxAxes> d{};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (int a = 0; a < grid.axes(); ++a) x[a] = grid.position(p, a);
    real_hessian(x.data(), d.data());
    out.set(p, complex_from_real(d.data(), grid.dimension()));
  }
  return out;
}

ScalarField constant_field(const TorusGrid& grid, double value) { return ScalarField(grid, value); }

namespace {

double periodic_distance2(const TorusGrid& grid, std::size_t p, const std::vector<double>& center) {
  const double L = grid.period();
  double r2 = 0.0;
  for (int a = 0; a < grid.axes(); ++a) {
    double d = grid.position(p, a) - (a < static_cast<int>(center.size()) ? center[a] : 0.0);
    d -= L * std::round(d / L);
    r2 += d * d;
  }
  return r2;
}

}  // namespace

ScalarField gaussian_bump(const TorusGrid& grid, const std::vector<double>& center, double width, double amplitude) {
  if (!(width > 0.0)) throw ValidationError("gaussian_bump: width must be positive");
  ScalarField f(grid, 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    f[p] = amplitude * std::exp(-0.5 * periodic_distance2(grid, p, center) / (width * width));
  }
  return f;
}

ScalarField lq_sample(const TorusGrid& grid, const std::vector<double>& center, double exponent, double cap) {
  if (!(exponent > 0.0) || !(cap > 0.0)) throw ValidationError("lq_sample: exponent and cap must be positive");
  const double n = grid.dimension();
  ScalarField f(grid, 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double r2 = periodic_distance2(grid, p, center);
    // log(min(cap, r^-a)) / n
    const double log_density = r2 == 0.0 ? std::log(cap) : std::min(std::log(cap), -0.5 * exponent * std::log(r2));
    f[p] = log_density / n;
  }
  return f;
}

ScalarField form_elem_sym(const HermitianField& form, const BackgroundData& bg, int k) {
  const TorusGrid& grid = form.grid();
  const int n = grid.dimension();
  ScalarField out(grid, 0.0);
  const auto size = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel num_threads(thread_count())
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
    std::array<double, kMaxDimension> lam{};
    std::array<double, kMaxDimension + 1> e{};
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < size; ++p) {
      local_eigenvalues(form, bg, static_cast<std::size_t>(p), es, lam.data());
      elem_sym_upto(lam.data(), n, k, e.data());
      out[static_cast<std::size_t>(p)] = e[k];
    }
  }
  return out;
}

double min_cone_margin(const HermitianField& form, const BackgroundData& bg, int m) {
  const TorusGrid& grid = form.grid();
  const int n = grid.dimension();
  std::vector<double> worst(grid.size());
  const auto size = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel num_threads(thread_count())
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
    std::array<double, kMaxDimension> lam{};
    std::array<double, kMaxDimension + 1> e{};
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < size; ++p) {
      local_eigenvalues(form, bg, static_cast<std::size_t>(p), es, lam.data());
      elem_sym_upto(lam.data(), n, m, e.data());
      double w = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= m; ++k) w = std::min(w, e[k] / binomial(n, k));
      worst[static_cast<std::size_t>(p)] = w;
    }
  }
  return *std::min_element(worst.begin(), worst.end());
}

ScalarField normalize_mass(const ScalarField& f, const BackgroundData& bg, int m) {
  HermitianField base = bg.chi;
  base += bg.chi_tilde;
  const double n = bg.grid().dimension();
  ScalarField sm = form_elem_sym(base, bg, m);
  for (double& v : sm.data()) v /= binomial(static_cast<int>(n), m);
  const double target = integrate(sm, bg.volume);
  ScalarField em(f.grid(), 0.0);
  for (std::size_t p = 0; p < f.size(); ++p) em[p] = std::exp(m * f[p]);
  const double mass = integrate(em, bg.volume);
  if (!(target > 0.0) || !(mass > 0.0)) throw ConfigError("normalize_mass: nonpositive integral");
  const double shift = (std::log(target) - std::log(mass)) / m;
  ScalarField out = f;
  for (double& v : out.data()) v += shift;
  return out;
}

BackgroundData constant_background(const TorusGrid& grid, const std::vector<double>& omega_diag,
                                   const std::vector<double>& chi_diag, double kappa, int m) {
  const auto n = static_cast<std::size_t>(grid.dimension());
  if (omega_diag.size() != n || chi_diag.size() != n) throw ConfigError("background diagonals must have n entries");
  const HermitianMatrix omega = HermitianMatrix::diagonal(omega_diag);
  const HermitianMatrix chi = HermitianMatrix::diagonal(chi_diag);
  const HermitianMatrix tilde(kappa * omega.entries());
  return make_background(HermitianField::constant(grid, omega), HermitianField::constant(grid, chi),
                         HermitianField::constant(grid, tilde), kappa, m);
}

BackgroundData potential_background(const TorusGrid& grid, const std::vector<double>& omega_diag,
                                    const std::vector<double>& chi_diag, const TrigPolynomial& potential, double kappa,
                                    int m) {
  const auto n = static_cast<std::size_t>(grid.dimension());
  if (omega_diag.size() != n || chi_diag.size() != n) throw ConfigError("background diagonals must have n entries");
  const HermitianMatrix omega = HermitianMatrix::diagonal(omega_diag);
  HermitianField chi = HermitianField::constant(grid, HermitianMatrix::diagonal(chi_diag));
  chi += potential.exact_complex_hessian(grid);
  const HermitianMatrix tilde(kappa * omega.entries());
  return make_background(HermitianField::constant(grid, omega), std::move(chi), HermitianField::constant(grid, tilde),
                         kappa, m);
}

HermitianField stage_form(const BackgroundData& bg, double t) {
  HermitianField x = bg.chi;
  x += bg.chi_tilde;
  x.add_scaled(t, bg.omega);
  return x;
}

ScalarField manufactured_rhs(const BackgroundData& bg, double t, int m, const TrigPolynomial& phi_star, bool discrete) {
  const TorusGrid& grid = bg.grid();
  HermitianField x = stage_form(bg, t);
  if (discrete) {
    x += complex_hessian(phi_star.sample(grid));
  } else {
    x += phi_star.exact_complex_hessian(grid);
  }
  ScalarField sm = form_elem_sym(x, bg, m);
  const double logc = std::log(binomial(grid.dimension(), m));
  for (std::size_t p = 0; p < sm.size(); ++p) {
    if (!(sm[p] > 0.0)) throw ConeViolationError("manufactured_rhs: phi* leaves the cone", p, sm[p]);
    sm[p] = (std::log(sm[p]) - logc) / m;
  }
  return sm;
}

double amplitude_for_margin(const BackgroundData& bg, double t, int m, const TrigPolynomial& phi_star, double target) {
  const TorusGrid& grid = bg.grid();
  const HermitianField base = stage_form(bg, t);
  const HermitianField hess = phi_star.exact_complex_hessian(grid);
  auto margin = [&](double s) {
    HermitianField x = base;
    x.add_scaled(s, hess);
    return min_cone_margin(x, bg, m);
  };
  if (margin(1.0) >= target) return 1.0;
  if (margin(0.0) < target) throw ConfigError("amplitude_for_margin: background alone misses the target margin");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) >= target ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace hessianlab
