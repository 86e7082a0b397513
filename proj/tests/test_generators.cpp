#include <doctest.h>

#include "hessianlab/generators.hpp"
#include "hessianlab/solver.hpp"

#include <cmath>

using namespace hessianlab;

TEST_CASE("TrigPolynomial: exact Hessian against central differences of value()") {
  const double L = 2 * M_PI;
  const TrigPolynomial poly = TrigPolynomial::random(2, L, 2, 4, 1.0, 5);
  const double x0[4] = {0.3, 1.7, 2.2, 5.1};
  double d[16];
  poly.real_hessian(x0, d);
  const double e = 1e-4;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      auto at = [&](double sa, double sb) {
        double x[4] = {x0[0], x0[1], x0[2], x0[3]};
        x[a] += sa;
        x[b] += sb;
        return poly.value(x);
      };
      const double fd = (at(e, e) - at(e, -e) - at(-e, e) + at(-e, -e)) / (4 * e * e);
      CHECK(fd == doctest::Approx(d[a * 4 + b]).epsilon(1e-6));
    }
}

TEST_CASE("TrigPolynomial: random is rescaled to the requested Hessian size and scaled() is linear") {
  const double L = 2 * M_PI;
  const TrigPolynomial poly = TrigPolynomial::random(2, L, 1, 3, 0.4, 6);
  const TorusGrid g(2, 12, L);
  const HermitianField h = poly.exact_complex_hessian(g);
  double top = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) top = std::max(top, h.at(p).cwiseAbs().maxCoeff());
  CHECK(top <= 0.4 * (1 + 1e-12));
  CHECK(top > 0.1);
  const ScalarField a = poly.sample(g), b = poly.scaled(-2.0).sample(g);
  for (std::size_t p = 0; p < g.size(); p += 13) CHECK(b[p] == doctest::Approx(-2.0 * a[p]));
  // Same seed, same polynomial.
  CHECK(TrigPolynomial::random(2, L, 1, 3, 0.4, 6).sample(g).data() == a.data());
}

TEST_CASE("gaussian_bump and lq_sample") {
  const double L = 2 * M_PI;
  const TorusGrid g(2, 8, L);
  const std::vector<double> centre(4, 0.0);
  const ScalarField bump = gaussian_bump(g, centre, 0.5, 2.0);
  CHECK(bump[0] == doctest::Approx(2.0));
  // Minimum image: the neighbour across the seam sits at distance h.
  Coords c{};
  c[0] = 7;
  CHECK(bump[g.index(c)] == doctest::Approx(2.0 * std::exp(-g.spacing() * g.spacing() / (2 * 0.25))));

  const double a = 1.5, cap = 30.0;
  const ScalarField f = lq_sample(g, centre, a, cap);
  CHECK(std::exp(2 * f[0]) == doctest::Approx(cap));
  c[0] = 2;
  const double r = 2 * g.spacing();
  CHECK(std::exp(2 * f[g.index(c)]) == doctest::Approx(std::min(cap, std::pow(r, -a))));
}

TEST_CASE("normalize_mass matches both sides of the equation") {
  const double L = 2 * M_PI;
  const TorusGrid g(2, 8, L);
  const BackgroundData bg = constant_background(g, {1.0, 2.0}, {0.5, 0.2}, 0.7, 2);
  const ScalarField f = gaussian_bump(g, std::vector<double>(4, M_PI), 0.8, 0.6);
  const ScalarField fn = normalize_mass(f, bg, 2);
  ScalarField e(g, 0.0);
  for (std::size_t p = 0; p < g.size(); ++p) e[p] = std::exp(2 * fn[p]);
  HermitianField base = bg.chi;
  base += bg.chi_tilde;
  const double rhs = integrate(form_elem_sym(base, bg, 2), bg.volume) / binomial(2, 2);
  CHECK(integrate(e, bg.volume) == doctest::Approx(rhs).epsilon(1e-12));
  // A pure shift.
  for (std::size_t p = 1; p < g.size(); p += 11) CHECK(fn[p] - f[p] == doctest::Approx(fn[0] - f[0]));
}

TEST_CASE("constant_background and stage_form") {
  const TorusGrid g(2, 4, 1.0);
  const BackgroundData bg = constant_background(g, {1.0, 2.0}, {0.0, 0.0}, 0.5, 2);
  const HermitianField s = stage_form(bg, 0.25);
  CHECK(s.at(3)(0, 0).real() == doctest::Approx(0.75));
  CHECK(s.at(3)(1, 1).real() == doctest::Approx(1.5));
  CHECK(form_elem_sym(s, bg, 2)[0] == doctest::Approx(0.75 * 0.75));
}

TEST_CASE("manufactured right-hand side closes the loop") {
  const double L = 2 * M_PI;
  const TorusGrid g(2, 8, L);
  const BackgroundData bg = constant_background(g, {1.0, 1.0}, {0.0, 0.0}, 1.0, 2);
  TrigPolynomial phi = TrigPolynomial::random(2, L, 1, 3, 1.0, 4);
  const double s = amplitude_for_margin(bg, 1.0, 2, phi, 0.1);
  CHECK(s > 0.0);
  CHECK(s <= 1.0);
  phi = phi.scaled(s);
  HermitianField form = stage_form(bg, 1.0);
  form += phi.exact_complex_hessian(g);
  CHECK(min_cone_margin(form, bg, 2) >= 0.1 - 1e-9);

  const ScalarField f = manufactured_rhs(bg, 1.0, 2, phi, true);
  const ScalarField r = residual(phi.sample(g), 0.0, bg, 1.0, f, 2);
  CHECK(std::max(std::abs(r.max()), std::abs(r.min())) < 1e-12);
}
