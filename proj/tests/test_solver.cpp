#include <doctest.h>

#include "hessianlab/errors.hpp"
#include "hessianlab/generators.hpp"
#include "hessianlab/solver.hpp"

#include <cmath>

using namespace hessianlab;

namespace {

const double kL = 2 * M_PI;

double sup_abs(const ScalarField& u) { return std::max(std::abs(u.max()), std::abs(u.min())); }

BackgroundData flat(const TorusGrid& g, double kappa = 1.0) {
  return constant_background(g, std::vector<double>(g.dimension(), 1.0), std::vector<double>(g.dimension(), 0.0),
                             kappa, 2);
}

struct Manufactured {
  TrigPolynomial phi;
  ScalarField f;
};

Manufactured manufactured(const BackgroundData& bg, bool discrete, std::uint64_t seed = 3) {
  TrigPolynomial p = TrigPolynomial::random(bg.grid().dimension(), kL, 1, 3, 1.0, seed);
  p = p.scaled(amplitude_for_margin(bg, 1.0, 2, p, 0.1));
  return {p, manufactured_rhs(bg, 1.0, 2, p, discrete)};
}

}  // namespace

TEST_CASE("residual vanishes on exact solutions") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  // Constant data: phi = 0 with b from the constant balance.
  const ScalarField f0(g, 0.3);
  const double b = std::log(2.0) - 0.3;  // S_2((1+1) I) = C(2,2) 2^2
  CHECK(sup_abs(residual(ScalarField(g, 0.0), b, bg, 1.0, f0, 2)) < 1e-13);
  // Manufactured with the difference stencil: phi* is the discrete solution with b = 0.
  const Manufactured mf = manufactured(bg, true);
  CHECK(sup_abs(residual(mf.phi.sample(g), 0.0, bg, 1.0, mf.f, 2)) < 1e-12);
}

TEST_CASE("residual refuses states outside the cone") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 0.1);
  ScalarField phi(g, 0.0);
  phi[0] = 5.0;  // a sharp local max drives the Hessian far negative
  CHECK_THROWS_AS(residual(phi, 0.0, bg, 0.1, ScalarField(g, 0.0), 2), ConeViolationError);
}

TEST_CASE("linearization matches central differences of the residual") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const Manufactured mf = manufactured(bg, true);
  const StageProblem prob = make_stage(bg, 1.0, mf.f, 2);
  const ScalarField phi = mf.phi.sample(g);
  const ScalarField v = TrigPolynomial::random(2, kL, 2, 2, 0.5, 11).sample(g);
  const double beta = 0.7;
  const ScalarField lin = apply_linearization(prob, phi, 0.0, v, beta);

  auto fd_error = [&](double e) {
    ScalarField plus = phi, minus = phi;
    for (std::size_t p = 0; p < g.size(); ++p) {
      plus[p] += e * v[p];
      minus[p] -= e * v[p];
    }
    const ScalarField rp = residual(plus, e * beta, bg, 1.0, mf.f, 2);
    const ScalarField rm = residual(minus, -e * beta, bg, 1.0, mf.f, 2);
    double err = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) err = std::max(err, std::abs((rp[p] - rm[p]) / (2 * e) - lin[p]));
    return err;
  };
  const double e1 = fd_error(1e-2), e2 = fd_error(5e-3);
  CHECK(e1 < 1e-3);
  // Central differences are second order.
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("newton_step keeps an exact solution fixed") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const Manufactured mf = manufactured(bg, true);
  const StageProblem prob = make_stage(bg, 1.0, mf.f, 2);
  SolverState s;
  s.phi = normalize_sup(mf.phi.sample(g));
  const SolverState next = newton_step(s, prob, SolverConfig{});
  double diff = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) diff = std::max(diff, std::abs(next.phi[p] - s.phi[p]));
  CHECK(diff < 1e-10);
  CHECK(std::abs(next.b) < 1e-10);
}

TEST_CASE("solve_nondegenerate converges quadratically and recovers phi*") {
  const TorusGrid g(2, 8, kL);
  const BackgroundData bg = flat(g, 1.0);
  const Manufactured mf = manufactured(bg, true);
  SolverConfig cfg;
  cfg.newton_tol = 1e-11;
  const SolveResult r = solve_nondegenerate(bg, 1.0, mf.f, cfg);
  REQUIRE(r.record.converged);
  CHECK(r.record.iters <= 30);
  CHECK(r.state.cone_margin_min > 0.0);
  CHECK(std::abs(r.state.b) < 1e-9);
  // phi is determined up to a constant.
  const ScalarField star = mf.phi.sample(g);
  const double shift = r.state.phi[0] - star[0];
  for (std::size_t p = 0; p < g.size(); p += 7) CHECK(r.state.phi[p] - star[p] == doctest::Approx(shift).epsilon(1e-8));
  // Quadratic tail: the last reduction beats the previous ratio squared (up to slack).
  const auto& h = r.record.residual_history;
  REQUIRE(h.size() >= 3);
  const std::size_t k = h.size() - 1;
  if (h[k - 2] > 1e-6) CHECK(h[k] <= 10 * h[k - 1] * h[k - 1] / h[k - 2]);
  CHECK(r.record.ellipticity_min > 0.0);
}

TEST_CASE("compatibility constant and integral compatibility") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const ScalarField zero(g, 0.0);
  for (double t : {1.0, 0.25, 0.0}) CHECK(compatibility_constant(bg, t, zero, 2) == doctest::Approx(std::log1p(t)));
  // Solving with a nonconstant f reproduces b up to the discrete determinant term.
  const ScalarField f = normalize_mass(gaussian_bump(g, std::vector<double>(4, M_PI), 0.8, 0.4), bg, 2);
  SolverConfig cfg;
  const SolveResult r = solve_nondegenerate(bg, 0.5, f, cfg);
  REQUIRE(r.record.converged);
  CHECK(r.state.b == doctest::Approx(compatibility_constant(bg, 0.5, f, 2)).epsilon(0.05));
}

TEST_CASE("Maclaurin along a solve: F <= S1/n") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const Manufactured mf = manufactured(bg, false);
  const SolveResult r = solve_nondegenerate(bg, 1.0, mf.f, SolverConfig{});
  REQUIRE(r.record.converged);
  HermitianField form = stage_form(bg, 1.0);
  form += complex_hessian(r.state.phi);
  const ScalarField s1 = form_elem_sym(form, bg, 1), s2 = form_elem_sym(form, bg, 2);
  for (std::size_t p = 0; p < g.size(); ++p) CHECK(std::sqrt(s2[p]) <= s1[p] / 2 + 1e-12);
}

TEST_CASE("continuation on constant data follows b_t = log((kappa + t)/kappa)") {
  const TorusGrid g(2, 4, kL);
  const double kappa = 0.5;
  const BackgroundData bg = flat(g, kappa);
  const ScalarField f = normalize_mass(ScalarField(g, 0.0), bg, 2);
  const ContinuationSchedule sched = ContinuationSchedule::geometric(5);
  const ContinuationResult res = continuation_degenerate(bg, f, sched, SolverConfig{});
  REQUIRE(res.report.completed);
  REQUIRE(res.report.stages.size() == 5);
  for (const StageRecord& st : res.report.stages) {
    CHECK(st.b == doctest::Approx(std::log((kappa + st.t) / kappa)).epsilon(1e-10));
    CHECK(st.sup_phi == doctest::Approx(0.0));
  }
  CHECK(res.report.b_monotone);
  for (const BracketRecord& br : res.report.brackets) CHECK(br.holds);
}

TEST_CASE("schedule validation and mollification widths") {
  ContinuationSchedule s = ContinuationSchedule::geometric(4, 1.0, 0.5);
  CHECK(s.t_values == std::vector<double>{1.0, 0.5, 0.25, 0.125});
  s.set_stage_mollification(0.1);
  CHECK(s.mollification_sigmas == std::vector<double>{0.8, 0.4, 0.2, 0.1});
  ContinuationSchedule bad;
  bad.t_values = {0.5, 1.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("decreasing sequence") {
  const TorusGrid g(2, 4, kL);
  const ScalarField a = TrigPolynomial::random(2, kL, 1, 2, 1.0, 9).sample(g);
  const DecreasingSequence same = decreasing_sequence(std::vector<ScalarField>{a, a, a}, 1.0);
  CHECK(same.adjustment == 0.0);
  for (std::size_t p = 0; p < g.size(); ++p) {
    CHECK(same.psi[1][p] <= same.psi[0][p]);
    CHECK(same.psi[2][p] <= same.psi[1][p]);
  }
  // phi_1 = phi_0 + d needs C/2 >= d.
  const double d = 0.3;
  ScalarField b = a;
  for (auto& v : b.data()) v += d;
  CHECK(minimal_cap_constant({a, b}) == doctest::Approx(2 * d));
  const DecreasingSequence adj = decreasing_sequence(std::vector<ScalarField>{a, b}, 0.1);
  CHECK(adj.c_final >= 2 * d - 1e-12);
  CHECK(adj.adjustment > 0.0);
  CHECK(adj.violation == doctest::Approx(d - 0.05));
}

TEST_CASE("normalize_sup") {
  const TorusGrid g(2, 4, kL);
  const ScalarField a = TrigPolynomial::random(2, kL, 1, 2, 1.0, 2).sample(g);
  const ScalarField n = normalize_sup(a);
  CHECK(n.max() == doctest::Approx(0.0));
  CHECK(n[5] - n[3] == doctest::Approx(a[5] - a[3]));
}
