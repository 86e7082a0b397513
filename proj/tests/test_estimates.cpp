#include <doctest.h>

#include "hessianlab/commands.hpp"
#include "hessianlab/errors.hpp"
#include "hessianlab/estimates.hpp"
#include "hessianlab/generators.hpp"

#include <cmath>

using namespace hessianlab;

namespace {

const double kL = 2 * M_PI;

BackgroundData flat(const TorusGrid& g, double kappa = 1.0) {
  return constant_background(g, std::vector<double>(g.dimension(), 1.0), std::vector<double>(g.dimension(), 0.0),
                             kappa, 2);
}

IterationHypothesis sampled(IterationLemma lemma, double s_lo, double s_hi, int count, double (*phi)(double),
                            double delta, double alpha = 1.0) {
  IterationHypothesis h;
  h.lemma = lemma;
  h.delta = delta;
  h.alpha = alpha;
  for (int i = 0; i < count; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / (count - 1);
    h.samples.s.push_back(s);
    h.samples.phi.push_back(phi(s));
  }
  return h;
}

}  // namespace

TEST_CASE("iteration lemma bounds on hand-computed inputs") {
  CHECK(kolodziej_bound(1.0, 1.0, 1.0) == doctest::Approx(0.25));
  // C0 = (1 - 2^-delta) s0 / 2 makes the base equal to one.
  for (double d : {0.5, 1.0, 2.0}) CHECK(kolodziej_bound(0.5 * (1 - std::exp2(-d)) * 3.0, d, 3.0) == doctest::Approx(1.0));
  CHECK(degiorgi_threshold(1.0, 1.0, 1.0, 1.0) == doctest::Approx(4.0));
  CHECK(degiorgi_threshold(2.0, 1.0, 1.0, 0.0) == 0.0);
  CHECK(degiorgi_threshold(8.0, 3.0, 1.0, 1.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(kolodziej_bound(0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(degiorgi_threshold(1.0, 1.0, 1.0, -1.0), DomainError);
}

TEST_CASE("certify: phi = s has t(s - t) <= s^2 / 4") {
  const IterationHypothesis h = sampled(IterationLemma::Kolodziej, 0.0, 1.0, 101, [](double s) { return s; }, 1.0);
  const CertifyResult c = certify_iteration_hypothesis(h);
  REQUIRE(c.feasible);
  CHECK(c.c_min == doctest::Approx(0.25).epsilon(1e-12));
  const LemmaCheck lc = check_iteration_lemma(h);
  CHECK(lc.holds);
  CHECK(lc.bound == doctest::Approx(0.5 * 1.0 / (2 * 0.25)));
}

TEST_CASE("certify rejects the wrong monotonicity and short samples") {
  IterationHypothesis h = sampled(IterationLemma::Kolodziej, 0.0, 1.0, 11, [](double s) { return std::sin(6 * s); }, 1.0);
  CHECK_FALSE(certify_iteration_hypothesis(h).feasible);
  h = sampled(IterationLemma::DeGiorgi, 0.0, 1.0, 11, [](double s) { return s; }, 0.5);
  CHECK_FALSE(certify_iteration_hypothesis(h).feasible);
  h = sampled(IterationLemma::Kolodziej, 0.0, 1.0, 2, [](double s) { return s; }, 1.0);
  CHECK_FALSE(certify_iteration_hypothesis(h).feasible);
}

TEST_CASE("De Giorgi: compactly supported profile vanishes beyond the threshold") {
  const IterationHypothesis h =
      sampled(IterationLemma::DeGiorgi, 0.0, 20.0, 401, [](double s) { return std::max(0.0, 1.0 - s); }, 0.5, 1.0);
  const LemmaCheck lc = check_iteration_lemma(h);
  CHECK(lc.certified);
  CHECK(lc.holds);
  CHECK(lc.bound >= 1.0);
}

TEST_CASE("synthetic families satisfy both lemmas") {
  for (IterationLemma lemma : {IterationLemma::Kolodziej, IterationLemma::DeGiorgi}) {
    const auto fams = synthetic_families(lemma, 100, 42);
    REQUIRE(fams.size() == 100);
    int bad = 0;
    for (const auto& h : fams) {
      const LemmaCheck lc = check_iteration_lemma(h);
      if (!(lc.certified && lc.holds)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("level_set_mass is nonincreasing") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g);
  const ScalarField phi = normalize_sup(TrigPolynomial::random(2, kL, 1, 3, 1.0, 8).sample(g));
  const IterationSamples ls = level_set_mass(phi, ScalarField(g, 0.0), bg.volume, {0.0, 0.1, 0.2, 0.4, 1e6});
  for (std::size_t i = 1; i < ls.phi.size(); ++i) CHECK(ls.phi[i] <= ls.phi[i - 1]);
  CHECK(ls.phi.back() == 0.0);
}

TEST_CASE("uniqueness energy") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const ScalarField a = TrigPolynomial::random(2, kL, 1, 3, 1.0, 1).sample(g);
  const ScalarField b = TrigPolynomial::random(2, kL, 1, 3, 1.0, 2).sample(g);
  CHECK(uniqueness_energy(a, a, bg, 1.0) == 0.0);
  ScalarField shifted = a;
  for (double& v : shifted.data()) v += 0.7;
  CHECK(std::abs(uniqueness_energy(a, shifted, bg, 1.0)) < 1e-20);
  const double e = uniqueness_energy(a, b, bg, 1.0);
  CHECK(e > 0.0);
  ScalarField a2 = a, b2 = b;
  for (double& v : a2.data()) v *= 2;
  for (double& v : b2.data()) v *= 2;
  CHECK(uniqueness_energy(a2, b2, bg, 1.0) == doctest::Approx(4 * e));
  CHECK(normalized_uniqueness_energy(a, b, bg, 1.0) > 0.0);
}

TEST_CASE("viscosity check: exact solution is clean, a spike is caught") {
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  TrigPolynomial p = TrigPolynomial::random(2, kL, 1, 3, 1.0, 3);
  p = p.scaled(amplitude_for_margin(bg, 1.0, 2, p, 0.1));
  const ScalarField f = manufactured_rhs(bg, 1.0, 2, p, true);
  ScalarField phi = p.sample(g);
  const ViscosityReport clean = viscosity_check(phi, 0.0, bg, 1.0, f, 2, 0);
  CHECK(clean.checked == static_cast<int>(g.size()));
  CHECK(clean.violations() == 0);
  // On a coarse grid the spike must beat 2 h^2 growth in the stencil.
  phi[g.size() / 2] += 20.0;
  const ViscosityReport dirty = viscosity_check(phi, 0.0, bg, 1.0, f, 2, 0);
  CHECK(dirty.violations() >= 1);
}

TEST_CASE("trace monitor on constant data") {
  const TorusGrid g(2, 4, kL);
  const BackgroundData bg = flat(g, 0.5);
  SolverState s;
  s.phi = ScalarField(g, 0.0);
  s.b = std::log(1.5 / 0.5);
  const MonitorReport rep = laplacian_monitor(s, bg, 1.0, normalize_mass(ScalarField(g, 0.0), bg, 2), 2);
  REQUIRE_FALSE(rep.skipped);
  CHECK(rep.sup_w == doctest::Approx(2 * 1.5));
  CHECK(rep.trace_consistency < 1e-11);
  CHECK(rep.bound_holds);

  const BackgroundData degenerate = flat(g, 0.0);
  CHECK(laplacian_monitor(s, degenerate, 1.0, ScalarField(g, 0.0), 2).skipped);

  HermitianField omega(g);
  for (std::size_t p = 0; p < g.size(); ++p)
    omega.set(p, Eigen::MatrixXcd::Identity(2, 2) * (1.0 + 0.1 * std::sin(g.position(p, 0))));
  HermitianField zero(g);
  for (std::size_t p = 0; p < g.size(); ++p) zero.set(p, Eigen::MatrixXcd::Zero(2, 2));
  HermitianField tilde = omega;
  const BackgroundData varying = make_background(omega, zero, tilde, 1.0, 2);
  CHECK(laplacian_monitor(s, varying, 1.0, ScalarField(g, 0.0), 2).skipped);
}

TEST_CASE("sup-norm uniformity table") {
  const TorusGrid g(2, 4, kL);
  const BackgroundData bg = flat(g);
  std::vector<ScalarField> phis;
  for (double a : {1.0, 1.0, 2.0}) phis.push_back(ScalarField(g, -a));
  UniformityReport r = linf_uniformity_report({1.0, 0.5, 0.25}, phis, ScalarField(g, 0.0), 2.0, bg.volume);
  CHECK(r.max_linf == doctest::Approx(2.0));
  CHECK(r.median_linf == doctest::Approx(1.0));
  CHECK(r.passes);
  phis[2] = ScalarField(g, -5.0);
  r = linf_uniformity_report({1.0, 0.5, 0.25}, phis, ScalarField(g, 0.0), 2.0, bg.volume);
  CHECK_FALSE(r.passes);
  CHECK_THROWS(linf_uniformity_report({1.0}, phis, ScalarField(g, 0.0), 2.0, bg.volume));
}

TEST_CASE("stability exponent and experiment") {
  CHECK(stability_exponent(2, 2.0, 1.0, 0.5) == doctest::Approx(1.0 / 5.5));
  const TorusGrid g(2, 6, kL);
  const BackgroundData bg = flat(g, 1.0);
  const ScalarField f = normalize_mass(ScalarField(g, 0.0), bg, 2);
  SolverConfig cfg;

  const StabilityResult none = stability_experiment(bg, 1.0, f, ScalarField(g, 0.0), {0.1, 0.2}, {}, cfg);
  CHECK_FALSE(none.fitted);
  for (const auto& r : none.records) CHECK(r.sup_gap == doctest::Approx(0.0).epsilon(1e-9));

  const ScalarField bump = gaussian_bump(g, std::vector<double>(4, M_PI), 0.8, 0.5);
  const StabilityResult res = stability_experiment(bg, 1.0, f, bump, {0.05, 0.1, 0.2, 0.4}, {}, cfg);
  CHECK_FALSE(res.partial);
  REQUIRE(res.fitted);
  CHECK(res.monotone);
  CHECK(res.fitted_exponent >= res.floor);
  CHECK(res.bound_finite);
  for (const auto& r : res.records) CHECK(r.sup_gap <= r.centered_oscillation + 1e-12);
}
