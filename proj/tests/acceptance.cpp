// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "hessianlab/commands.hpp"
#include "hessianlab/config.hpp"
#include "hessianlab/estimates.hpp"
#include "hessianlab/generators.hpp"
#include "hessianlab/solver.hpp"
#include "hessianlab/symmetric.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

using namespace hessianlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

void guarded(int id, const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double sup_abs(const ScalarField& u) { return std::max(std::abs(u.max()), std::abs(u.min())); }

// inf_c sup |a - b - c|
double centered_sup_diff(const ScalarField& a, const ScalarField& b) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t p = 0; p < a.size(); ++p) {
    lo = std::min(lo, a[p] - b[p]);
    hi = std::max(hi, a[p] - b[p]);
  }
  return 0.5 * (hi - lo);
}

// Subset-sum oracle for S_k, independent of the library recurrences.
double subset_sum(const Eigen::VectorXd& lam, int k, bool absolute) {
  const int n = static_cast<int>(lam.size());
  double s = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) prod *= absolute ? std::abs(lam[i]) : lam[i];
    s += prod;
  }
  return s;
}

ExperimentConfig base_config(const std::string& extra) {
  return parse_config("[problem]\nn = 2\nm = 2\nN = 12\nf = manufactured\n" + extra);
}

// ------------------------------------------------------------------ 1

void algebra_kernel() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 4;
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
    const HermitianMatrix h(Eigen::MatrixXcd(0.5 * (a + a.adjoint())));
    const Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h.entries()).eigenvalues();
    const EigenTuple tuple(lam);
    for (int k = 1; k <= n; ++k) {
      // Relative to S_k(|lambda|), the natural scale when terms cancel.
      const double scale = std::max(subset_sum(lam, k, true), 1e-300);
      const double ref = subset_sum(lam, k, false);
      worst = std::max(worst, std::abs(elem_sym(tuple, k) - ref) / scale);
      worst = std::max(worst, std::abs(elem_sym_minors(h, k) - ref) / scale);
    }
  }
  const double secs = seconds_since(t0);
  report(1, "elementary symmetric kernels agree", worst < 1e-10 && secs < 10.0,
         fmt("max relative error %.2e on 1000 matrices, %.2f s", worst, secs));
}

// ------------------------------------------------------------------ 2

void inequality_suite() {
  std::mt19937_64 rng(77);
  double worst_mac = INFINITY, worst_gar = INFINITY, worst_conc = INFINITY, worst_euler = 0.0;
  const std::pair<int, int> cases[] = {{2, 2}, {3, 2}, {3, 3}, {4, 2}};
  for (auto [n, m] : cases) {
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    const ConeSpec spec{n, m, 0.0, false};
    auto draw = [&] {
      for (;;) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = u(rng);
        EigenTuple t(v);
        if (cone_membership(t, spec).is_member) return t;
      }
    };
    for (int s = 0; s < 10000; ++s) {
      const EigenTuple a = draw(), b = draw();
      worst_mac = std::min(worst_mac, check_maclaurin(a, m));
      worst_gar = std::min(worst_gar, check_garding(a, b, m) / std::max(1.0, elem_sym(a, m)));
      const EigenTuple mid(0.5 * (a.values() + b.values()));
      const double fa = std::pow(elem_sym(a, m), 1.0 / m), fb = std::pow(elem_sym(b, m), 1.0 / m);
      worst_conc = std::min(worst_conc, std::pow(elem_sym(mid, m), 1.0 / m) - 0.5 * (fa + fb));
      const double euler = a.values().dot(grad_elem_sym(a, m));
      const double sm = elem_sym(a, m);
      worst_euler = std::max(worst_euler, std::abs(euler - m * sm) / std::max(std::abs(m * sm), 1e-300));
    }
  }
  const bool ok = worst_mac >= -1e-10 && worst_gar >= -1e-10 && worst_conc >= -1e-10 && worst_euler < 1e-11;
  report(2, "Maclaurin, Garding, concavity, Euler", ok,
         fmt("min gaps %.2e / %.2e / %.2e, Euler %.2e", worst_mac, worst_gar, worst_conc, worst_euler));
}

// ------------------------------------------------------------------ 3

void manufactured_convergence() {
  const ExperimentConfig cfg = base_config("phi_star_margin = 0.1\n");
  double err[2] = {0, 0}, secs[2] = {0, 0};
  int iters[2] = {0, 0};
  bool converged = true;
  double margin = INFINITY;
  const int grids[2] = {12, 24};
  for (int i = 0; i < 2; ++i) {
    const ProblemData prob = build_problem(cfg, grids[i]);
    HermitianField form = stage_form(prob.bg, 1.0);
    form += prob.phi_star->exact_complex_hessian(prob.grid);
    margin = std::min(margin, min_cone_margin(form, prob.bg, 2));
    const auto t0 = Clock::now();
    const SolveResult r = solve_nondegenerate(prob.bg, 1.0, prob.f, cfg.solver);
    secs[i] = seconds_since(t0);
    iters[i] = r.record.iters;
    converged = converged && r.record.converged;
    err[i] = centered_sup_diff(r.state.phi, prob.phi_star->sample(prob.grid));
  }
  const double ratio = err[0] / err[1];
  const bool ok = converged && ratio >= 3.0 && ratio <= 5.0 && iters[0] <= 30 && iters[1] <= 30 && secs[0] < 120 &&
                  secs[1] < 120 && margin >= 0.1 - 1e-9;
  report(3, "manufactured second-order convergence", ok,
         fmt("errors %.3e -> %.3e, ratio %.3f, iterations %d/%d, %.1f s/%.1f s, margin %.3f", err[0], err[1], ratio,
             iters[0], iters[1], secs[0], secs[1], margin));
}

// ------------------------------------------------------------------ 4, 5, 6

void continuation_family() {
  const ExperimentConfig cfg = base_config("");
  const ProblemData prob = build_problem(cfg);
  const ContinuationSchedule sched = ContinuationSchedule::geometric(12);
  const auto t0 = Clock::now();
  const ContinuationResult res = continuation_degenerate(prob.bg, prob.f, sched, cfg.solver);
  const double secs = seconds_since(t0);
  const SolveReport& rep = res.report;

  guarded(4, "compatibility brackets", [&] {
    // Evaluated directly from both sides, with 1e-9 slack.
    bool ok = rep.completed && rep.brackets.size() == sched.t_values.size();
    double worst = INFINITY;
    for (const auto& b : rep.brackets) {
      const bool holds = b.lower <= b.middle + 1e-9 && b.middle <= b.upper + 1e-9;
      ok = ok && holds;
      worst = std::min({worst, b.middle - b.lower, b.upper - b.middle});
    }
    report(4, "compatibility brackets", ok,
           fmt("%zu stages, smallest slack %.3e (%.1f s)", rep.brackets.size(), worst, secs));
  });

  guarded(5, "t-uniform sup norm", [&] {
    std::vector<ScalarField> phis;
    for (const auto& s : res.states) phis.push_back(s.phi);
    const UniformityReport u =
        linf_uniformity_report(sched.t_values, phis, prob.f, cfg.problem.p, prob.bg.volume);
    const bool ok = rep.completed && phis.size() == 12 && u.passes &&
                    sched.t_values.back() == std::ldexp(1.0, -11);
    report(5, "t-uniform sup norm", ok, fmt("max %.4f, median %.4f over %zu stages", u.max_linf, u.median_linf, phis.size()));
  });

  guarded(6, "decreasing sequence", [&] {
    std::vector<ScalarField> phis;
    for (const auto& s : res.states) phis.push_back(s.phi);
    const DecreasingSequence d = decreasing_sequence(phis, default_cap_constant(phis));
    int adjustments = d.adjustment > 0.0 ? 1 : 0;
    double worst = -INFINITY;
    for (std::size_t i = 1; i < d.psi.size(); ++i)
      for (std::size_t p = 0; p < d.psi[i].size(); ++p) worst = std::max(worst, d.psi[i][p] - d.psi[i - 1][p]);
    report(6, "decreasing sequence", rep.completed && adjustments <= 1 && worst <= 0.0,
           fmt("C %.4f, adjustments %d, max increment %.3e", d.c_final, adjustments, worst));
  });
}

// ------------------------------------------------------------------ 7

void iteration_lemmas() {
  int violations = 0, uncertified = 0;
  for (auto lemma : {IterationLemma::Kolodziej, IterationLemma::DeGiorgi}) {
    const auto fams = synthetic_families(lemma, 100, 31);
    for (const auto& h : fams) {
      const LemmaCheck c = check_iteration_lemma(h, 1e-12);
      if (!c.certified) ++uncertified;
      else if (!c.holds) ++violations;
    }
  }
  report(7, "iteration lemmas", violations == 0 && uncertified == 0,
         fmt("200 families, %d violations, %d uncertified", violations, uncertified));
}

// ------------------------------------------------------------------ 8

void stability() {
  const ExperimentConfig cfg = parse_config("[problem]\nN = 12\nf = bump\nq = 2\nq_prime = 1\n");
  const ProblemData prob = build_problem(cfg);
  const ScalarField pert = gaussian_bump(prob.grid, std::vector<double>(4, M_PI), 0.6, 0.5);
  StabilityOptions opt;
  opt.q = 2.0;
  opt.q_prime = 1.0;
  opt.epsilon = 0.5;
  const StabilityResult r =
      stability_experiment(prob.bg, 1.0, prob.f, pert, cfg.experiment.scales, opt, cfg.solver);
  // Smallest C with sup_gap <= C gap^floor over every scale.
  double c = 0.0;
  bool finite = !r.records.empty();
  for (const auto& rec : r.records) {
    if (!rec.converged) finite = false;
    else if (rec.sup_gap > 0.0) {
      if (rec.lq_gap_plus <= 0.0) finite = false;
      else c = std::max(c, rec.sup_gap / std::pow(rec.lq_gap_plus, r.floor));
    }
  }
  finite = finite && std::isfinite(c);
  const bool ok = !r.partial && r.fitted && r.fitted_exponent >= r.floor && finite;
  report(8, "stability exponent", ok,
         fmt("fitted %.4f vs floor %.4f (predicted %.4f), C %.4g", r.fitted ? r.fitted_exponent : NAN, r.floor,
             r.predicted_exponent, c));
}

// ------------------------------------------------------------------ 9

void uniqueness() {
  const ExperimentConfig cfg = base_config("");
  const ProblemData prob = build_problem(cfg);
  const SolveResult a = solve_nondegenerate(prob.bg, 1.0, prob.f, cfg.solver);
  const ScalarField noise = seeded_noise(prob.bg, 1.0, 2, 0.01, 0.05, 99);
  const SolveResult b = solve_nondegenerate(prob.bg, 1.0, prob.f, cfg.solver, noise);
  double sup_diff = 0.0;
  for (std::size_t p = 0; p < prob.grid.size(); ++p) sup_diff = std::max(sup_diff, std::abs(a.state.phi[p] - b.state.phi[p]));
  const double e = normalized_uniqueness_energy(a.state.phi, b.state.phi, prob.bg, 1.0);
  const bool ok = a.record.converged && b.record.converged && std::abs(e) < 1e-8 && sup_diff < 10 * cfg.solver.newton_tol;
  report(9, "uniqueness from two starts", ok, fmt("normalized energy %.2e, sup difference %.2e", e, sup_diff));
}

// ------------------------------------------------------------------ 10

void viscosity() {
  std::string detail;
  bool ok = true;
  for (int N : {12, 16, 24}) {
    const ExperimentConfig cfg = base_config("phi_star_discrete = true\nnormalize = false\n");
    const ProblemData prob = build_problem(cfg, N);
    const ScalarField phi = prob.phi_star->sample(prob.grid);
    // Unshifted f keeps phi* an exact discrete solution with b = 0.
    const ViscosityReport v = viscosity_check(phi, 0.0, prob.bg, 1.0, prob.f, 2, 0, 5);
    ok = ok && v.violations() == 0 && v.checked == static_cast<int>(prob.grid.size());
    detail += fmt("N=%d: %d/%d violations; ", N, v.violations(), v.checked);
  }
  const ExperimentConfig cfg = base_config("phi_star_discrete = true\nnormalize = false\n");
  const ProblemData prob = build_problem(cfg);
  ScalarField spiked = prob.phi_star->sample(prob.grid);
  spiked[prob.grid.size() / 2] += 1.0;
  const ViscosityReport v = viscosity_check(spiked, 0.0, prob.bg, 1.0, prob.f, 2, 0, 5);
  ok = ok && v.violations() >= 1;
  detail += fmt("spike: %d violations", v.violations());
  report(10, "viscosity touching test", ok, detail);
}

// ------------------------------------------------------------------ 11

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "hessianlab_acceptance_determinism";
  fs::remove_all(root);
  std::string files[2];
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cfg = base_config("[run]\nseed = 17\n");
    cfg.run.output_dir = root / ("run" + std::to_string(i));
    std::ostringstream err;
    codes[i] = cmd_continuation(cfg, err);
    files[i] = slurp(cfg.run.output_dir / "phi.hlf1");
  }
  const bool ok = codes[0] == 0 && codes[1] == 0 && !files[0].empty() && files[0] == files[1];
  report(11, "bit-identical reruns", ok, fmt("exit codes %d/%d, %zu bytes, identical: %s", codes[0], codes[1],
                                             files[0].size(), files[0] == files[1] ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  guarded(1, "elementary symmetric kernels agree", algebra_kernel);
  guarded(2, "Maclaurin, Garding, concavity, Euler", inequality_suite);
  guarded(3, "manufactured second-order convergence", manufactured_convergence);
  try {
    continuation_family();
  } catch (const std::exception& e) {
    for (int id : {4, 5, 6}) report(id, "continuation family", false, std::string("exception: ") + e.what());
  }
  guarded(7, "iteration lemmas", iteration_lemmas);
  guarded(8, "stability exponent", stability);
  guarded(9, "uniqueness from two starts", uniqueness);
  guarded(10, "viscosity touching test", viscosity);
  guarded(11, "bit-identical reruns", determinism);
  std::printf("%d failure(s), %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
