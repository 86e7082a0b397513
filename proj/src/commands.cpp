#include "hessianlab/commands.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/field_io.hpp"
#include "hessianlab/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace hessianlab {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- problem assembly

namespace {

std::vector<double> torus_centre(int n, double L) { return std::vector<double>(2 * n, 0.5 * L); }

ScalarField build_rhs(const ExperimentConfig& cfg, const TorusGrid& grid, const BackgroundData& bg,
                      std::optional<TrigPolynomial>& phi_star) {
  const auto& p = cfg.problem;
  const std::vector<double> centre = p.f_center.empty() ? torus_centre(p.n, p.L) : p.f_center;
  ScalarField f;
  switch (p.f) {
    case RhsKind::Constant:
      f = constant_field(grid, p.f_value);
      break;
    case RhsKind::Trig: {
      const auto poly = TrigPolynomial::random(p.n, p.L, p.f_wavenumber, p.f_modes, 1.0, cfg.run.seed + 17);
      f = poly.sample(grid);
      // Rescale to the requested sup amplitude.
      const double top = std::max(std::abs(f.max()), std::abs(f.min()));
      for (double& v : f.data()) v = p.f_value + (top > 0.0 ? p.f_amplitude * v / top : 0.0);
      break;
    }
    case RhsKind::Bump:
      f = gaussian_bump(grid, centre, p.f_width, p.f_amplitude);
      for (double& v : f.data()) v += p.f_value;
      break;
    case RhsKind::LqSample:
      f = lq_sample(grid, centre, p.f_exponent, p.f_cap);
      break;
    case RhsKind::Manufactured: {
      TrigPolynomial poly = TrigPolynomial::random(p.n, p.L, p.phi_star_wavenumber, p.phi_star_modes, 1.0, cfg.run.seed);
      poly = poly.scaled(amplitude_for_margin(bg, p.t, p.m, poly, p.phi_star_margin));
      f = manufactured_rhs(bg, p.t, p.m, poly, p.phi_star_discrete);
      phi_star = poly;
      break;
    }
    case RhsKind::File: {
      f = load_scalar_field(p.f_path, p.L);
      if (!(f.grid() == grid)) throw ConfigError("config key 'problem.f_path': field grid does not match n, N, L");
      break;
    }
  }
  if (!f.all_finite()) throw ConfigError("config key 'problem.f': right-hand side is not finite");
  if (p.normalize) f = normalize_mass(f, bg, p.m);
  return f;
}

}  // namespace

ProblemData build_problem(const ExperimentConfig& cfg) { return build_problem(cfg, cfg.problem.N); }

ProblemData build_problem(const ExperimentConfig& cfg, int N) {
  const auto& p = cfg.problem;
  ProblemData d;
  d.grid = TorusGrid(p.n, N, p.L);
  if (p.potential_modes > 0) {
    const auto pot = TrigPolynomial::random(p.n, p.L, p.potential_wavenumber, p.potential_modes, p.potential_scale,
                                            cfg.run.seed + 7);
    d.bg = potential_background(d.grid, p.omega_diag, p.chi_diag, pot, p.kappa, p.m);
  } else {
    d.bg = constant_background(d.grid, p.omega_diag, p.chi_diag, p.kappa, p.m);
  }
  d.f = build_rhs(cfg, d.grid, d.bg, d.phi_star);
  return d;
}

ScalarField seeded_noise(const BackgroundData& bg, double t, int m, double amplitude, double margin,
                         std::uint64_t seed) {
  const TorusGrid& grid = bg.grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ScalarField raw(grid, 0.0);
  for (double& v : raw.data()) v = unif(rng);
  const HermitianField base = stage_form(bg, t);
  const HermitianField h = complex_hessian(raw);
  double a = amplitude;
  for (int k = 0; k < 60; ++k, a *= 0.5) {
    HermitianField form = base;
    form.add_scaled(a, h);
    if (min_cone_margin(form, bg, m) >= margin) break;
  }
  for (double& v : raw.data()) v *= a;
  return raw;
}

std::vector<IterationHypothesis> synthetic_families(IterationLemma lemma, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * u01(rng); };
  std::vector<IterationHypothesis> out;
  constexpr int kSamples = 241;
  while (static_cast<int>(out.size()) < count) {
    IterationHypothesis h;
    h.lemma = lemma;
    if (lemma == IterationLemma::Kolodziej) {
      // phi(s) = a s^p on [0, s0]; the lemma's ratio is
      // K = (1 - 2^{-delta}) (1 + p)^{1+p} / (2 p^p) and needs K <= 1.
      const double p = uniform(0.3, 0.7);
      h.delta = uniform(0.5, std::min(1.5, 0.9 / p));
      const double ratio = (1.0 - std::exp2(-h.delta)) * std::pow(1.0 + p, 1.0 + p) / (2.0 * std::pow(p, p));
      if (ratio > 0.8) continue;
      const double a = uniform(0.2, 5.0);
      const double s0 = uniform(0.5, 4.0);
      for (int i = 0; i < kSamples; ++i) {
        const double s = s0 * i / (kSamples - 1);
        h.samples.s.push_back(s);
        h.samples.phi.push_back(a * std::pow(s, p));
      }
    } else {
      // phi(s) = a (1 - (s - s0)/D)_+^r; vanishing needs
      // R = alpha/(alpha+r) (r/(alpha+r))^{r/alpha} 2^{(1+delta)/delta} >= 1.
      const double r = uniform(0.5, 1.5);
      h.delta = uniform(0.3, 0.7);
      h.alpha = uniform(std::max(0.5, r * h.delta), 2.0);
      const double ar = h.alpha + r;
      const double ratio = h.alpha / ar * std::pow(r / ar, r / h.alpha) * std::exp2((1.0 + h.delta) / h.delta);
      if (ratio < 1.25) continue;
      const double a = uniform(0.2, 5.0);
      const double s0 = uniform(0.0, 2.0);
      const double depth = uniform(0.5, 3.0);
      const double span = 2.0 * ratio * depth;
      for (int i = 0; i < kSamples; ++i) {
        const double s = s0 + span * i / (kSamples - 1);
        const double w = std::max(0.0, 1.0 - (s - s0) / depth);
        h.samples.s.push_back(s);
        h.samples.phi.push_back(a * std::pow(w, r));
      }
    }
    out.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------- report helpers

namespace {

json config_summary(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  return json{{"n", p.n},
              {"m", p.m},
              {"N", p.N},
              {"L", p.L},
              {"kappa", p.kappa},
              {"f", rhs_kind_name(p.f)},
              {"t", p.t},
              {"seed", cfg.run.seed}};
}

json stage_json(const StageRecord& r) {
  return json{{"t", r.t},
              {"b", r.b},
              {"b_compat", r.b_compat},
              {"residual_history", r.residual_history},
              {"sup_phi", r.sup_phi},
              {"inf_phi", r.inf_phi},
              {"margin_min", r.margin_min},
              {"ellipticity_min", r.ellipticity_min},
              {"iters", r.iters},
              {"krylov_iterations", r.krylov_iterations},
              {"safeguard_halvings", r.safeguard_halvings},
              {"sigma", r.sigma},
              {"converged", r.converged},
              {"seconds", r.seconds}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setw(2) << j << '\n';
}

void prepare(const ExperimentConfig& cfg) {
  if (cfg.run.threads > 0 && !std::getenv("HESSIANLAB_THREADS")) set_thread_count(cfg.run.threads);
  fs::create_directories(cfg.run.output_dir);
}

/// min_c sup |a - b - c|
double centered_gap(const ScalarField& a, const ScalarField& b) {
  double hi = -HUGE_VAL, lo = HUGE_VAL;
  for (std::size_t p = 0; p < a.size(); ++p) {
    hi = std::max(hi, a[p] - b[p]);
    lo = std::min(lo, a[p] - b[p]);
  }
  return 0.5 * (hi - lo);
}

template <class F>
int guarded(std::ostream& err, const char* name, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << name << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NonconvergenceError& e) {
    err << name << ": nonconvergence: " << e.what() << '\n';
    return kExitNonconvergence;
  } catch (const ConeViolationError& e) {
    err << name << ": nonconvergence (cone): " << e.what() << '\n';
    return kExitNonconvergence;
  } catch (const ValidationError& e) {
    err << name << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << name << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

// ---------------------------------------------------------------- solve

int cmd_solve(const ExperimentConfig& cfg, std::ostream& err) {
  return guarded(err, "solve", [&] {
    cfg.validate();
    prepare(cfg);
    const ProblemData prob = build_problem(cfg);
    json report;
    report["command"] = "solve";
    report["config"] = config_summary(cfg);
    const SolveResult res = solve_nondegenerate(prob.bg, cfg.problem.t, prob.f, cfg.solver);
    save_field(cfg.run.output_dir / "phi.hlf1", res.state.phi);
    report["stages"] = json::array({stage_json(res.record)});
    report["b"] = res.state.b;
    report["residual_sup"] = res.state.residual_sup;
    const double sup_abs = std::max(std::abs(res.state.phi.max()), std::abs(res.state.phi.min()));
    report["phi_sup_abs"] = sup_abs;
    report["phi_is_zero"] = sup_abs <= 1e-12;
    report["bracket"] = [&] {
      const BracketRecord br = bracket_check(prob.bg, cfg.problem.t, res.record.b_compat, cfg.problem.m);
      return json{{"lower", br.lower}, {"middle", br.middle}, {"upper", br.upper}, {"holds", br.holds}};
    }();

    if (prob.phi_star) {
      std::vector<int> Ns = cfg.experiment.refine;
      Ns.push_back(cfg.problem.N);
      std::sort(Ns.begin(), Ns.end());
      Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
      json table = json::array();
      double prev = 0.0;
      for (int N : Ns) {
        const ProblemData pn = N == cfg.problem.N ? prob : build_problem(cfg, N);
        const SolveResult r = N == cfg.problem.N ? res : solve_nondegenerate(pn.bg, cfg.problem.t, pn.f, cfg.solver);
        const double e = centered_gap(r.state.phi, pn.phi_star->sample(pn.grid));
        json row{{"N", N}, {"h", pn.grid.spacing()}, {"sup_error", e}, {"newton_iters", r.record.iters}};
        if (prev > 0.0 && e > 0.0) row["ratio_to_previous"] = prev / e;
        prev = e;
        table.push_back(row);
      }
      report["error_table"] = table;
    }
    write_json(cfg.run.output_dir / "report.json", report);
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- continuation

int cmd_continuation(const ExperimentConfig& cfg, std::ostream& err) {
  return guarded(err, "continuation", [&] {
    cfg.validate();
    prepare(cfg);
    const ProblemData prob = build_problem(cfg);
    ContinuationSchedule schedule =
        ContinuationSchedule::geometric(cfg.schedule.stages, cfg.schedule.t_max, cfg.schedule.ratio);
    if (cfg.schedule.mollify) schedule.set_stage_mollification(prob.grid.spacing());
    const ContinuationResult res = continuation_degenerate(prob.bg, prob.f, schedule, cfg.solver);
    const SolveReport& rep = res.report;

    json report;
    report["command"] = "continuation";
    report["config"] = config_summary(cfg);
    report["completed"] = rep.completed;
    if (!rep.completed) report["error"] = rep.error;
    report["stages"] = json::array();
    for (const auto& s : rep.stages) report["stages"].push_back(stage_json(s));
    report["b_monotone"] = rep.b_monotone;
    report["successive_sup_differences"] = rep.successive_sup_differences;
    json brackets = json::array();
    bool brackets_hold = true;
    for (const auto& b : rep.brackets) {
      brackets.push_back({{"t", b.t}, {"lower", b.lower}, {"middle", b.middle}, {"upper", b.upper}, {"holds", b.holds}});
      brackets_hold = brackets_hold && b.holds;
    }
    report["brackets"] = brackets;
    report["brackets_hold"] = brackets_hold;

    if (!res.states.empty()) {
      save_field(cfg.run.output_dir / "phi.hlf1", res.states.back().phi);
      std::vector<ScalarField> phis;
      std::vector<double> ts;
      for (std::size_t i = 0; i < res.states.size(); ++i) {
        phis.push_back(res.states[i].phi);
        ts.push_back(rep.stages[i].t);
      }
      const UniformityReport uni = linf_uniformity_report(ts, phis, prob.f, cfg.problem.p, prob.bg.volume);
      json rows = json::array();
      for (const auto& r : uni.rows) rows.push_back({{"t", r.t}, {"linf", r.linf}, {"entropy", r.entropy}});
      report["uniformity"] = {
          {"rows", rows}, {"max_linf", uni.max_linf}, {"median_linf", uni.median_linf}, {"passes", uni.passes}};

      const double c0 = cfg.experiment.cap_constant > 0.0 ? cfg.experiment.cap_constant : default_cap_constant(phis);
      json cert;
      if (c0 > 0.0) {
        const DecreasingSequence seq = decreasing_sequence(phis, c0);
        double worst = -HUGE_VAL;
        for (std::size_t i = 1; i < seq.psi.size(); ++i)
          for (std::size_t p = 0; p < seq.psi[i].size(); ++p) worst = std::max(worst, seq.psi[i][p] - seq.psi[i - 1][p]);
        if (seq.psi.size() < 2) worst = 0.0;
        cert = {{"c_initial", seq.c_initial},
                {"c_final", seq.c_final},
                {"adjustment", seq.adjustment},
                {"violation_before_adjustment", seq.violation},
                {"max_increment", worst},
                {"nonincreasing", worst <= 0.0}};
      } else {
        cert = {{"c_initial", 0.0}, {"c_final", 0.0}, {"adjustment", 0.0}, {"nonincreasing", true}};
      }
      report["decreasing_sequence"] = cert;
    }

    std::ofstream csv(cfg.run.output_dir / "stages.csv");
    csv << "stage,t,b,b_compat,sup_phi,inf_phi,margin_min,ellipticity_min,iters,krylov_iterations,"
           "safeguard_halvings,sigma,final_residual,bracket_lower,bracket_middle,bracket_upper,bracket_holds\n";
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < rep.stages.size(); ++i) {
      const auto& s = rep.stages[i];
      const auto& b = rep.brackets[i];
      csv << i << ',' << s.t << ',' << s.b << ',' << s.b_compat << ',' << s.sup_phi << ',' << s.inf_phi << ','
          << s.margin_min << ',' << s.ellipticity_min << ',' << s.iters << ',' << s.krylov_iterations << ','
          << s.safeguard_halvings << ',' << s.sigma << ',' << s.residual_history.back() << ',' << b.lower << ','
          << b.middle << ',' << b.upper << ',' << (b.holds ? 1 : 0) << '\n';
    }
    write_json(cfg.run.output_dir / "report.json", report);
    if (!rep.completed) {
      err << "continuation: stopped early: " << rep.error << '\n';
      return static_cast<int>(kExitNonconvergence);
    }
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- stability

int cmd_stability(const ExperimentConfig& cfg, std::ostream& err) {
  return guarded(err, "stability", [&] {
    cfg.validate();
    prepare(cfg);
    const ProblemData prob = build_problem(cfg);
    const auto& e = cfg.experiment;
    const std::vector<double> centre =
        e.perturbation_center.empty() ? torus_centre(cfg.problem.n, cfg.problem.L) : e.perturbation_center;
    const ScalarField pert = gaussian_bump(prob.grid, centre, e.perturbation_width, e.perturbation_amplitude);
    std::vector<double> scales = e.scales;
    if (e.perturbation_amplitude == 0.0) scales.clear();
    StabilityOptions opt;
    opt.q = cfg.problem.q;
    opt.q_prime = cfg.problem.q_prime;
    opt.epsilon = e.epsilon;
    const StabilityResult res = stability_experiment(prob.bg, cfg.problem.t, prob.f, pert, scales, opt, cfg.solver);

    std::ofstream csv(cfg.run.output_dir / "records.csv");
    csv << std::setprecision(17);
    csv << "# fitted_exponent=" << (res.fitted ? std::to_string(res.fitted_exponent) : std::string("none"))
        << " floor=" << res.floor << " predicted=" << res.predicted_exponent << '\n';
    csv << "eps_scale,l1_gap,lq_gap_plus,sup_gap,raw_sup_gap,centered_oscillation,density_lq,predicted_exponent,floor,"
           "fitted_exponent,converged\n";
    for (const auto& r : res.records) {
      csv << r.eps_scale << ',' << r.l1_gap << ',' << r.lq_gap_plus << ',' << r.sup_gap << ',' << r.raw_sup_gap << ',' << r.centered_oscillation
          << ',' << r.density_lq << ',' << r.predicted_exponent << ',' << res.floor << ','
          << (res.fitted ? res.fitted_exponent : std::nan("")) << ',' << (r.converged ? 1 : 0) << '\n';
    }
    json report{{"command", "stability"},
                {"config", config_summary(cfg)},
                {"predicted_exponent", res.predicted_exponent},
                {"floor", res.floor},
                {"fitted", res.fitted},
                {"exponent_ok", res.exponent_ok},
                {"bound_constant", res.bound_constant},
                {"bound_finite", res.bound_finite},
                {"monotone", res.monotone},
                {"density_bound", res.density_bound},
                {"partial", res.partial},
                {"records", res.records.size()}};
    if (res.fitted) report["fitted_exponent"] = res.fitted_exponent;
    if (!res.error.empty()) report["error"] = res.error;
    write_json(cfg.run.output_dir / "report.json", report);
    if (res.partial) {
      err << "stability: partial failure: " << res.error << '\n';
      return static_cast<int>(kExitPartial);
    }
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------- verify

int cmd_verify(const ExperimentConfig& cfg, std::ostream& err) {
  return guarded(err, "verify", [&] {
    cfg.validate();
    prepare(cfg);
    const ProblemData prob = build_problem(cfg);
    const int n = cfg.problem.n;
    const int m = cfg.problem.m;
    const double t = cfg.problem.t;
    json props = json::object();
    bool all = true;
    auto record = [&](const std::string& name, bool pass, json detail) {
      detail["result"] = pass ? "PASS" : "FAIL";
      props[name] = detail;
      all = all && pass;
      err << (pass ? "PASS " : "FAIL ") << name << '\n';
    };

    // Algebra: Vieta against principal minors.
    {
      std::mt19937_64 rng(cfg.run.seed);
      std::normal_distribution<double> g;
      double worst = 0.0;
      for (int trial = 0; trial < 200; ++trial) {
        Eigen::MatrixXcd a(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
        const HermitianMatrix h(0.5 * (a + a.adjoint()));
        const EigenTuple lam = generalized_eigenvalues(h, HermitianMatrix::identity(n));
        for (int k = 1; k <= n; ++k) {
          const double v = elem_sym(lam, k), w = elem_sym_minors(h, k);
          worst = std::max(worst, std::abs(v - w) / std::max(1.0, std::abs(w)));
        }
      }
      record("elementary_symmetric_consistency", worst < 1e-10, {{"max_relative_error", worst}});
    }

    // Maclaurin and Garding on sampled cone members.
    {
      std::mt19937_64 rng(cfg.run.seed + 1);
      std::uniform_real_distribution<double> u(-1.0, 3.0);
      double worst_mac = HUGE_VAL, worst_gar = HUGE_VAL;
      int kept = 0;
      const ConeSpec spec{n, m, 0.0, false};
      while (kept < 500) {
        Eigen::VectorXd a(n), b(n);
        for (int i = 0; i < n; ++i) {
          a[i] = u(rng);
          b[i] = u(rng);
        }
        const EigenTuple la(a), lb(b);
        if (!cone_membership(la, spec).is_member || !cone_membership(lb, spec).is_member) continue;
        ++kept;
        worst_mac = std::min(worst_mac, check_maclaurin(la, m));
        worst_gar = std::min(worst_gar, check_garding(la, lb, m) / std::max(1.0, elem_sym(la, m)));
      }
      record("maclaurin", worst_mac >= -1e-10, {{"min_gap", worst_mac}});
      record("garding", worst_gar >= -1e-10, {{"min_gap", worst_gar}});
    }

    // Iteration lemmas on certified synthetic families.
    for (auto lemma : {IterationLemma::Kolodziej, IterationLemma::DeGiorgi}) {
      int violations = 0, uncertified = 0;
      for (const auto& h : synthetic_families(lemma, cfg.experiment.lemma_families, cfg.run.seed + 2)) {
        const LemmaCheck c = check_iteration_lemma(h);
        if (!c.certified) ++uncertified;
        else if (!c.holds) ++violations;
      }
      const char* name = lemma == IterationLemma::Kolodziej ? "kolodziej_lower_bound" : "degiorgi_vanishing";
      record(name, violations == 0 && uncertified == 0,
             {{"families", cfg.experiment.lemma_families}, {"violations", violations}, {"uncertified", uncertified}});
    }

    // Twin solves for uniqueness.
    const SolveResult first = solve_nondegenerate(prob.bg, t, prob.f, cfg.solver);
    const ScalarField noise =
        seeded_noise(prob.bg, t, m, cfg.experiment.noise_amplitude, 0.05, cfg.run.seed + 3);
    const SolveResult second = solve_nondegenerate(prob.bg, t, prob.f, cfg.solver, noise);
    {
      double sup_diff = 0.0;
      for (std::size_t p = 0; p < prob.grid.size(); ++p)
        sup_diff = std::max(sup_diff, std::abs(first.state.phi[p] - second.state.phi[p]));
      const double energy = normalized_uniqueness_energy(first.state.phi, second.state.phi, prob.bg, t);
      record("uniqueness", std::abs(energy) < 1e-8 && sup_diff < 10.0 * cfg.solver.newton_tol,
             {{"normalized_energy", energy}, {"sup_difference", sup_diff}});
    }

    // Viscosity touching test, optionally on a corrupted state.
    {
      ScalarField phi = first.state.phi;
      if (cfg.experiment.inject_spike) {
        Coords c{};
        for (int a = 0; a < prob.grid.axes(); ++a) c[a] = prob.grid.points_per_axis() / 2;
        phi[prob.grid.index(c)] += cfg.experiment.spike_amplitude;
      }
      const ViscosityReport v =
          viscosity_check(phi, first.state.b, prob.bg, t, prob.f, m, cfg.experiment.viscosity_samples, cfg.run.seed + 4);
      record("viscosity", v.violations() == 0,
             {{"checked", v.checked},
              {"sub_violations", v.sub_violations},
              {"super_violations", v.super_violations},
              {"super_skipped", v.super_skipped},
              {"tolerance", v.tolerance},
              {"spike_injected", cfg.experiment.inject_spike}});
    }

    {
      const BracketRecord br = bracket_check(prob.bg, t, first.record.b_compat, m);
      record("compatibility_bracket", br.holds, {{"lower", br.lower}, {"middle", br.middle}, {"upper", br.upper}});
    }

    // Report-only diagnostics.
    json diagnostics;
    {
      const MonitorReport mon = laplacian_monitor(first.state, prob.bg, t, prob.f, m);
      diagnostics["trace_monitor"] = {{"skipped", mon.skipped},       {"notice", mon.notice},
                                      {"sup_w", mon.sup_w},           {"bound_rhs", mon.bound_rhs},
                                      {"A", mon.a},                   {"bound_holds", mon.bound_holds},
                                      {"trace_consistency", mon.trace_consistency}};
      const double spread = std::max(1e-3, first.state.phi.max() - first.state.phi.min());
      std::vector<double> levels;
      for (int i = 0; i <= 20; ++i) levels.push_back(spread * i / 20.0);
      const IterationSamples mass = level_set_mass(first.state.phi, prob.f, prob.bg.volume, levels);
      diagnostics["level_set_mass"] = {{"s", mass.s}, {"mass", mass.phi}};
    }

    json out{{"command", "verify"}, {"config", config_summary(cfg)}, {"properties", props},
             {"diagnostics", diagnostics}, {"all_pass", all}};
    write_json(cfg.run.output_dir / "verify.json", out);
    return static_cast<int>(all ? kExitOk : kExitVerification);
  });
}

// ---------------------------------------------------------------- conecheck

namespace {

std::vector<double> parse_tuple(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == '(' || c == ')' || c == '[' || c == ']') c = ' ';
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("tuple: empty entry in '" + text + "'");
    const auto b = item.find_last_not_of(" \t");
    item = item.substr(a, b - a + 1);
    // Accept the unicode minus sign as well.
    for (std::size_t pos; (pos = item.find("\xE2\x88\x92")) != std::string::npos;) item.replace(pos, 3, "-");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw ConfigError("tuple: cannot parse '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(v)) throw ConfigError("tuple: cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int cmd_conecheck(const std::string& tuple, int m, std::ostream& out, std::ostream& err) {
  try {
    const std::vector<double> values = parse_tuple(tuple);
    const int n = static_cast<int>(values.size());
    if (n < 2 || n > kMaxDimension) throw ConfigError("tuple: need between 2 and 8 entries");
    if (m < 1 || m > n) throw ConfigError("--m must lie in [1, n]");
    const EigenTuple lam(Eigen::Map<const Eigen::VectorXd>(values.data(), n));
    const ConeMembership mem = cone_membership(lam, ConeSpec{n, m, 0.0, false});
    out << std::setprecision(12);
    out << "member: " << (mem.is_member ? "yes" : "no") << '\n';
    out << "margin: " << mem.worst_margin << '\n';
    for (int k = 1; k <= m; ++k) out << "S_" << k << ": " << elem_sym(lam, k) << '\n';
    if (mem.is_member) {
      out << "maclaurin_gap: " << check_maclaurin(lam, m) << '\n';
      const EigenTuple ones(Eigen::VectorXd::Ones(n));
      out << "garding_gap: " << check_garding(lam, ones, m) << '\n';
      out << "F: " << hessian_operator_F(lam, m) << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "conecheck: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_conecheck_field(const std::string& path, const std::optional<ExperimentConfig>& cfg, int m, std::ostream& out,
                        std::ostream& err) {
  try {
    const double period = cfg ? cfg->problem.L : 2.0 * M_PI;
    const Hlf1Header head = peek_field(path);
    const int n = static_cast<int>(head.n);
    if (m < 1 || m > n) throw ConfigError("--m must lie in [1, n]");
    std::vector<double> margins;
    int members = 0;
    const ConeSpec spec{n, m, 0.0, false};
    auto account = [&](const EigenTuple& lam) {
      const ConeMembership c = cone_membership(lam, spec);
      margins.push_back(c.worst_margin);
      members += c.is_member ? 1 : 0;
    };
    if (head.kind == FieldKind::Eigen) {
      const EigenField ef = load_eigen_field(path, period);
      for (std::size_t p = 0; p < ef.size(); ++p) account(ef.at(p));
    } else if (head.kind == FieldKind::Hermitian) {
      const HermitianField hf = load_hermitian_field(path, period);
      std::vector<double> diag(n, 1.0);
      if (cfg && static_cast<int>(cfg->problem.omega_diag.size()) == n) diag = cfg->problem.omega_diag;
      const HermitianMatrix g = HermitianMatrix::diagonal(diag);
      for (std::size_t p = 0; p < hf.size(); ++p) account(generalized_eigenvalues(HermitianMatrix(hf.at(p)), g));
    } else {
      throw ConfigError("conecheck: field must be Hermitian or eigenvalue valued");
    }
    const auto [lo_it, hi_it] = std::minmax_element(margins.begin(), margins.end());
    const double lo = *lo_it, hi = *hi_it;
    constexpr int kBins = 10;
    std::vector<int> hist(kBins, 0);
    for (double v : margins) {
      int b = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * kBins) : 0;
      hist[std::clamp(b, 0, kBins - 1)]++;
    }
    out << std::setprecision(12);
    out << "points: " << margins.size() << "\nmembers: " << members << "\nworst_margin: " << lo
        << "\nbest_margin: " << hi << "\nhistogram:\n";
    for (int b = 0; b < kBins; ++b) {
      const double a = lo + (hi - lo) * b / kBins, c = lo + (hi - lo) * (b + 1) / kBins;
      out << "  [" << a << ", " << c << "): " << hist[b] << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "conecheck: " << e.what() << '\n';
    return kExitConfig;
  }
}

// ---------------------------------------------------------------- dispatch

int run_command(const std::string& command, const std::string& config_path, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << command << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (command == "solve") return cmd_solve(cfg, err);
  if (command == "continuation") return cmd_continuation(cfg, err);
  if (command == "stability") return cmd_stability(cfg, err);
  if (command == "verify") return cmd_verify(cfg, err);
  if (command == "conecheck") {
    if (cfg.experiment.field_path.empty()) {
      err << "conecheck: configuration error: config key 'experiment.field_path' required\n";
      return kExitConfig;
    }
    return cmd_conecheck_field(cfg.experiment.field_path, cfg, cfg.problem.m, std::cout, err);
  }
  err << "unknown command '" << command << "'\n";
  return kExitConfig;
}

}  // namespace hessianlab
