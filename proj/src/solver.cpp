#include "hessianlab/solver.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/generators.hpp"
#include "hessianlab/krylov.hpp"
#include "hessianlab/parallel.hpp"
#include "hessianlab/reduce.hpp"
#include "hessianlab/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace hessianlab {

// ---------------------------------------------------------------- configuration

void SolverConfig::validate() const {
  if (m < 1 || m > kMaxDimension) throw ConfigError("solver: m out of range");
  if (!(t > 0.0 && t <= 1.0)) throw ConfigError("solver: t must lie in (0, 1]");
  if (!(newton_tol > 0.0)) throw ConfigError("solver: newton_tol must be positive");
  if (max_newton < 1) throw ConfigError("solver: max_newton must be positive");
  if (!(cone_margin > 0.0)) throw ConfigError("solver: cone_margin must be positive");
  if (!(damping > 0.0)) throw ConfigError("solver: damping must be positive");
  if (!(damping_floor > 0.0) || damping_floor > damping) throw ConfigError("solver: bad damping floor");
  if (krylov_restart < 1 || krylov_max_iterations < 1) throw ConfigError("solver: bad Krylov settings");
}

ContinuationSchedule ContinuationSchedule::geometric(int stages, double t_max, double ratio) {
  if (stages < 1 || !(t_max > 0.0) || !(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("schedule: need stages >= 1, t_max > 0, ratio in (0, 1)");
  }
  ContinuationSchedule s;
  for (int i = 0; i < stages; ++i) s.t_values.push_back(t_max * std::pow(ratio, i));
  return s;
}

void ContinuationSchedule::set_stage_mollification(double h) {
  const int k = static_cast<int>(t_values.size()) - 1;
  mollification_sigmas.clear();
  for (int i = 0; i <= k; ++i) mollification_sigmas.push_back(std::max(h, h * std::ldexp(1.0, k - i)));
}

void ContinuationSchedule::validate() const {
  if (t_values.empty()) throw ConfigError("schedule: empty");
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    if (!(t_values[i] > 0.0 && t_values[i] <= 1.0)) throw ConfigError("schedule: t outside (0, 1]");
    if (i > 0 && !(t_values[i] < t_values[i - 1])) throw ConfigError("schedule: t values must strictly decrease");
  }
  if (!mollification_sigmas.empty() && mollification_sigmas.size() != t_values.size()) {
    throw ConfigError("schedule: one mollification sigma per stage required");
  }
}

// ---------------------------------------------------------------- evaluation

StageProblem make_stage(const BackgroundData& bg, double t, const ScalarField& f, int m) {
  if (!(f.grid() == bg.grid())) throw ValidationError("make_stage: f lives on a different grid");
  if (!f.all_finite()) throw ValidationError("make_stage: f not finite");
  if (m < 1 || m > bg.grid().dimension()) throw DomainError("make_stage: m outside [1, n]");
  StageProblem p;
  p.bg = &bg;
  p.t = t;
  p.m = m;
  p.f = f;
  p.base = stage_form(bg, t);
  return p;
}

Evaluation evaluate(const StageProblem& problem, const ScalarField& phi, double b, bool with_coefficients) {
  const BackgroundData& bg = *problem.bg;
  const TorusGrid& grid = bg.grid();
  const int n = grid.dimension();
  const int axes = grid.axes();
  const int m = problem.m;
  const double log_binom = std::log(binomial(n, m));
  const auto size = static_cast<std::ptrdiff_t>(grid.size());

  Evaluation ev;
  ev.residual.assign(grid.size(), 0.0);
  if (with_coefficients) ev.coefficients.assign(grid.size() * axes * axes, 0.0);
  std::vector<double> margin(grid.size());
  std::vector<double> ellip(grid.size());

#pragma omp parallel num_threads(thread_count())
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
    std::array<double, kMaxAxes * kMaxAxes> d{};
    std::array<double, kMaxDimension> lam{};
    std::array<double, kMaxDimension> grad{};
    std::array<double, kMaxDimension + 1> e{};
    Eigen::MatrixXcd x(n, n), xt(n, n), a(n, n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t pp = 0; pp < size; ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      real_second_differences(grid, phi.data().data(), p, d.data());
      x = problem.base.at(p) + complex_from_real(d.data(), n);
      const auto w = bg.omega_inv_sqrt.at(p);
      xt = w * x * w;
      es.compute(0.5 * (xt + xt.adjoint()), with_coefficients ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      for (int i = 0; i < n; ++i) lam[i] = es.eigenvalues()[i];
      elem_sym_upto(lam.data(), n, m, e.data());
      double worst = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= m; ++k) worst = std::min(worst, e[k] / binomial(n, k));
      margin[p] = worst;
      const double sm = e[m];
      ev.residual[p] = sm > 0.0 ? std::log(sm) - log_binom - m * (problem.f[p] + b)
                                : std::numeric_limits<double>::quiet_NaN();
      double emin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        grad[i] = elem_sym_skip(lam.data(), n, m - 1, i);
        emin = std::min(emin, grad[i] / sm);
      }
      ellip[p] = sm > 0.0 ? emin : -std::numeric_limits<double>::infinity();
      if (with_coefficients && sm > 0.0) {
        const auto& u = es.eigenvectors();
        Eigen::VectorXd gdiag(n);
        for (int i = 0; i < n; ++i) gdiag[i] = grad[i] / sm;
        a = w * (u * gdiag.asDiagonal() * u.adjoint()) * w;
        double* c = ev.coefficients.data() + p * axes * axes;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double alpha = 0.25 * a(i, j).real();
            const double beta = 0.25 * a(i, j).imag();
            const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
            c[xi * axes + xj] += alpha;
            c[yi * axes + yj] += alpha;
            c[xi * axes + yj] += beta;
            c[yi * axes + xj] -= beta;
          }
      }
    }
  }
  const auto it = std::min_element(margin.begin(), margin.end());
  ev.min_margin = *it;
  ev.worst_point = static_cast<std::size_t>(it - margin.begin());
  ev.ellipticity_min = *std::min_element(ellip.begin(), ellip.end());
  ev.admissible = ev.min_margin > 0.0 &&
                  std::all_of(ev.residual.begin(), ev.residual.end(), [](double r) { return std::isfinite(r); });
  return ev;
}

namespace {

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double weighted_mean(const std::vector<double>& v, const ScalarField& volume) {
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] * volume[i];
  return pairwise_sum(w) / pairwise_sum(volume.data());
}

void apply_operator(const TorusGrid& grid, const std::vector<double>& coefficients, const double* v, double* out) {
  const int axes = grid.axes();
  const auto size = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel num_threads(thread_count())
  {
    std::array<double, kMaxAxes * kMaxAxes> d{};
#pragma omp for schedule(static)
    for (std::ptrdiff_t pp = 0; pp < size; ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      real_second_differences(grid, v, p, d.data());
      const double* c = coefficients.data() + p * axes * axes;
      double s = 0.0;
      for (int k = 0; k < axes * axes; ++k) s += c[k] * d[k];
      out[p] = s;
    }
  }
}

std::string point_label(const TorusGrid& grid, std::size_t p) {
  const Coords c = grid.coords(p);
  std::ostringstream os;
  os << '(';
  for (int a = 0; a < grid.axes(); ++a) os << (a ? "," : "") << c[a];
  os << ')';
  return os.str();
}

}  // namespace

double compatibility_constant(const BackgroundData& bg, double t, const ScalarField& f, int m) {
  const TorusGrid& grid = bg.grid();
  const ScalarField sm = form_elem_sym(stage_form(bg, t), bg, m);
  ScalarField em(grid, 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) em[p] = std::exp(m * f[p]);
  const double top = integrate(sm, bg.volume);
  const double bottom = binomial(grid.dimension(), m) * integrate(em, bg.volume);
  if (!(top > 0.0) || !(bottom > 0.0)) throw ConfigError("compatibility_constant: nonpositive integral");
  return (std::log(top) - std::log(bottom)) / m;
}

ScalarField residual(const ScalarField& phi, double b, const BackgroundData& bg, double t, const ScalarField& f, int m) {
  const StageProblem problem = make_stage(bg, t, f, m);
  Evaluation ev = evaluate(problem, phi, b, false);
  if (!ev.admissible) {
    throw ConeViolationError("residual: lambda(X) leaves Gamma^m at grid point " + point_label(bg.grid(), ev.worst_point) +
                                 " (worst margin " + std::to_string(ev.min_margin) + ")",
                             ev.worst_point, ev.min_margin);
  }
  return ScalarField(bg.grid(), std::move(ev.residual));
}

ScalarField apply_linearization(const StageProblem& problem, const ScalarField& phi, double b, const ScalarField& v,
                                double beta) {
  const Evaluation ev = evaluate(problem, phi, b, true);
  if (!ev.admissible) throw ConeViolationError("apply_linearization: inadmissible point", ev.worst_point, ev.min_margin);
  ScalarField out(v.grid(), 0.0);
  apply_operator(v.grid(), ev.coefficients, v.data().data(), out.data().data());
  for (double& x : out.data()) x -= problem.m * beta;
  return out;
}

// ---------------------------------------------------------------- Newton

namespace {

struct LinearSolve {
  std::vector<double> dphi;
  double db = 0.0;
  KrylovResult krylov;
};

/// Solves  L dphi - m db = rhs,  mean(dphi) = 0  by preconditioned GMRES.
LinearSolve solve_linearized(const TorusGrid& grid, const Evaluation& ev, int m, const std::vector<double>& rhs,
                             double rtol, const SolverConfig& config) {
  const int axes = grid.axes();
  const std::size_t size = grid.size();

  Eigen::MatrixXd mean_c = Eigen::MatrixXd::Zero(axes, axes);
  {
    std::vector<double> column(size);
    for (int k = 0; k < axes * axes; ++k) {
      for (std::size_t p = 0; p < size; ++p) column[p] = ev.coefficients[p * axes * axes + k];
      mean_c(k / axes, k % axes) = pairwise_sum(column) / static_cast<double>(size);
    }
  }
  ConstantCoefficientInverse pre(grid);
  pre.set_coefficients(mean_c);

  const LinearMap apply = [&](const Vec& in, Vec& out) {
    apply_operator(grid, ev.coefficients, in.data(), out.data());
    const double beta = in[size];
    for (std::size_t p = 0; p < size; ++p) out[p] -= m * beta;
    out[size] = pairwise_sum(std::span<const double>(in.data(), size)) / static_cast<double>(size);
  };
  std::vector<double> centered(size);
  const LinearMap precondition = [&](const Vec& in, Vec& out) {
    const double mean = pairwise_sum(std::span<const double>(in.data(), size)) / static_cast<double>(size);
    for (std::size_t p = 0; p < size; ++p) centered[p] = in[p] - mean;
    pre.apply(centered, std::span<double>(out.data(), size));
    for (std::size_t p = 0; p < size; ++p) out[p] += in[size];
    out[size] = -mean / m;
  };

  Vec b(size + 1, 0.0);
  std::copy(rhs.begin(), rhs.end(), b.begin());
  Vec x(size + 1, 0.0);
  LinearSolve out;
  out.krylov = gmres(apply, precondition, b, x, rtol, config.krylov_restart, config.krylov_max_iterations);
  out.db = x[size];
  x.resize(size);
  out.dphi = std::move(x);
  return out;
}

}  // namespace

SolverState newton_step(const SolverState& state, const StageProblem& problem, const SolverConfig& config,
                        NewtonStepInfo* info) {
  const TorusGrid& grid = problem.bg->grid();
  const Evaluation ev = evaluate(problem, state.phi, state.b, true);
  if (!ev.admissible) {
    throw ConeViolationError("newton_step: current state is not admissible", ev.worst_point, ev.min_margin);
  }
  const double r_sup = sup_abs(ev.residual);
  const double r_norm = norm2(ev.residual);
  std::vector<double> rhs(ev.residual.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -ev.residual[i];
  // Forcing term shrinks with the residual so the tail stays quadratic.
  const double rtol = std::clamp(r_sup, 1e-10, 1e-2);
  const LinearSolve lin = solve_linearized(grid, ev, problem.m, rhs, rtol, config);

  NewtonStepInfo local;
  local.step_norm = sup_abs(lin.dphi);
  local.delta_b = lin.db;
  local.krylov_iterations = lin.krylov.iterations;
  local.krylov_relative_residual = lin.krylov.relative_residual;

  double s = config.damping;
  ScalarField trial(grid, 0.0);
  while (true) {
    for (std::size_t p = 0; p < grid.size(); ++p) trial[p] = state.phi[p] + s * lin.dphi[p];
    double b_trial = state.b + s * lin.db;
    Evaluation te = evaluate(problem, trial, b_trial, false);
    if (te.admissible && te.min_margin >= config.cone_margin) {
      // Re-solve b from the mean log-residual; this only shifts the residual by a constant.
      const double shift = weighted_mean(te.residual, problem.bg->volume) / problem.m;
      b_trial += shift;
      for (double& r : te.residual) r -= problem.m * shift;
      const double t_norm = norm2(te.residual);
      if (t_norm < r_norm || r_sup == 0.0 || t_norm == 0.0) {
        SolverState next;
        next.phi = normalize_sup(trial);
        next.b = b_trial;
        next.residual_sup = sup_abs(te.residual);
        next.cone_margin_min = te.min_margin;
        next.newton_iters = state.newton_iters + 1;
        local.step_factor = s;
        local.margin_after = te.min_margin;
        if (info) *info = local;
        return next;
      }
    }
    s *= 0.5;
    ++local.halvings;
    if (s < config.damping_floor) {
      if (info) *info = local;
      throw NonconvergenceError("newton_step: line search reached the damping floor (residual " +
                                    std::to_string(r_sup) + ", margin " + std::to_string(ev.min_margin) + ")",
                                state.newton_iters, r_sup);
    }
  }
}

SolveResult solve_nondegenerate(const BackgroundData& bg, double t, const ScalarField& f, const SolverConfig& config,
                                const std::optional<ScalarField>& warm_start) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const StageProblem problem = make_stage(bg, t, f, config.m);
  const TorusGrid& grid = bg.grid();

  SolveResult out;
  SolverState& state = out.state;
  state.phi = warm_start ? *warm_start : ScalarField(grid, 0.0);
  if (!(state.phi.grid() == grid)) throw ValidationError("solve_nondegenerate: warm start on a different grid");
  state.phi = normalize_sup(state.phi);

  Evaluation ev = evaluate(problem, state.phi, 0.0, false);
  if (!ev.admissible || ev.min_margin < config.cone_margin) {
    throw ConeViolationError("solve_nondegenerate: initial iterate outside Gamma^m at grid point " +
                                 point_label(grid, ev.worst_point) + " (worst margin " + std::to_string(ev.min_margin) + ")",
                             ev.worst_point, ev.min_margin);
  }
  state.b = weighted_mean(ev.residual, bg.volume) / config.m;
  for (double& r : ev.residual) r -= config.m * state.b;
  state.residual_sup = sup_abs(ev.residual);
  state.cone_margin_min = ev.min_margin;

  StageRecord& rec = out.record;
  rec.t = t;
  rec.b_compat = compatibility_constant(bg, t, f, config.m);
  rec.residual_history.push_back(state.residual_sup);
  rec.margin_min = state.cone_margin_min;

  while (state.residual_sup >= config.newton_tol) {
    if (state.newton_iters >= config.max_newton) {
      throw NonconvergenceError("solve_nondegenerate: no convergence after " + std::to_string(state.newton_iters) +
                                    " Newton iterations (residual " + std::to_string(state.residual_sup) + ")",
                                state.newton_iters, state.residual_sup);
    }
    NewtonStepInfo info;
    state = newton_step(state, problem, config, &info);
    rec.residual_history.push_back(state.residual_sup);
    rec.krylov_iterations += info.krylov_iterations;
    rec.safeguard_halvings += info.halvings;
    rec.margin_min = std::min(rec.margin_min, state.cone_margin_min);
  }

  const Evaluation fin = evaluate(problem, state.phi, state.b, false);
  rec.ellipticity_min = fin.ellipticity_min;
  rec.b = state.b;
  rec.sup_phi = state.phi.max();
  rec.inf_phi = state.phi.min();
  rec.iters = state.newton_iters;
  rec.converged = true;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------- continuation

BracketRecord bracket_check(const BackgroundData& bg, double t, double b_t, int m) {
  const TorusGrid& grid = bg.grid();
  const int n = grid.dimension();
  const double cnm = binomial(n, m);
  auto mass = [&](const HermitianField& form, int k) {
    ScalarField s = form_elem_sym(form, bg, k);
    return integrate(s, bg.volume) / binomial(n, k);
  };
  HermitianField base = bg.chi;
  base += bg.chi_tilde;
  HermitianField tilde_t = bg.chi_tilde;
  tilde_t.add_scaled(t, bg.omega);
  HermitianField base_one = base;
  base_one.add_scaled(1.0, bg.omega);

  const double vol = integrate(ScalarField(grid, 1.0), bg.volume);
  const double tilde_top = mass(bg.chi_tilde, n);
  const double base_m = mass(base, m);
  const double base_one_m = mass(base_one, m);
  const double v_t = mass(tilde_t, n);
  (void)cnm;

  BracketRecord r;
  r.t = t;
  r.lower = tilde_top / std::pow(base_one_m, static_cast<double>(n) / m);
  r.middle = v_t / std::exp(n * b_t);
  r.upper = std::pow(base_m, static_cast<double>(n) / m) / std::pow(vol, static_cast<double>(n - m) / m);
  const double slack = 1e-9;
  r.holds = r.lower <= r.middle * (1.0 + slack) + slack && r.middle <= r.upper * (1.0 + slack) + slack;
  return r;
}

ContinuationResult continuation_degenerate(const BackgroundData& bg, const ScalarField& f,
                                           const ContinuationSchedule& schedule, const SolverConfig& config) {
  schedule.validate();
  config.validate();
  ContinuationResult out;
  SolveReport& rep = out.report;
  std::optional<ScalarField> warm;
  try {
    for (std::size_t i = 0; i < schedule.t_values.size(); ++i) {
      const double t = schedule.t_values[i];
      const double sigma = schedule.mollification_sigmas.empty() ? 0.0 : schedule.mollification_sigmas[i];
      const ScalarField f_stage = sigma > 0.0 ? mollify(f, sigma) : f;
      SolverConfig cfg = config;
      cfg.t = t;
      SolveResult res = solve_nondegenerate(bg, t, f_stage, cfg, warm);
      res.record.sigma = sigma;
      rep.brackets.push_back(bracket_check(bg, t, res.record.b_compat, config.m));
      rep.stages.push_back(res.record);
      warm = res.state.phi;
      out.states.push_back(std::move(res.state));
    }
    rep.completed = true;
  } catch (const std::exception& e) {
    rep.completed = false;
    rep.error = e.what();
  }

  std::vector<double> norms;
  for (const auto& s : out.states) norms.push_back(std::max(std::abs(s.phi.max()), std::abs(s.phi.min())));
  if (!norms.empty()) {
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = sorted.size();
    const double median = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
    rep.uniform_bound = sorted.back() <= 3.0 * median;
  }
  rep.b_monotone = true;
  for (std::size_t i = 1; i < rep.stages.size(); ++i)
    rep.b_monotone = rep.b_monotone && rep.stages[i].b_compat <= rep.stages[i - 1].b_compat;
  for (std::size_t i = 1; i < out.states.size(); ++i) {
    double s = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < bg.grid().size(); ++p) s = std::max(s, out.states[i].phi[p] - out.states[i - 1].phi[p]);
    rep.successive_sup_differences.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------- decreasing sequence

ScalarField normalize_sup(const ScalarField& phi) {
  ScalarField out = phi;
  const double top = phi.max();
  for (double& v : out.data()) v -= top;
  return out;
}

double minimal_cap_constant(const std::vector<ScalarField>& phis) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < phis.size(); ++i) {
    double d = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < phis[i].size(); ++p) d = std::max(d, phis[i + 1][p] - phis[i][p]);
    // phi_{i+1} - phi_i <= C (2^{-i} - 2^{-(i+1)}) = C 2^{-(i+1)}
    c = std::max(c, d * std::ldexp(1.0, static_cast<int>(i) + 1));
  }
  return c;
}

double default_cap_constant(const std::vector<ScalarField>& phis) {
  double c = 0.0;
  for (const auto& phi : phis) c = std::max(c, phi.max() - phi.min());
  return c;
}

DecreasingSequence decreasing_sequence(const std::vector<ScalarField>& phis, const std::vector<double>& caps) {
  if (caps.size() != phis.size()) throw ValidationError("decreasing_sequence: one cap per state required");
  DecreasingSequence out;
  out.caps = caps;
  out.violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < phis.size(); ++i) {
    ScalarField psi = phis[i];
    for (double& v : psi.data()) v += caps[i];
    if (i > 0) {
      for (std::size_t p = 0; p < psi.size(); ++p) out.violation = std::max(out.violation, psi[p] - out.psi.back()[p]);
    }
    out.psi.push_back(std::move(psi));
  }
  if (phis.size() < 2) out.violation = 0.0;
  return out;
}

DecreasingSequence decreasing_sequence(const std::vector<ScalarField>& phis, double c) {
  if (!(c > 0.0)) throw ValidationError("decreasing_sequence: C must be positive");
  auto caps_for = [&](double cc) {
    std::vector<double> caps;
    for (std::size_t i = 0; i < phis.size(); ++i) caps.push_back(cc * std::ldexp(1.0, -static_cast<int>(i)));
    return caps;
  };
  DecreasingSequence out = decreasing_sequence(phis, caps_for(c));
  out.c_initial = c;
  out.c_final = c;
  if (out.violation > 0.0) {
    const double violation = out.violation;
    const double needed = minimal_cap_constant(phis);
    // Relative inflation absorbs the roundoff of phi + C/2^i.
    const double c_new = std::max(c, needed * (1.0 + 1e-12));
    out = decreasing_sequence(phis, caps_for(c_new));
    out.c_initial = c;
    out.c_final = c_new;
    out.adjustment = c_new - c;
    out.violation = violation;
  }
  return out;
}

}  // namespace hessianlab
