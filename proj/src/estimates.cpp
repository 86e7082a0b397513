#include "hessianlab/estimates.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/generators.hpp"
#include "hessianlab/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace hessianlab {

// ---------------------------------------------------------------- iteration lemmas

double kolodziej_bound(double c0, double delta0, double s0) {
  if (!(c0 > 0.0 && delta0 > 0.0 && s0 > 0.0)) throw DomainError("kolodziej_bound: arguments must be positive");
  return std::pow(s0 * (1.0 - std::exp2(-delta0)) / (2.0 * c0), 1.0 / delta0);
}

double degiorgi_threshold(double c, double alpha, double delta, double phi_s0) {
  if (!(c > 0.0 && alpha > 0.0 && delta > 0.0) || !(phi_s0 >= 0.0)) {
    throw DomainError("degiorgi_threshold: C, alpha, delta must be positive and phi(s0) nonnegative");
  }
  return std::pow(c, 1.0 / alpha) * std::pow(phi_s0, delta / alpha) * std::exp2((1.0 + delta) / delta);
}

CertifyResult certify_iteration_hypothesis(const IterationHypothesis& h) {
  const auto& s = h.samples.s;
  const auto& phi = h.samples.phi;
  CertifyResult out;
  if (s.size() != phi.size() || s.size() < 3) return out;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1])) return out;
  const std::size_t k = s.size();

  if (h.lemma == IterationLemma::Kolodziej) {
    for (std::size_t i = 1; i < k; ++i) {
      if (phi[i] < phi[i - 1]) return out;
      if (s[i] > 0.0 && !(phi[i] > 0.0)) return out;
    }
    double c = 0.0;
    for (std::size_t j = 1; j < k; ++j) {
      const double denom = std::pow(phi[j], 1.0 + h.delta);
      for (std::size_t i = 0; i < j; ++i) c = std::max(c, (s[j] - s[i]) * phi[i] / denom);
    }
    out.c_min = c;
    out.feasible = true;
    return out;
  }

  for (std::size_t i = 1; i < k; ++i)
    if (phi[i] > phi[i - 1] || phi[i] < 0.0) return out;
  double c = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (phi[i] == 0.0) break;  // everything after is zero as well
    const double denom = std::pow(phi[i], 1.0 + h.delta);
    for (std::size_t j = i + 1; j < k; ++j) {
      if (phi[j] == 0.0) break;
      c = std::max(c, std::pow(s[j] - s[i], h.alpha) * phi[j] / denom);
    }
  }
  out.c_min = c;
  out.feasible = true;
  return out;
}

LemmaCheck check_iteration_lemma(const IterationHypothesis& h, double tol) {
  LemmaCheck out;
  const CertifyResult cert = certify_iteration_hypothesis(h);
  out.certified = cert.feasible;
  out.c_min = cert.c_min;
  if (!cert.feasible) return out;
  const auto& s = h.samples.s;
  const auto& phi = h.samples.phi;
  if (h.lemma == IterationLemma::Kolodziej) {
    out.bound = kolodziej_bound(std::max(cert.c_min, std::numeric_limits<double>::min()), h.delta, s.back());
    out.observed = phi.back();
    out.holds = out.observed >= out.bound - tol;
    return out;
  }
  if (cert.c_min == 0.0) {
    // Only possible when phi(s) vanishes beyond the first sample.
    out.bound = 0.0;
  } else {
    out.bound = degiorgi_threshold(cert.c_min, h.alpha, h.delta, phi.front());
  }
  const double cut = s.front() + out.bound;
  out.observed = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] >= cut && (cert.c_min > 0.0 || i > 0)) out.observed = std::max(out.observed, phi[i]);
  out.holds = out.observed <= tol;
  return out;
}

IterationSamples level_set_mass(const ScalarField& phi, const ScalarField& f, const ScalarField& volume,
                                const std::vector<double>& levels) {
  const double n = phi.grid().dimension();
  const double cell = std::pow(phi.grid().spacing(), phi.grid().axes());
  IterationSamples out;
  out.s = levels;
  std::vector<double> w(phi.size());
  for (double s : levels) {
    for (std::size_t p = 0; p < phi.size(); ++p) w[p] = phi[p] < -s ? std::exp(n * f[p]) * volume[p] : 0.0;
    out.phi.push_back(cell * pairwise_sum(w));
  }
  return out;
}

// ---------------------------------------------------------------- stability

double stability_exponent(int n, double q, double q_prime, double epsilon) {
  if (!(q > 1.0) || !(q_prime > 0.0) || !(epsilon > 0.0)) throw DomainError("stability_exponent: need q > 1, q' > 0, eps > 0");
  const double q_star = q / (q - 1.0);
  return q_prime / (n * q_star + q_prime + epsilon);
}

namespace {

double lq_of_positive_part(const ScalarField& diff, double q_prime, const ScalarField& volume) {
  std::vector<double> w(diff.size());
  for (std::size_t p = 0; p < diff.size(); ++p) w[p] = std::pow(std::max(0.0, diff[p]), q_prime) * volume[p];
  const double cell = std::pow(diff.grid().spacing(), diff.grid().axes());
  return std::pow(cell * pairwise_sum(w), 1.0 / q_prime);
}

ScalarField exp_field(const ScalarField& f, double k) {
  ScalarField out = f;
  for (double& v : out.data()) v = std::exp(k * v);
  return out;
}

}  // namespace

StabilityResult stability_experiment(const BackgroundData& bg, double t, const ScalarField& f_base,
                                     const ScalarField& perturbation, const std::vector<double>& scales,
                                     const StabilityOptions& options, const SolverConfig& config) {
  const int n = bg.grid().dimension();
  const int m = config.m;
  StabilityResult out;
  out.predicted_exponent = stability_exponent(n, options.q, options.q_prime, options.epsilon);
  out.floor = out.predicted_exponent - 0.1;

  SolverConfig cfg = config;
  cfg.t = t;
  SolveResult base;
  try {
    base = solve_nondegenerate(bg, t, f_base, cfg);
  } catch (const std::exception& e) {
    out.partial = true;
    out.error = std::string("base solve: ") + e.what();
    return out;
  }
  out.density_bound = lp_norm(exp_field(f_base, n), options.q, bg.volume);
  const ScalarField e1 = exp_field(f_base, m);

  for (double scale : scales) {
    StabilityRecord rec;
    rec.eps_scale = scale;
    rec.predicted_exponent = out.predicted_exponent;
    ScalarField f2 = f_base;
    for (std::size_t p = 0; p < f2.size(); ++p) f2[p] += scale * perturbation[p];
    rec.density_lq = lp_norm(exp_field(f2, n), options.q, bg.volume);
    out.density_bound = std::max(out.density_bound, rec.density_lq);
    ScalarField gap = exp_field(f2, m);
    for (std::size_t p = 0; p < gap.size(); ++p) gap[p] = std::abs(gap[p] - e1[p]);
    rec.l1_gap = integrate(gap, bg.volume);
    try {
      const SolveResult other = solve_nondegenerate(bg, t, f2, cfg, base.state.phi);
      ScalarField diff = other.state.phi;
      for (std::size_t p = 0; p < diff.size(); ++p) diff[p] -= base.state.phi[p];
      rec.raw_sup_gap = diff.max();
      rec.centered_oscillation = 0.5 * (diff.max() - diff.min());
      // Sup-normalizing both states lines up their maxima and hides the gap; shift
      // phi_2 so that sup(phi_2 - phi_1) = sup(phi_1 - phi_2).
      const double shift = -0.5 * (diff.max() + diff.min());
      for (double& v : diff.data()) v += shift;
      rec.sup_gap = std::max(0.0, diff.max());
      rec.lq_gap_plus = lq_of_positive_part(diff, options.q_prime, bg.volume);
      rec.converged = true;
    } catch (const std::exception& e) {
      out.partial = true;
      if (out.error.empty()) out.error = e.what();
    }
    out.records.push_back(rec);
  }

  // Least-squares slope of log sup_gap against log lq_gap_plus.
  std::vector<double> xs, ys;
  for (const auto& r : out.records)
    if (r.converged && r.sup_gap > 0.0 && r.lq_gap_plus > 0.0) {
      xs.push_back(std::log(r.lq_gap_plus));
      ys.push_back(std::log(r.sup_gap));
    }
  if (xs.size() >= 2) {
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0.0) {
      out.fitted = true;
      out.fitted_exponent = sxy / sxx;
      out.exponent_ok = out.fitted_exponent >= out.floor;
    }
  }
  out.bound_constant = 0.0;
  out.bound_finite = true;
  for (const auto& r : out.records) {
    if (!r.converged) continue;
    if (r.sup_gap == 0.0) continue;
    if (r.lq_gap_plus == 0.0) {
      out.bound_finite = false;
      continue;
    }
    out.bound_constant = std::max(out.bound_constant, r.sup_gap / std::pow(r.lq_gap_plus, out.predicted_exponent));
  }
  out.bound_finite = out.bound_finite && std::isfinite(out.bound_constant);

  std::vector<const StabilityRecord*> order;
  for (const auto& r : out.records)
    if (r.converged) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->eps_scale < b->eps_scale; });
  out.monotone = true;
  for (std::size_t i = 1; i < order.size(); ++i)
    out.monotone = out.monotone && order[i]->sup_gap >= order[i - 1]->sup_gap - 1e-12;
  return out;
}

// ---------------------------------------------------------------- viscosity

namespace {

/// F of a form at p with respect to omega; -inf when S_m < 0.
/// `closed_member` reports whether lambda lies in the closed cone Gamma^m.
double operator_value(const Eigen::MatrixXcd& form, const BackgroundData& bg, std::size_t p, int m,
                      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& es, bool& closed_member) {
  const int n = form.rows();
  const auto w = bg.omega_inv_sqrt.at(p);
  const Eigen::MatrixXcd c = w * form * w;
  es.compute(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  std::array<double, kMaxDimension + 1> e{};
  elem_sym_upto(es.eigenvalues().data(), n, m, e.data());
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  closed_member = true;
  for (int k = 1; k <= m; ++k) closed_member = closed_member && e[k] >= -1e-12 * std::pow(scale, k);
  if (e[m] < 0.0) return -std::numeric_limits<double>::infinity();
  return std::pow(e[m] / binomial(n, m), 1.0 / m);
}

}  // namespace

ViscosityReport viscosity_check(const ScalarField& phi, double b, const BackgroundData& bg, double t,
                                const ScalarField& f, int m, int samples, std::uint64_t seed) {
  const TorusGrid& grid = bg.grid();
  const int n = grid.dimension();
  const double h = grid.spacing();
  ViscosityReport rep;
  rep.tolerance = 10.0 * h * h;

  std::vector<std::size_t> points(grid.size());
  std::iota(points.begin(), points.end(), std::size_t{0});
  if (samples > 0 && static_cast<std::size_t>(samples) < grid.size()) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    std::sample(points.begin(), points.end(), std::back_inserter(chosen), samples, rng);
    points = std::move(chosen);
  }

  const HermitianField base = stage_form(bg, t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
  std::array<double, kMaxAxes * kMaxAxes> d{};
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(n, n);
  const double etas[2] = {2.0 * h * h, 4.0 * h * h};
  for (std::size_t p : points) {
    ++rep.checked;
    real_second_differences(grid, phi.data().data(), p, d.data());
    const Eigen::MatrixXcd local = base.at(p) + complex_from_real(d.data(), n);
    const double target = std::exp(b + f[p]);
    bool violated = false;
    for (double eta : etas) {
      bool member = false;
      // Quadratic touching from above: the subsolution inequality.
      const double upper = operator_value(local + eta * identity, bg, p, m, es, member);
      if (!member || upper < target - rep.tolerance) {
        ++rep.sub_violations;
        violated = true;
      }
      // From below: the supersolution inequality, only while the form stays in the closed cone.
      const double lower = operator_value(local - eta * identity, bg, p, m, es, member);
      if (!member) {
        ++rep.super_skipped;
      } else if (lower > target + rep.tolerance) {
        ++rep.super_violations;
        violated = true;
      }
    }
    if (violated) rep.violating_points.push_back(p);
  }
  return rep;
}

// ---------------------------------------------------------------- uniqueness

namespace {

ScalarField energy_density(const ScalarField& u, const BackgroundData& bg, double t) {
  const TorusGrid& grid = u.grid();
  const int n = grid.dimension();
  const HermitianField y = stage_form(bg, t);
  ScalarField dens(grid, 0.0);
  std::array<double, kMaxAxes> g{};
  Eigen::VectorXcd v(n);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    real_first_differences(grid, u.data().data(), p, g.data());
    for (int i = 0; i < n; ++i) v[i] = std::complex<double>(0.5 * g[2 * i], -0.5 * g[2 * i + 1]);
    const auto w = bg.omega_inv_sqrt.at(p);
    const Eigen::VectorXcd vt = w * v;
    const Eigen::MatrixXcd yt = w * y.at(p) * w;
    const Eigen::MatrixXcd tens = yt.trace().real() * Eigen::MatrixXcd::Identity(n, n) - yt;
    dens[p] = (vt.adjoint() * tens * vt)(0, 0).real();
  }
  return dens;
}

}  // namespace

double uniqueness_energy(const ScalarField& phi1, const ScalarField& phi2, const BackgroundData& bg, double t) {
  if (bg.grid().dimension() < 2) throw DomainError("uniqueness_energy: requires n >= 2");
  if (!(phi1.grid() == bg.grid()) || !(phi2.grid() == bg.grid())) throw ValidationError("uniqueness_energy: grid mismatch");
  ScalarField u = phi1;
  for (std::size_t p = 0; p < u.size(); ++p) u[p] -= phi2[p];
  return integrate(energy_density(u, bg, t), bg.volume);
}

double normalized_uniqueness_energy(const ScalarField& phi1, const ScalarField& phi2, const BackgroundData& bg,
                                    double t) {
  const double e = uniqueness_energy(phi1, phi2, bg, t);
  const TorusGrid& grid = bg.grid();
  const HermitianField y = stage_form(bg, t);
  double ynorm = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto w = bg.omega_inv_sqrt.at(p);
    const Eigen::MatrixXcd yt = w * y.at(p) * w;
    ynorm = std::max(ynorm, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(yt, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .cwiseAbs()
                                .maxCoeff());
  }
  ScalarField grad2(grid, 0.0);
  std::array<double, kMaxAxes> g{};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    real_first_differences(grid, phi1.data().data(), p, g.data());
    for (int a = 0; a < grid.axes(); ++a) grad2[p] += g[a] * g[a];
  }
  const double denom = ynorm * integrate(grad2, bg.volume);
  return denom > 0.0 ? e / denom : e;
}

// ---------------------------------------------------------------- trace monitor

MonitorReport laplacian_monitor(const SolverState& state, const BackgroundData& bg, double t, const ScalarField& f,
                                int m) {
  MonitorReport rep;
  rep.kappa = bg.kappa;
  if (!bg.constant_metric) {
    rep.skipped = true;
    rep.notice = "monitor needs a constant metric (curvature terms are dropped)";
    return rep;
  }
  if (!(bg.kappa > 0.0)) {
    rep.skipped = true;
    rep.notice = "monitor needs chi_tilde >= kappa omega with kappa > 0";
    return rep;
  }
  const TorusGrid& grid = bg.grid();
  const int n = grid.dimension();
  rep.c_geometry = 0.0;
  rep.a = (rep.c_geometry + 1.0) / bg.kappa;

  const HermitianField base = stage_form(bg, t);
  const HermitianField hess = complex_hessian(state.phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
  double sup_w = -std::numeric_limits<double>::infinity();
  double consistency = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Eigen::MatrixXcd x = base.at(p) + hess.at(p);
    const auto w = bg.omega_inv_sqrt.at(p);
    const Eigen::MatrixXcd xt = w * x * w;
    es.compute(0.5 * (xt + xt.adjoint()), Eigen::EigenvaluesOnly);
    const double s1 = es.eigenvalues().sum();
    const double tr = (bg.omega.at(p).lu().solve(x)).trace().real();
    consistency = std::max(consistency, std::abs(s1 - tr) / std::max(1.0, std::abs(s1)));
    sup_w = std::max(sup_w, s1);
  }
  rep.sup_w = sup_w;
  rep.trace_consistency = consistency;

  // Bound at the maximum point, maximized over the grid since x_max is not known a priori:
  //   S_1 <= 2^{m-2} n e^{m b} e^f (|Delta e^f|^{m-1} + (A kappa)^{m-1} e^{(m-1) f}),
  // then sup w <= that + A (-inf phi).
  const ScalarField ef = exp_field(f, 1.0);
  const HermitianField hef = complex_hessian(ef);
  double at_max = 0.0;
  const double ak = rep.a * bg.kappa;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double lap = (bg.omega.at(p).lu().solve(Eigen::MatrixXcd(hef.at(p)))).trace().real();
    const double v = std::exp2(m - 2.0) * n * std::exp(m * state.b) * ef[p] *
                     (std::pow(std::abs(lap), m - 1.0) + std::pow(ak, m - 1.0) * std::exp((m - 1.0) * f[p]));
    at_max = std::max(at_max, v);
  }
  rep.bound_rhs = at_max + rep.a * (-state.phi.min());
  rep.bound_holds = rep.sup_w <= rep.bound_rhs;
  return rep;
}

// ---------------------------------------------------------------- sup-norm table

UniformityReport linf_uniformity_report(const std::vector<double>& t_values, const std::vector<ScalarField>& phis,
                                        const ScalarField& f, double p, const ScalarField& volume) {
  if (t_values.size() != phis.size() || phis.empty()) throw ValidationError("linf_uniformity_report: need one state per t");
  UniformityReport rep;
  const double entropy = entropy_functional(f, p, volume);
  std::vector<double> norms;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const double linf = lp_norm(phis[i], std::numeric_limits<double>::infinity(), volume);
    rep.rows.push_back({t_values[i], linf, entropy});
    norms.push_back(linf);
  }
  std::sort(norms.begin(), norms.end());
  const std::size_t k = norms.size();
  rep.max_linf = norms.back();
  rep.median_linf = k % 2 ? norms[k / 2] : 0.5 * (norms[k / 2 - 1] + norms[k / 2]);
  rep.passes = rep.max_linf <= 3.0 * rep.median_linf;
  return rep;
}

}  // namespace hessianlab
