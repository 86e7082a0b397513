#pragma once

// Numeric forms of the iteration lemmas and the verification experiments built on
// the solver: stability exponents, viscosity touching tests, the uniqueness energy,
// the second-order (trace) monitor and the t-uniform sup-norm table.

#include "hessianlab/grid.hpp"
#include "hessianlab/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hessianlab {

// ---------------------------------------------------------------- iteration lemmas

/// (s0 (1 - 2^{-delta0}) / (2 C0))^{1/delta0}: lower bound for phi(s0) when phi is
/// increasing, phi(0+) = 0 and t phi(s - t) <= C0 phi(s)^{1+delta0} for 0 < t < s.
double kolodziej_bound(double c0, double delta0, double s0);

/// C^{1/alpha} phi(s0)^{delta/alpha} 2^{(1+delta)/delta}: phi vanishes beyond s0 + d when
/// s'^alpha phi(s + s') <= C phi(s)^{1+delta}.
double degiorgi_threshold(double c, double alpha, double delta, double phi_s0);

enum class IterationLemma { Kolodziej, DeGiorgi };

/// Sampled phi on an increasing grid of s values. For the Kolodziej form the grid
/// starts at s = 0 and ends at s0; for the De Giorgi form it starts at s0.
struct IterationSamples {
  std::vector<double> s;
  std::vector<double> phi;
};

struct IterationHypothesis {
  IterationSamples samples;
  IterationLemma lemma = IterationLemma::Kolodziej;
  /// delta0 (Kolodziej) or delta (De Giorgi)
  double delta = 1.0;
  /// De Giorgi only
  double alpha = 1.0;
};

struct CertifyResult {
  double c_min = 0.0;
  bool feasible = false;
};

/// Smallest constant for which the lemma's hypothesis holds on every sample pair.
/// Infeasible when the samples break the required monotonicity (nondecreasing for
/// Kolodziej, nonincreasing for De Giorgi) or fewer than 3 samples are given.
CertifyResult certify_iteration_hypothesis(const IterationHypothesis& h);

struct LemmaCheck {
  bool certified = false;
  bool holds = false;
  double c_min = 0.0;
  /// Kolodziej: the lower bound; De Giorgi: the threshold d.
  double bound = 0.0;
  /// Kolodziej: phi(s0); De Giorgi: largest phi at s >= s0 + d.
  double observed = 0.0;
};

/// Certifies the hypothesis, then asserts the conclusion on the samples (tolerance `tol`).
LemmaCheck check_iteration_lemma(const IterationHypothesis& h, double tol = 1e-12);

/// s -> int_{phi < -s} e^{nf} dvol at the given levels (nonincreasing in s).
IterationSamples level_set_mass(const ScalarField& phi, const ScalarField& f, const ScalarField& volume,
                                const std::vector<double>& levels);

// ---------------------------------------------------------------- stability

struct StabilityRecord {
  double eps_scale = 0.0;
  /// ||e^{m f_1} - e^{m f_2}||_{L^1}
  double l1_gap = 0.0;
  /// ||(phi_2 - phi_1)^+||_{L^{q'}} after centering (sup of the difference equals sup of its negative)
  double lq_gap_plus = 0.0;
  /// sup (phi_2 - phi_1), centered as above
  double sup_gap = 0.0;
  /// sup (phi_2 - phi_1) with both states sup-normalized
  double raw_sup_gap = 0.0;
  /// inf_c sup |phi_2 - phi_1 - c|
  double centered_oscillation = 0.0;
  /// ||e^{n f_2}||_{L^q}
  double density_lq = 0.0;
  double predicted_exponent = 0.0;
  bool converged = false;
};

struct StabilityResult {
  std::vector<StabilityRecord> records;
  double floor = 0.0;           // q'/(n q* + q' + eps) - 0.1 is the acceptance line
  double predicted_exponent = 0.0;
  bool fitted = false;
  double fitted_exponent = 0.0;
  bool exponent_ok = false;
  /// max over records of sup_gap / lq_gap_plus^{predicted_exponent}
  double bound_constant = 0.0;
  bool bound_finite = false;
  bool monotone = false;
  /// max ||e^{nf}||_{L^q} over all data
  double density_bound = 0.0;
  bool partial = false;
  std::string error;
};

struct StabilityOptions {
  double q = 2.0;
  double q_prime = 1.0;
  double epsilon = 0.5;
};

/// Solves the pairs (f_base, f_base + scale * perturbation) and fits
/// log sup_gap against log ||(phi_2 - phi_1)^+||_{L^{q'}}.
StabilityResult stability_experiment(const BackgroundData& bg, double t, const ScalarField& f_base,
                                     const ScalarField& perturbation, const std::vector<double>& scales,
                                     const StabilityOptions& options, const SolverConfig& config);

/// q'/(n q* + q' + eps), q* = q / (q - 1).
double stability_exponent(int n, double q, double q_prime, double epsilon);

// ---------------------------------------------------------------- viscosity

struct ViscosityReport {
  int checked = 0;
  int sub_violations = 0;
  int super_violations = 0;
  /// supersolution tests skipped because the lowered form exits the closed cone
  int super_skipped = 0;
  double tolerance = 0.0;
  std::vector<std::size_t> violating_points;
  int violations() const noexcept { return sub_violations + super_violations; }
};

/// Touching-quadratic test at `samples` random points (every point when samples <= 0
/// or samples >= grid size).
ViscosityReport viscosity_check(const ScalarField& phi, double b, const BackgroundData& bg, double t,
                                const ScalarField& f, int m, int samples, std::uint64_t seed = 1);

// ---------------------------------------------------------------- uniqueness

/// int T(du, dbar u) dV with u = phi1 - phi2 and T = tr(Y) - Y in omega-orthonormal
/// frames, Y = chi + chi_tilde + t omega.
double uniqueness_energy(const ScalarField& phi1, const ScalarField& phi2, const BackgroundData& bg, double t);

/// E / (sup ||Y|| * int |grad phi1|^2).
double normalized_uniqueness_energy(const ScalarField& phi1, const ScalarField& phi2, const BackgroundData& bg,
                                    double t);

// ---------------------------------------------------------------- trace monitor

struct MonitorReport {
  bool skipped = false;
  std::string notice;
  double sup_w = 0.0;
  double bound_rhs = 0.0;
  double a = 0.0;
  double kappa = 0.0;
  /// C(chi, chi_tilde, omega); zero on the flat torus with constant coefficients.
  double c_geometry = 0.0;
  bool bound_holds = false;
  /// max |S_1(lambda(X)) - tr(omega^{-1} X)| / max(1, |w|)
  double trace_consistency = 0.0;
};

/// w = S_1(lambda(X)) and the maximum-principle bound with rho = 0 and A kappa = C + 1.
/// Refuses (skipped) unless omega is constant and kappa > 0.
MonitorReport laplacian_monitor(const SolverState& state, const BackgroundData& bg, double t, const ScalarField& f,
                                int m);

// ---------------------------------------------------------------- sup-norm table

struct UniformityRow {
  double t = 0.0;
  double linf = 0.0;
  double entropy = 0.0;
};

struct UniformityReport {
  std::vector<UniformityRow> rows;
  double max_linf = 0.0;
  double median_linf = 0.0;
  bool passes = false;
};

UniformityReport linf_uniformity_report(const std::vector<double>& t_values, const std::vector<ScalarField>& phis,
                                        const ScalarField& f, double p, const ScalarField& volume);

}  // namespace hessianlab
