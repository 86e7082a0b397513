#pragma once

// Newton / continuation solver for
//   S_m(lambda(X)) = C(n,m) e^{m b} e^{m f},   X = chi + chi_tilde + t omega + i ddbar phi,
// in log-residual form, with the compatibility constant b solved jointly.

#include "hessianlab/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hessianlab {

struct SolverConfig {
  int m = 2;
  double t = 1.0;
  double newton_tol = 1e-9;
  int max_newton = 60;
  double cone_margin = 1e-8;
  /// Initial step factor of the line search.
  double damping = 1.0;
  double damping_floor = 0x1p-20;
  int krylov_restart = 40;
  int krylov_max_iterations = 400;

  void validate() const;
};

struct SolverState {
  ScalarField phi;
  double b = 0.0;
  double residual_sup = 0.0;
  double cone_margin_min = 0.0;
  int newton_iters = 0;
};

struct ContinuationSchedule {
  std::vector<double> t_values;
  /// Empty, or one standard deviation per stage for mollifying f.
  std::vector<double> mollification_sigmas;

  /// t_i = t_max * ratio^i, i = 0..stages-1.
  static ContinuationSchedule geometric(int stages, double t_max = 1.0, double ratio = 0.5);
  /// sigma_i = h * 2^{K-i}, floored at h, K = stages - 1.
  void set_stage_mollification(double h);
  void validate() const;
};

struct StageRecord {
  double t = 0.0;
  double b = 0.0;
  /// b from the integral compatibility formula.
  double b_compat = 0.0;
  std::vector<double> residual_history;
  double sup_phi = 0.0;
  double inf_phi = 0.0;
  double margin_min = 0.0;
  double ellipticity_min = 0.0;
  int iters = 0;
  int krylov_iterations = 0;
  int safeguard_halvings = 0;
  double seconds = 0.0;
  double sigma = 0.0;
  bool converged = false;
};

/// Both sides of the two-sided bound on V_t / e^{n b_t}.
struct BracketRecord {
  double t = 0.0;
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  bool holds = false;
};

struct SolveReport {
  std::vector<StageRecord> stages;
  std::vector<BracketRecord> brackets;
  /// max_t ||phi_t||_inf <= 3 median_t ||phi_t||_inf
  bool uniform_bound = false;
  /// b_compat nonincreasing as t decreases
  bool b_monotone = false;
  /// sup(phi_{t_{i+1}} - phi_{t_i}) along the schedule
  std::vector<double> successive_sup_differences;
  bool completed = false;
  std::string error;
};

/// Everything fixed during one stage solve.
struct StageProblem {
  const BackgroundData* bg = nullptr;
  double t = 1.0;
  int m = 2;
  ScalarField f;
  HermitianField base;  // chi + chi_tilde + t omega
};

StageProblem make_stage(const BackgroundData& bg, double t, const ScalarField& f, int m);

/// Pointwise evaluation of the log-residual at (phi, b).
struct Evaluation {
  std::vector<double> residual;
  /// Real (2n)x(2n) coefficients per point of the linearization sum_ab C_ab D_ab.
  std::vector<double> coefficients;
  double min_margin = 0.0;
  std::size_t worst_point = 0;
  /// min over points of the smallest eigenvalue of dlog S_m / dlambda.
  double ellipticity_min = 0.0;
  bool admissible = false;
};

Evaluation evaluate(const StageProblem& problem, const ScalarField& phi, double b, bool with_coefficients);

/// b with e^{mb} = int S_m(lambda(chi+chi_tilde+t omega)) omega^n / (C(n,m) int e^{mf} omega^n).
double compatibility_constant(const BackgroundData& bg, double t, const ScalarField& f, int m);

/// log S_m(lambda(X)) - log C(n,m) - m (f + b). Throws ConeViolationError outside Gamma^m.
ScalarField residual(const ScalarField& phi, double b, const BackgroundData& bg, double t, const ScalarField& f, int m);

/// Applies the linearization of `residual` at (phi, b) to (v, beta).
ScalarField apply_linearization(const StageProblem& problem, const ScalarField& phi, double b, const ScalarField& v,
                                double beta);

struct NewtonStepInfo {
  double step_norm = 0.0;  // sup |delta phi|
  double delta_b = 0.0;
  double step_factor = 0.0;
  int halvings = 0;
  int krylov_iterations = 0;
  double krylov_relative_residual = 0.0;
  double margin_after = 0.0;
};

/// One safeguarded inexact Newton step. Throws NonconvergenceError when the line
/// search reaches the damping floor.
SolverState newton_step(const SolverState& state, const StageProblem& problem, const SolverConfig& config,
                        NewtonStepInfo* info = nullptr);

struct SolveResult {
  SolverState state;
  StageRecord record;
};

/// Newton from phi = 0 (or `warm_start`) until residual_sup < newton_tol.
SolveResult solve_nondegenerate(const BackgroundData& bg, double t, const ScalarField& f, const SolverConfig& config,
                                const std::optional<ScalarField>& warm_start = {});

struct ContinuationResult {
  std::vector<SolverState> states;
  SolveReport report;
};

/// Solves the t-family in decreasing t with warm starts. Stage failures end the run
/// with report.completed = false and the partial results kept.
ContinuationResult continuation_degenerate(const BackgroundData& bg, const ScalarField& f,
                                           const ContinuationSchedule& schedule, const SolverConfig& config);

BracketRecord bracket_check(const BackgroundData& bg, double t, double b_t, int m);

struct DecreasingSequence {
  std::vector<ScalarField> psi;
  std::vector<double> caps;
  double c_initial = 0.0;
  double c_final = 0.0;
  /// c_final - c_initial; zero when no adjustment was needed.
  double adjustment = 0.0;
  /// Largest pointwise psi_{i+1} - psi_i before adjustment.
  double violation = 0.0;
};

/// Smallest C with phi_{i+1} + C/2^{i+1} <= phi_i + C/2^i pointwise.
double minimal_cap_constant(const std::vector<ScalarField>& phis);

/// max_i osc(phi_i)
double default_cap_constant(const std::vector<ScalarField>& phis);

/// psi_i = phi_i + C/2^i, enlarging C once if the ordering fails.
DecreasingSequence decreasing_sequence(const std::vector<ScalarField>& phis, double c);

/// psi_i = phi_i + caps_i with explicit caps; no adjustment. `violation` reports the failure.
DecreasingSequence decreasing_sequence(const std::vector<ScalarField>& phis, const std::vector<double>& caps);

ScalarField normalize_sup(const ScalarField& phi);

}  // namespace hessianlab
