#pragma once

// Batch commands behind the CLI. Each returns a process exit code and writes its
// artifacts under config.run.output_dir; diagnostics go to `err`.

#include "hessianlab/config.hpp"
#include "hessianlab/estimates.hpp"
#include "hessianlab/generators.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace hessianlab {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNonconvergence = 2,
  kExitPartial = 3,
  kExitVerification = 4,
};

/// Problem data assembled from a validated config.
struct ProblemData {
  TorusGrid grid;
  BackgroundData bg;
  ScalarField f;
  /// Set when f is manufactured.
  std::optional<TrigPolynomial> phi_star;
};

ProblemData build_problem(const ExperimentConfig& cfg);
/// Same problem on a grid with N points per axis (phi* and f rebuilt on it).
ProblemData build_problem(const ExperimentConfig& cfg, int N);

/// Uniform noise of the given amplitude, halved until chi + chi_tilde + t omega + i ddbar
/// stays in Gamma^m with margin `margin`.
ScalarField seeded_noise(const BackgroundData& bg, double t, int m, double amplitude, double margin,
                         std::uint64_t seed);

/// Analytic families for which the lemma's conclusion holds with room to spare.
std::vector<IterationHypothesis> synthetic_families(IterationLemma lemma, int count, std::uint64_t seed);

int cmd_solve(const ExperimentConfig& cfg, std::ostream& err);
int cmd_continuation(const ExperimentConfig& cfg, std::ostream& err);
int cmd_stability(const ExperimentConfig& cfg, std::ostream& err);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& err);

/// Inline tuple such as "(1, 1, 1)".
int cmd_conecheck(const std::string& tuple, int m, std::ostream& out, std::ostream& err);
/// Field file (Hermitian or eigenvalue HLF1); a config supplies m and omega.
int cmd_conecheck_field(const std::string& path, const std::optional<ExperimentConfig>& cfg, int m, std::ostream& out,
                        std::ostream& err);

/// Loads the config, then dispatches; config problems map to exit code 1.
int run_command(const std::string& command, const std::string& config_path, std::ostream& err);

}  // namespace hessianlab
