#pragma once

// Experiment configuration: one INI-style text file with the sections
// [problem], [solver], [experiment] and [run]. See README for the key list.

#include "hessianlab/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hessianlab {

enum class RhsKind { Constant, Trig, Bump, LqSample, Manufactured, File };

struct ProblemConfig {
  int n = 2;
  int m = 2;
  int N = 16;
  double L = 6.283185307179586;
  std::vector<double> omega_diag;  // default: ones
  std::vector<double> chi_diag;    // default: zeros
  double kappa = 1.0;
  /// Trigonometric potential added to chi; 0 modes = constant background.
  int potential_modes = 0;
  int potential_wavenumber = 1;
  double potential_scale = 0.1;

  RhsKind f = RhsKind::Constant;
  double f_value = 0.0;
  double f_amplitude = 0.2;
  double f_width = 0.6;
  std::vector<double> f_center;  // default: centre of the torus
  int f_modes = 3;
  int f_wavenumber = 1;
  double f_exponent = 1.0;
  double f_cap = 50.0;
  std::string f_path;
  /// Shift f so that both sides of the equation carry the same total mass.
  bool normalize = true;

  /// phi* for f = manufactured.
  int phi_star_modes = 3;
  int phi_star_wavenumber = 1;
  double phi_star_margin = 0.1;
  /// Use the difference stencil for the manufactured right-hand side (exact discrete solution).
  bool phi_star_discrete = false;

  double t = 1.0;
  double q = 2.0;
  double q_prime = 1.0;
  double p = 2.0;
};

struct ScheduleConfig {
  int stages = 12;
  double t_max = 1.0;
  double ratio = 0.5;
  bool mollify = false;
};

struct ExperimentOptions {
  // stability
  std::vector<double> scales{0.05, 0.1, 0.2, 0.4};
  double perturbation_amplitude = 0.5;
  double perturbation_width = 0.6;
  std::vector<double> perturbation_center;  // default: centre of the torus
  double epsilon = 0.5;
  // solve
  std::vector<int> refine;  // extra N values for the error-vs-h table (manufactured only)
  // continuation
  double cap_constant = 0.0;  // 0 = max oscillation
  // verify
  int viscosity_samples = 0;  // <= 0: every point
  double noise_amplitude = 0.01;
  bool inject_spike = false;
  double spike_amplitude = 1.0;
  int lemma_families = 100;
  // conecheck
  std::string field_path;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  int threads = 0;  // 0 = all cores
};

struct ExperimentConfig {
  ProblemConfig problem;
  SolverConfig solver;
  ScheduleConfig schedule;
  ExperimentOptions experiment;
  RunConfig run;

  /// Full validation; throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses `key = value` lines under `[section]` headers; `#` and `;` start comments.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

const char* rhs_kind_name(RhsKind k);

}  // namespace hessianlab
