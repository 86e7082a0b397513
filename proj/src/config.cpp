#include "hessianlab/config.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/grid.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace hessianlab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) bad(key, "not a finite number: '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    bad(key, "not a number: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, "not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, "not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == '[' || c == ']' || c == '(' || c == ')') c = ' ';
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(static_cast<int>(to_int(key, s)));
  return out;
}

RhsKind to_rhs(const std::string& key, const std::string& v) {
  if (v == "constant") return RhsKind::Constant;
  if (v == "trig") return RhsKind::Trig;
  if (v == "bump") return RhsKind::Bump;
  if (v == "lq_sample") return RhsKind::LqSample;
  if (v == "manufactured") return RhsKind::Manufactured;
  if (v == "file") return RhsKind::File;
  bad(key, "unknown right-hand side '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

#define DBL(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }
#define INT(field) \
  [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = static_cast<int>(to_int(k, v)); }
#define BOOL(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }
#define DBLS(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_doubles(k, v); }
#define STR(field) [](ExperimentConfig& c, const std::string&, const std::string& v) { c.field = v; }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem.n", INT(problem.n)},
      {"problem.m", INT(problem.m)},
      {"problem.N", INT(problem.N)},
      {"problem.L", DBL(problem.L)},
      {"problem.omega_diag", DBLS(problem.omega_diag)},
      {"problem.chi_diag", DBLS(problem.chi_diag)},
      {"problem.kappa", DBL(problem.kappa)},
      {"problem.potential_modes", INT(problem.potential_modes)},
      {"problem.potential_wavenumber", INT(problem.potential_wavenumber)},
      {"problem.potential_scale", DBL(problem.potential_scale)},
      {"problem.f", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.problem.f = to_rhs(k, v); }},
      {"problem.f_value", DBL(problem.f_value)},
      {"problem.f_amplitude", DBL(problem.f_amplitude)},
      {"problem.f_width", DBL(problem.f_width)},
      {"problem.f_center", DBLS(problem.f_center)},
      {"problem.f_modes", INT(problem.f_modes)},
      {"problem.f_wavenumber", INT(problem.f_wavenumber)},
      {"problem.f_exponent", DBL(problem.f_exponent)},
      {"problem.f_cap", DBL(problem.f_cap)},
      {"problem.f_path", STR(problem.f_path)},
      {"problem.normalize", BOOL(problem.normalize)},
      {"problem.phi_star_modes", INT(problem.phi_star_modes)},
      {"problem.phi_star_wavenumber", INT(problem.phi_star_wavenumber)},
      {"problem.phi_star_margin", DBL(problem.phi_star_margin)},
      {"problem.phi_star_discrete", BOOL(problem.phi_star_discrete)},
      {"problem.t", DBL(problem.t)},
      {"problem.q", DBL(problem.q)},
      {"problem.q_prime", DBL(problem.q_prime)},
      {"problem.p", DBL(problem.p)},
      {"solver.newton_tol", DBL(solver.newton_tol)},
      {"solver.max_newton", INT(solver.max_newton)},
      {"solver.cone_margin", DBL(solver.cone_margin)},
      {"solver.damping", DBL(solver.damping)},
      {"solver.damping_floor", DBL(solver.damping_floor)},
      {"solver.krylov_restart", INT(solver.krylov_restart)},
      {"solver.krylov_max_iterations", INT(solver.krylov_max_iterations)},
      {"solver.stages", INT(schedule.stages)},
      {"solver.t_max", DBL(schedule.t_max)},
      {"solver.ratio", DBL(schedule.ratio)},
      {"solver.mollify", BOOL(schedule.mollify)},
      {"experiment.scales", DBLS(experiment.scales)},
      {"experiment.perturbation_amplitude", DBL(experiment.perturbation_amplitude)},
      {"experiment.perturbation_width", DBL(experiment.perturbation_width)},
      {"experiment.perturbation_center", DBLS(experiment.perturbation_center)},
      {"experiment.epsilon", DBL(experiment.epsilon)},
      {"experiment.refine", [](ExperimentConfig& c, const std::string& k,
                               const std::string& v) { c.experiment.refine = to_ints(k, v); }},
      {"experiment.cap_constant", DBL(experiment.cap_constant)},
      {"experiment.viscosity_samples", INT(experiment.viscosity_samples)},
      {"experiment.noise_amplitude", DBL(experiment.noise_amplitude)},
      {"experiment.inject_spike", BOOL(experiment.inject_spike)},
      {"experiment.spike_amplitude", DBL(experiment.spike_amplitude)},
      {"experiment.lemma_families", INT(experiment.lemma_families)},
      {"experiment.field_path", STR(experiment.field_path)},
      {"run.seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         if (s < 0) bad(k, "seed must be unsigned");
         c.run.seed = static_cast<std::uint64_t>(s);
       }},
      {"run.output_dir", [](ExperimentConfig& c, const std::string&,
                            const std::string& v) { c.run.output_dir = v; }},
      {"run.threads", INT(run.threads)},
  };
  return table;
}

#undef DBL
#undef INT
#undef BOOL
#undef DBLS
#undef STR

}  // namespace

const char* rhs_kind_name(RhsKind k) {
  switch (k) {
    case RhsKind::Constant: return "constant";
    case RhsKind::Trig: return "trig";
    case RhsKind::Bump: return "bump";
    case RhsKind::LqSample: return "lq_sample";
    case RhsKind::Manufactured: return "manufactured";
    case RhsKind::File: return "file";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line, section;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "solver" && section != "experiment" && section != "run") {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) bad(key, "unknown key");
    if (seen[key]++) bad(key, "given twice");
    if (value.empty()) bad(key, "empty value");
    it->second(cfg, key, value);
  }
  cfg.solver.m = cfg.problem.m;
  cfg.solver.t = cfg.problem.t;
  if (cfg.problem.omega_diag.empty() && cfg.problem.n >= 1 && cfg.problem.n <= kMaxDimension)
    cfg.problem.omega_diag.assign(cfg.problem.n, 1.0);
  if (cfg.problem.chi_diag.empty() && cfg.problem.n >= 1 && cfg.problem.n <= kMaxDimension)
    cfg.problem.chi_diag.assign(cfg.problem.n, 0.0);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  const auto& p = problem;
  if (p.n < 2) bad("problem.n", "n must be at least 2");
  if (p.n > kMaxDimension) bad("problem.n", "n must be at most " + std::to_string(kMaxDimension));
  if (p.m < 1 || p.m > p.n) bad("problem.m", "m must lie in [1, n]");
  if (p.N < 4 || p.N % 2) bad("problem.N", "N must be even and at least 4");
  if (std::pow(static_cast<double>(p.N), 2 * p.n) > static_cast<double>(kDefaultPointBudget))
    bad("problem.N", "N^(2n) exceeds the point budget");
  if (!(p.L > 0.0)) bad("problem.L", "period must be positive");
  if (static_cast<int>(p.omega_diag.size()) != p.n) bad("problem.omega_diag", "need n entries");
  for (double w : p.omega_diag)
    if (!(w > 0.0)) bad("problem.omega_diag", "entries must be positive");
  if (static_cast<int>(p.chi_diag.size()) != p.n) bad("problem.chi_diag", "need n entries");
  if (!(p.kappa >= 0.0)) bad("problem.kappa", "must be nonnegative");
  if (p.potential_modes < 0) bad("problem.potential_modes", "must be nonnegative");
  if (p.potential_wavenumber < 1) bad("problem.potential_wavenumber", "must be positive");
  if (!(p.potential_scale >= 0.0)) bad("problem.potential_scale", "must be nonnegative");
  if (!(p.f_width > 0.0)) bad("problem.f_width", "must be positive");
  if (!p.f_center.empty() && static_cast<int>(p.f_center.size()) != 2 * p.n) bad("problem.f_center", "need 2n entries");
  if (p.f_modes < 1) bad("problem.f_modes", "must be positive");
  if (p.f_wavenumber < 1) bad("problem.f_wavenumber", "must be positive");
  if (!(p.f_exponent > 0.0)) bad("problem.f_exponent", "must be positive");
  if (!(p.f_cap > 1.0)) bad("problem.f_cap", "must exceed 1");
  if (p.f == RhsKind::File && p.f_path.empty()) bad("problem.f_path", "required when f = file");
  if (p.phi_star_modes < 1) bad("problem.phi_star_modes", "must be positive");
  if (p.phi_star_wavenumber < 1) bad("problem.phi_star_wavenumber", "must be positive");
  if (!(p.phi_star_margin > 0.0)) bad("problem.phi_star_margin", "must be positive");
  if (!(p.t > 0.0 && p.t <= 1.0)) bad("problem.t", "must lie in (0, 1]");
  if (!(p.q > 1.0)) bad("problem.q", "must exceed 1");
  if (!(p.q_prime > 0.0)) bad("problem.q_prime", "must be positive");
  if (!(p.p > 1.0)) bad("problem.p", "must exceed 1");

  const auto& s = solver;
  if (!(s.newton_tol > 0.0)) bad("solver.newton_tol", "must be positive");
  if (s.max_newton < 1) bad("solver.max_newton", "must be positive");
  if (!(s.cone_margin > 0.0)) bad("solver.cone_margin", "must be positive");
  if (!(s.damping > 0.0 && s.damping <= 1.0)) bad("solver.damping", "must lie in (0, 1]");
  if (!(s.damping_floor > 0.0 && s.damping_floor <= s.damping)) bad("solver.damping_floor", "must lie in (0, damping]");
  if (s.krylov_restart < 1) bad("solver.krylov_restart", "must be positive");
  if (s.krylov_max_iterations < 1) bad("solver.krylov_max_iterations", "must be positive");
  if (schedule.stages < 1) bad("solver.stages", "must be positive");
  if (!(schedule.t_max > 0.0 && schedule.t_max <= 1.0)) bad("solver.t_max", "must lie in (0, 1]");
  if (!(schedule.ratio > 0.0 && schedule.ratio < 1.0)) bad("solver.ratio", "must lie in (0, 1)");

  const auto& e = experiment;
  for (double x : e.scales)
    if (!(x > 0.0)) bad("experiment.scales", "entries must be positive");
  if (!(e.perturbation_width > 0.0)) bad("experiment.perturbation_width", "must be positive");
  if (!e.perturbation_center.empty() && static_cast<int>(e.perturbation_center.size()) != 2 * p.n)
    bad("experiment.perturbation_center", "need 2n entries");
  if (!(e.epsilon > 0.0)) bad("experiment.epsilon", "must be positive");
  for (int r : e.refine) {
    if (r < 4 || r % 2) bad("experiment.refine", "entries must be even and at least 4");
    if (std::pow(static_cast<double>(r), 2 * p.n) > static_cast<double>(kDefaultPointBudget))
      bad("experiment.refine", "grid exceeds the point budget");
  }
  if (!(e.cap_constant >= 0.0)) bad("experiment.cap_constant", "must be nonnegative");
  if (!(e.noise_amplitude >= 0.0)) bad("experiment.noise_amplitude", "must be nonnegative");
  if (e.lemma_families < 0) bad("experiment.lemma_families", "must be nonnegative");
  if (run.threads < 0) bad("run.threads", "must be nonnegative");
  if (run.output_dir.empty()) bad("run.output_dir", "must not be empty");
}

}  // namespace hessianlab
