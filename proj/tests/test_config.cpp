#include <doctest.h>

#include "hessianlab/config.hpp"
#include "hessianlab/errors.hpp"

#include <string>

using namespace hessianlab;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults fill in from an empty file") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.problem.n == 2);
  CHECK(c.problem.m == 2);
  CHECK(c.problem.omega_diag == std::vector<double>{1.0, 1.0});
  CHECK(c.problem.chi_diag == std::vector<double>{0.0, 0.0});
  CHECK(c.problem.normalize);
  CHECK(c.schedule.stages == 12);
  CHECK(c.experiment.scales == std::vector<double>{0.05, 0.1, 0.2, 0.4});
  CHECK(c.run.output_dir == "out");
}

TEST_CASE("sections, comments, lists and enums") {
  const ExperimentConfig c = parse_config(R"(
# leading comment
[problem]
n = 3          ; trailing comment
m = 2
N = 8
omega_diag = [1, 2, 3]
f = manufactured
t = 0.5

[solver]
newton_tol = 1e-10
stages = 4

[experiment]
scales = 0.1, 0.2
refine = [8, 10]

[run]
seed = 7
output_dir = /tmp/somewhere
)");
  CHECK(c.problem.n == 3);
  CHECK(c.problem.omega_diag == std::vector<double>{1, 2, 3});
  CHECK(c.problem.chi_diag.size() == 3);
  CHECK(c.problem.f == RhsKind::Manufactured);
  CHECK(c.solver.m == 2);
  CHECK(c.solver.t == 0.5);
  CHECK(c.solver.newton_tol == 1e-10);
  CHECK(c.schedule.stages == 4);
  CHECK(c.experiment.scales == std::vector<double>{0.1, 0.2});
  CHECK(c.experiment.refine == std::vector<int>{8, 10});
  CHECK(c.run.seed == 7);
  CHECK(c.run.output_dir == "/tmp/somewhere");
  CHECK(std::string(rhs_kind_name(c.problem.f)) == "manufactured");
}

TEST_CASE("errors name the offending key") {
  CHECK(error_of("[problem]\nn = 1\n").find("problem.n") != std::string::npos);
  CHECK(error_of("[problem]\nbogus = 3\n").find("problem.bogus") != std::string::npos);
  CHECK(error_of("[solver]\nnewton_tol = 1\nnewton_tol = 2\n").find("solver.newton_tol") != std::string::npos);
  CHECK(error_of("[problem]\nN = \n").find("problem.N") != std::string::npos);
  CHECK(error_of("[problem]\nN = 7\n").find("problem.N") != std::string::npos);
  CHECK(error_of("[problem]\nm = 3\n").find("problem.m") != std::string::npos);
  CHECK(error_of("[problem]\nL = abc\n").find("problem.L") != std::string::npos);
  CHECK(error_of("[problem]\nf = nonsense\n").find("problem.f") != std::string::npos);
  CHECK(error_of("[problem]\nomega_diag = 1, -1\n").find("problem.omega_diag") != std::string::npos);
  CHECK(error_of("[solver]\nratio = 1.5\n").find("solver.ratio") != std::string::npos);
  CHECK(error_of("[problem]\nf = file\n").find("problem.f_path") != std::string::npos);
  CHECK_FALSE(error_of("[nowhere]\n").empty());
  CHECK_FALSE(error_of("n = 2\n").empty());
  CHECK_FALSE(error_of("[problem]\nn 2\n").empty());
}

TEST_CASE("load_config reports missing files") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/cfg.ini"), ConfigError);
}
