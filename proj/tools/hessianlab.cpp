// hessianlab: batch front end. Every command takes --config PATH; conecheck also
// accepts --tuple "(l1, ..., ln)" --m K or --field PATH.

#include "hessianlab/commands.hpp"
#include "hessianlab/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace hessianlab;
  CLI::App app{"Complex Hessian equations on flat tori"};
  app.require_subcommand(1);

  std::string config_path;
  for (const char* name : {"solve", "continuation", "stability", "verify"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
  }
  auto* cone = app.add_subcommand("conecheck", "cone membership and inequality gaps");
  std::string tuple, field;
  int m = 0;
  cone->add_option("--config", config_path, "config with experiment.field_path");
  cone->add_option("--tuple", tuple, "eigenvalue tuple, e.g. \"(1,1,1)\"");
  cone->add_option("--field", field, "HLF1 field of Hermitian forms or eigenvalues");
  cone->add_option("--m", m, "cone degree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (command != "conecheck") return run_command(command, config_path, std::cerr);

  if (!tuple.empty()) {
    if (m == 0) {
      std::cerr << "conecheck: --m is required with --tuple\n";
      return kExitConfig;
    }
    return cmd_conecheck(tuple, m, std::cout, std::cerr);
  }
  std::optional<ExperimentConfig> cfg;
  if (!config_path.empty()) {
    try {
      cfg = load_config(config_path);
    } catch (const ConfigError& e) {
      std::cerr << "conecheck: configuration error: " << e.what() << '\n';
      return kExitConfig;
    }
    if (field.empty()) field = cfg->experiment.field_path;
    if (m == 0) m = cfg->problem.m;
  }
  if (field.empty()) {
    std::cerr << "conecheck: need --tuple, --field or a config naming experiment.field_path\n";
    return kExitConfig;
  }
  if (m == 0) m = 2;
  return cmd_conecheck_field(field, cfg, m, std::cout, std::cerr);
}
