#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "bdie/cli.hpp"
#include "bdie/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Boundary-domain integral equations for div(a grad u) = f outside the unit ball"};
  app.require_subcommand(1, 1);

  std::string config_path, coefficient, case_name, partition, out, levels;
  int level = 0, workers = -1;
  bool iterative = false;
  const std::map<std::string, std::string> about{
      {"mesh", "surface and shell meshes with area/volume checks"},
      {"check-coeff", "audit the coefficient conditions"},
      {"operators", "parametrix operators vs kernel quadrature and a = 1"},
      {"green-check", "Green identity residuals for the configured case"},
      {"solve", "assemble and solve the mixed problem"},
      {"converge", "solve over a list of levels"}};
  for (const std::string& name : bdie::command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("--level", level, "mesh level");
    sub->add_option("--levels", levels, "comma-separated levels for converge");
    sub->add_option("--coefficient", coefficient, "constant | gaussian | sine_x1");
    sub->add_option("--case", case_name, "point-source | constant | bump | zero");
    sub->add_option("--partition", partition, "Dirichlet part rule, e.g. z<0");
    sub->add_option("--workers", workers, "worker threads (0: all)");
    sub->add_option("-o,--out", out, "output directory (BDIE_OUT overrides)");
    sub->add_flag("--iterative-check", iterative, "also solve with GMRES and compare");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  bdie::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = bdie::load_config(config_path);
    if (level > 0) cfg.level = level;
    if (!levels.empty()) {
      cfg.levels.clear();
      std::stringstream ss(levels);
      for (std::string t; std::getline(ss, t, ',');) cfg.levels.push_back(std::stoi(t));
    }
    if (!coefficient.empty()) {
      cfg.coefficient = coefficient;
      if (coefficient != "gaussian") cfg.coefficient_params.clear();
    }
    if (!case_name.empty()) cfg.case_name = case_name;
    if (!partition.empty()) cfg.mesh.partition = partition;
    if (!out.empty()) cfg.output_dir = out;
    if (workers >= 0) cfg.workers = workers;
    if (iterative) cfg.iterative_check = true;
  } catch (const bdie::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bdie::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return bdie::run_command(command, cfg, std::cout);
}
