#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bdie/io.hpp"

namespace bdie {

// Each command writes its reports into output_directory(cfg), prints a short
// summary to `log` and returns the process exit code: 0 success (gates met),
// 1 gate failure, 2 configuration error, 3 resource cap. Wall-clock times go
// to timings_<command>.csv so that every other file is reproducible byte for
// byte.

/// surface.off, volume.json, mesh_report.json.
int cmd_mesh(const RunConfig& cfg, std::ostream& log);
/// coefficient_report.json; gate: every condition passes.
int cmd_check_coeff(const RunConfig& cfg, std::ostream& log);
/// operators.json, operators.csv: relation-vs-kernel, divergence-form and
/// reduction checks.
int cmd_operators(const RunConfig& cfg, std::ostream& log);
/// green_check.json, green_check.csv: second, third and trace identities for
/// the configured case.
int cmd_green_check(const RunConfig& cfg, std::ostream& log);
/// m12_solution.json, probes.csv.
int cmd_solve(const RunConfig& cfg, std::ostream& log);
/// convergence.csv, convergence.json over cfg.levels.
int cmd_converge(const RunConfig& cfg, std::ostream& log);

const std::vector<std::string>& command_names();

/// Validates the config, runs the named command and maps errors to exit codes.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log);

/// Gate thresholds of green-check and solve.
struct Gates {
  double second = 0.03;
  double third_constant = 0.03;  // a constant coefficient
  double third = 0.05;
  double trace = 0.05;
  double probe = 0.05;
  double trace_recovery = 0.05;
  double conormal_recovery = 0.10;
};
inline constexpr Gates kGates{};

}  // namespace bdie
