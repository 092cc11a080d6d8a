#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bdie/bdies_m12.hpp"
#include "json.hpp"

namespace bdie {

inline constexpr int kSchemaVersion = 1;

/// Everything a command needs. Every field has a default, and the full
/// effective config is echoed into each report, except `workers` and
/// `output_dir`: neither may change the bytes of any output.
struct RunConfig {
  std::string coefficient = "gaussian";
  std::map<std::string, double> coefficient_params{{"beta", 1.0}};
  std::string case_name = "point-source";
  int level = 2;
  std::vector<int> levels{1, 2, 3};
  MeshOptions mesh{};
  QuadratureOptions quad{};
  JumpMode jump = JumpMode::SolidAngle;
  std::vector<Vec3> probes = default_probes();
  std::vector<double> audit_radii{0, 0.5, 1, 2, 4, 8, 16, 32, 64};
  int audit_samples = 64;
  double tail_tol = 1e-3;
  bool iterative_check = false;
  std::string output_dir = "bdie_out";
  int workers = 0;

  CoefficientField field() const;
  M12Options m12_options() const;
  IdentityOptions identity_options() const;
  Exec exec() const { return Exec{workers}; }
};

/// Strict: unknown keys and wrong types are configuration errors.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);
/// Throws Config (or Partition) when names or levels are invalid.
void validate(const RunConfig& cfg);

/// BDIE_OUT when set, otherwise cfg.output_dir; created if missing.
std::filesystem::path output_directory(const RunConfig& cfg);

/// Shortest round-trip decimal form; the same bits always print the same.
std::string format_double(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json to_json(const CoefficientReport& r);
nlohmann::json to_json(const ResidualReport& r);
nlohmann::json to_json(const EquivalenceReport& r);

struct ConvergenceRow {
  int level = 0;
  double h_surface = 0.0;
  std::size_t n_cells = 0;
  std::size_t n_unknowns = 0;
  double probe_rel = 0.0;
  double trace_rel = 0.0;
  double conormal_rel = 0.0;
  double weighted_rel = 0.0;
  double condition = 0.0;
  double runtime_s = 0.0;  // written to the timings file, not the table
};

/// Fixed columns: level,h_surface,n_cells,n_unknowns,probe_rel,trace_rel,
/// conormal_rel,weighted_rel,condition.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
std::vector<ConvergenceRow> read_convergence_csv(std::istream& in);

}  // namespace bdie
