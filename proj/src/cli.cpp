#include "bdie/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <new>
#include <ostream>
#include <sstream>

#include "bdie/error.hpp"
#include "bdie/reference.hpp"

namespace bdie {

using nlohmann::json;

namespace {

class Timings {
 public:
  explicit Timings(std::string command) : command_(std::move(command)) {}
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    rows_ += command_ + "," + stage + "," + format_double(std::chrono::duration<double>(now - last_).count()) + "\n";
    last_ = now;
  }
  void write(const std::filesystem::path& dir) const {
    write_text(dir / ("timings_" + command_ + ".csv"), "command,stage,seconds\n" + rows_);
  }

 private:
  std::string command_;
  std::string rows_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json header(const std::string& command, const RunConfig& cfg) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", config_to_json(cfg)}};
}

json points_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const Vec3& p : pts) a.push_back({p[0], p[1], p[2]});
  return a;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return s > 0.0 ? d / s : d;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct Check {
  std::string name;
  double value;
  double tolerance;
  bool pass() const { return value <= tolerance; }
};

json checks_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const Check& c : checks) {
    a.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass()}});
  }
  return a;
}

std::string checks_csv(const std::vector<Check>& checks) {
  std::string s = "check,value,tolerance,pass\n";
  for (const Check& c : checks) {
    s += c.name + "," + format_double(c.value) + "," + format_double(c.tolerance) + "," + (c.pass() ? "1" : "0") + "\n";
  }
  return s;
}

int report_checks(const std::vector<Check>& checks, std::ostream& log) {
  int code = 0;
  for (const Check& c : checks) {
    log << (c.pass() ? "PASS " : "FAIL ") << c.name << " " << format_double(c.value) << " (tolerance "
        << format_double(c.tolerance) << ")\n";
    if (!c.pass()) code = 1;
  }
  return code;
}

json density_json(const BoundaryDensity& d) {
  return {{"space", d.space == Space::TriangleConstant ? "triangle-constant" : "vertex-linear"}, {"coeffs", d.coeffs}};
}

}  // namespace

int cmd_mesh(const RunConfig& cfg, std::ostream& log) {
  Timings timer("mesh");
  const auto dir = output_directory(cfg);
  const MeshPair m = build_mesh_pair(cfg.level, cfg.mesh);
  timer.mark("build");
  const SurfaceMesh& s = m.surface;
  const VolumeMesh& v = m.volume;
  {
    std::ofstream out(dir / "surface.off", std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write surface.off");
    write_off(out, s);
  }
  const double area = s.total_area();
  const double area_rel = std::abs(area - 4.0 * M_PI) / (4.0 * M_PI);
  const double sphere_shell = 4.0 * M_PI / 3.0 * (std::pow(v.outer_radius, 3) - std::pow(v.inner_radius, 3));
  const double vol = v.total_volume(), poly = v.polyhedral_shell_volume();
  write_json(dir / "volume.json", {{"schema_version", kSchemaVersion},
                                   {"cells", v.num_cells()},
                                   {"sectors", v.sectors.size()},
                                   {"n_radial", v.n_radial},
                                   {"angular_level", v.angular_level},
                                   {"surface_level", v.surface_level},
                                   {"inner_radius", v.inner_radius},
                                   {"outer_radius", v.outer_radius},
                                   {"grading", v.grading},
                                   {"radii", v.radii}});
  json rep = header("mesh", cfg);
  rep["surface"] = {{"level", s.level},
                    {"vertices", s.num_vertices()},
                    {"triangles", s.num_triangles()},
                    {"max_edge", s.max_edge()},
                    {"area", area},
                    {"area_rel_error_vs_4pi", area_rel},
                    {"area_D", s.part_area(Part::D)},
                    {"area_N", s.part_area(Part::N)},
                    {"orientation_check", orientation_check(s, {0, 0, 0})}};
  rep["volume"] = {{"cells", v.num_cells()},
                   {"total_volume", vol},
                   {"polyhedral_shell_volume", poly},
                   {"rel_error_vs_polyhedral_shell", std::abs(vol - poly) / poly},
                   {"spherical_shell_volume", sphere_shell},
                   {"rel_error_vs_spherical_shell", std::abs(vol - sphere_shell) / sphere_shell}};
  write_json(dir / "mesh_report.json", rep);
  timer.mark("write");
  timer.write(dir);
  log << "triangles " << s.num_triangles() << ", vertices " << s.num_vertices() << ", cells " << v.num_cells() << "\n"
      << "area " << format_double(area) << " (relative error vs 4 pi " << format_double(area_rel) << ")\n"
      << "volume " << format_double(vol) << " (relative error vs polyhedral shell "
      << format_double(std::abs(vol - poly) / poly) << ")\n";
  return 0;
}

int cmd_check_coeff(const RunConfig& cfg, std::ostream& log) {
  Timings timer("check-coeff");
  const auto dir = output_directory(cfg);
  const CoefficientReport r = validate_conditions(cfg.field(), cfg.audit_radii, cfg.audit_samples);
  timer.mark("audit");
  json rep = header("check-coeff", cfg);
  rep["report"] = to_json(r);
  write_json(dir / "coefficient_report.json", rep);
  timer.write(dir);
  const bool ok = r.passes_cond0 && r.passes_cond1 && r.passes_cond3 && r.passes_decay;
  log << cfg.coefficient << ": cond1 " << (r.passes_cond0 ? "pass" : "FAIL") << ", cond2 "
      << (r.passes_cond1 ? "pass" : "FAIL") << ", cond3 " << (r.passes_cond3 ? "pass" : "FAIL") << ", decay "
      << (r.passes_decay ? "pass" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_operators(const RunConfig& cfg, std::ostream& log) {
  Timings timer("operators");
  const auto dir = output_directory(cfg);
  const MeshPair m = build_mesh_pair(cfg.level, cfg.mesh);
  const SurfaceMesh& s = m.surface;
  const VolumeMesh& v = m.volume;
  const CoefficientField field = cfg.field();
  const CoefficientField one = CoefficientField::constant(1.0), two = CoefficientField::constant(2.0);
  const Exec exec = cfg.exec();

  std::vector<Vec3> targets = cfg.probes;
  for (std::size_t t = 0; t < s.num_triangles(); t += std::max<std::size_t>(1, s.num_triangles() / 8)) {
    targets.push_back(s.centroids[t]);
  }
  const auto rho = as_function(s, BoundaryDensity::constant(s, Space::TriangleConstant, 1.0));
  auto bump = [](const Vec3& x) { return std::exp(-norm2(x)) * (1.0 + x[0]); };
  const DomainDensity f = DomainDensity::from_function(v, bump);
  const DomainDensity u1 = DomainDensity::constant(v, 1.0);
  std::vector<Check> checks;

  {
    const SurfaceQuadrature sq(s, cfg.quad.layer, &field);
    const VolumeQuadrature vq(v, cfg.quad.volume, &field);
    checks.push_back({"V_relation_vs_kernel", rel_diff(op_V(sq, rho, targets, exec), reference::op_V_kernel(sq, field, rho, targets)), 1e-10});
    checks.push_back({"P_relation_vs_kernel", rel_diff(op_P(vq, f, targets, exec), reference::op_P_kernel(vq, field, f, targets)), 1e-10});
    checks.push_back({"R_relation_vs_kernel", rel_diff(op_R(vq, f, targets, exec), reference::op_R_kernel(vq, field, f, targets)), 1e-10});
    const std::vector<Vec3> interior{{0, 0, 1.8}, {1.2, 1.2, 0.5}, {-0.4, 2.2, -0.9}};
    const VolumeQuadrature lap(v, cfg.quad.volume);
    checks.push_back({"R_divergence_form", rel_diff(reference::op_R_dual(lap, field, [](const Vec3&) { return 1.0; }, interior),
                                                    op_R(vq, u1, interior, exec)),
                      1e-3});
    const ParametrixKernelSet ks(s, v, field, cfg.quad);
    checks.push_back({"coefficient_cache_deviation", ks.cache_deviation(), 1e-14});
  }
  timer.mark("relations");
  {
    const SurfaceQuadrature s1(s, cfg.quad.layer, &one), s0(s, cfg.quad.layer);
    const VolumeQuadrature v1(v, cfg.quad.volume, &one), v0(v, cfg.quad.volume);
    const auto lin = as_function(s, BoundaryDensity::constant(s, Space::VertexLinear, 1.0));
    checks.push_back({"reduction_V_a1", max_abs_diff(op_V(s1, rho, targets, exec), single_layer_V_delta(s0, rho, targets, exec)), 1e-12});
    checks.push_back({"reduction_W_a1", max_abs_diff(op_W(s1, lin, targets, exec), double_layer_W_delta(s0, lin, targets, exec)), 1e-12});
    checks.push_back({"reduction_P_a1", max_abs_diff(op_P(v1, f, targets, exec), newton_potential_delta(v0, f, targets, exec)), 1e-12});
    checks.push_back({"reduction_R_a1", max_abs_diff(op_R(v1, f, targets, exec), std::vector<double>(targets.size(), 0.0)), 1e-12});
    double kr = 0.0;
    for (const Vec3& x : cfg.probes) {
      for (const Vec3& y : targets) {
        if (norm(x - y) > 0.0) kr = std::max(kr, std::abs(kernel_R(one, x, y)));
      }
    }
    checks.push_back({"kernel_R_a1", kr, 0.0});
    const SurfaceQuadrature s2(s, cfg.quad.layer, &two);
    std::vector<Vec3> colloc(s.centroids.begin(), s.centroids.end());
    std::vector<double> half = dv_V(s1, rho, colloc, exec);
    for (double& x : half) x *= 0.5;
    checks.push_back({"dv_V_halving_a2", rel_diff(dv_V(s2, rho, colloc, exec), half), 1e-12});
  }
  timer.mark("reduction");

  json rep = header("operators", cfg);
  rep["level"] = cfg.level;
  rep["targets"] = points_json(targets);
  rep["checks"] = checks_json(checks);
  write_json(dir / "operators.json", rep);
  write_text(dir / "operators.csv", checks_csv(checks));
  timer.write(dir);
  return report_checks(checks, log);
}

int cmd_green_check(const RunConfig& cfg, std::ostream& log) {
  Timings timer("green-check");
  const auto dir = output_directory(cfg);
  const MeshPair m = build_mesh_pair(cfg.level, cfg.mesh);
  const CoefficientField field = cfg.field();
  const ProblemCase pc = make_case(cfg.case_name, field);
  const AnalyticField& u = *pc.exact;
  const IdentityOptions io = cfg.identity_options();

  const ResidualReport second = second_green_residual(field, u, AnalyticField::point_source({0, 0, 0.5}), m, io);
  timer.mark("second");
  const ResidualReport third = third_green_residual(field, u, m, default_test_points(m), io);
  timer.mark("third");
  const ResidualReport trace = trace_identity_residual(field, u, m, io);
  timer.mark("trace");

  const double third_gate = field.is_constant() ? kGates.third_constant : kGates.third;
  const std::vector<Check> checks{{"second_green", second.rel_to_scale, kGates.second},
                                  {"third_green", third.rel_to_scale, third_gate},
                                  {"trace_identity", trace.rel_to_scale, kGates.trace}};
  json rep = header("green-check", cfg);
  rep["reports"] = {to_json(second), to_json(third), to_json(trace)};
  rep["checks"] = checks_json(checks);
  write_json(dir / "green_check.json", rep);
  std::string csv = "check,level,max_abs,scale,rel_to_scale,gate,pass\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const ResidualReport& r = i == 0 ? second : i == 1 ? third : trace;
    csv += checks[i].name + "," + std::to_string(r.level) + "," + format_double(r.max_abs) + "," +
           format_double(r.scale) + "," + format_double(r.rel_to_scale) + "," + format_double(checks[i].tolerance) +
           "," + (checks[i].pass() ? "1" : "0") + "\n";
  }
  write_text(dir / "green_check.csv", csv);
  timer.write(dir);
  return report_checks(checks, log);
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  Timings timer("solve");
  const auto dir = output_directory(cfg);
  const MeshPair m = build_mesh_pair(cfg.level, cfg.mesh);
  const CoefficientField field = cfg.field();
  const ProblemCase pc = make_case(cfg.case_name, field);
  SolveOptions so;
  so.iterative_check = cfg.iterative_check;
  const M12Run run = run_M12(m, field, pc, cfg.probes, cfg.m12_options(), so);
  timer.mark("assemble_and_solve");
  const M12Solution& sol = run.solution;

  json rep = header("solve", cfg);
  rep["level"] = cfg.level;
  rep["unknowns"] = {{"cells", sol.u.values.size()},
                     {"psi", static_cast<std::size_t>(std::count(m.surface.part_label.begin(), m.surface.part_label.end(), Part::D))},
                     {"phi", static_cast<std::size_t>(std::count(m.surface.vertex_class.begin(), m.surface.vertex_class.end(), VertexClass::InteriorN))}};
  rep["u"] = sol.u.values;
  rep["psi"] = density_json(sol.psi);
  rep["phi"] = density_json(sol.phi);
  rep["recovered_trace"] = density_json(sol.recovered_trace);
  rep["recovered_conormal"] = density_json(sol.recovered_conormal);
  rep["condition"] = sol.condition;
  rep["residual_norm"] = sol.residual_norm;
  if (cfg.iterative_check) {
    rep["gmres"] = {{"iterations", sol.iterations}, {"difference", sol.iterative_difference}};
  }
  std::vector<Check> checks;
  std::string csv = "x,y,z,u,u_exact,abs_error\n";
  if (run.report) {
    const EquivalenceReport& r = *run.report;
    rep["equivalence"] = to_json(r);
    for (std::size_t i = 0; i < r.probes.size(); ++i) {
      const Vec3& p = r.probes[i];
      csv += format_double(p[0]) + "," + format_double(p[1]) + "," + format_double(p[2]) + "," +
             format_double(r.probe_values[i]) + "," + format_double(r.probe_exact[i]) + "," +
             format_double(std::abs(r.probe_values[i] - r.probe_exact[i])) + "\n";
    }
    checks = {{"probe_error", r.probe_rel, kGates.probe},
              {"trace_recovery", r.trace_rel, kGates.trace_recovery},
              {"conormal_recovery", r.conormal_rel, kGates.conormal_recovery}};
    rep["checks"] = checks_json(checks);
  }
  timer.mark("checks");
  write_json(dir / "m12_solution.json", rep);
  write_text(dir / "probes.csv", csv);
  timer.write(dir);
  log << "unknowns " << rep["unknowns"]["cells"].get<std::size_t>() + rep["unknowns"]["psi"].get<std::size_t>() + rep["unknowns"]["phi"].get<std::size_t>() << ", condition " << format_double(sol.condition)
      << ", residual " << format_double(sol.residual_norm) << "\n";
  return report_checks(checks, log);
}

int cmd_converge(const RunConfig& cfg, std::ostream& log) {
  Timings timer("converge");
  const auto dir = output_directory(cfg);
  const CoefficientField field = cfg.field();
  const ProblemCase pc = make_case(cfg.case_name, field);
  std::vector<ConvergenceRow> rows;
  for (int level : cfg.levels) {
    const auto t0 = std::chrono::steady_clock::now();
    const MeshPair m = build_mesh_pair(level, cfg.mesh);
    const M12Run run = run_M12(m, field, pc, cfg.probes, cfg.m12_options());
    ConvergenceRow r;
    r.level = level;
    r.h_surface = m.surface.max_edge();
    r.n_cells = m.volume.num_cells();
    r.n_unknowns = r.n_cells + static_cast<std::size_t>(std::count(m.surface.part_label.begin(), m.surface.part_label.end(), Part::D)) +
                   static_cast<std::size_t>(std::count(m.surface.vertex_class.begin(), m.surface.vertex_class.end(), VertexClass::InteriorN));
    r.probe_rel = run.report->probe_rel;
    r.trace_rel = run.report->trace_rel;
    r.conormal_rel = run.report->conormal_rel;
    r.weighted_rel = run.report->interior_weighted;
    r.condition = run.solution.condition;
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(r);
    timer.mark("level_" + std::to_string(level));
    log << "level " << level << ": probe " << format_double(r.probe_rel) << ", weighted "
        << format_double(r.weighted_rel) << ", trace " << format_double(r.trace_rel) << ", conormal "
        << format_double(r.conormal_rel) << "\n";
  }
  std::ostringstream csv;
  write_convergence_csv(csv, rows);
  write_text(dir / "convergence.csv", csv.str());
  json rep = header("converge", cfg);
  rep["table"] = csv.str();
  write_json(dir / "convergence.json", rep);
  timer.write(dir);

  std::vector<Check> checks;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    checks.push_back({"weighted_error_decreases_to_level_" + std::to_string(rows[i].level),
                      rows[i].weighted_rel / rows[i - 1].weighted_rel, 1.0 - 1e-12});
  }
  return report_checks(checks, log);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"mesh", "check-coeff", "operators", "green-check", "solve", "converge"};
  return names;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
  try {
    validate(cfg);
    if (name == "mesh") return cmd_mesh(cfg, log);
    if (name == "check-coeff") return cmd_check_coeff(cfg, log);
    if (name == "operators") return cmd_operators(cfg, log);
    if (name == "green-check") return cmd_green_check(cfg, log);
    if (name == "solve") return cmd_solve(cfg, log);
    if (name == "converge") return cmd_converge(cfg, log);
    fail(ErrorKind::Config, "unknown command '" + name + "'");
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    log << "error: out of memory\n";
    return 3;
  }
}

}  // namespace bdie
