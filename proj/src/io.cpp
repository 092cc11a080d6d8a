#include "bdie/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "bdie/error.hpp"

namespace bdie {

using nlohmann::json;

CoefficientField RunConfig::field() const { return CoefficientField::from_catalog(coefficient, coefficient_params); }

M12Options RunConfig::m12_options() const {
  M12Options o;
  o.quad = quad;
  o.jump = jump;
  o.exec = exec();
  return o;
}

IdentityOptions RunConfig::identity_options() const {
  IdentityOptions o;
  o.quad = quad;
  o.jump = jump;
  o.tail_tol = tail_tol;
  o.exec = exec();
  return o;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Config, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(ErrorKind::Config, "unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* jump_name(JumpMode m) { return m == JumpMode::Half ? "half" : "solid-angle"; }

std::vector<int> cell_rule_array(const CellRuleSpec& s) { return {s.tri_order, s.n_t, s.subdivide}; }

CellRuleSpec cell_rule_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) fail(ErrorKind::Config, "cell rules are [tri_order, n_t, subdivide]");
  return {v[0], v[1], v[2]};
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j,
               {"schema_version", "coefficient", "case", "level", "levels", "mesh", "quadrature", "jump", "probes",
                "audit", "tail_tol", "iterative_check", "output_dir", "workers"},
               "config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
      fail(ErrorKind::Config, "unsupported schema_version " + j.at("schema_version").dump());
    }
    if (j.contains("coefficient")) {
      const json& k = j.at("coefficient");
      check_keys(k, {"name", "params"}, "coefficient");
      read(k, "name", c.coefficient);
      if (k.contains("params")) c.coefficient_params = k.at("params").get<std::map<std::string, double>>();
      else if (c.coefficient != "gaussian") c.coefficient_params.clear();
    }
    read(j, "case", c.case_name);
    read(j, "level", c.level);
    read(j, "levels", c.levels);
    if (j.contains("mesh")) {
      const json& m = j.at("mesh");
      check_keys(m, {"outer_radius", "grading", "n_radial", "angular_level", "partition", "cell_rule"}, "mesh");
      read(m, "outer_radius", c.mesh.outer_radius);
      read(m, "grading", c.mesh.grading);
      read(m, "n_radial", c.mesh.n_radial);
      read(m, "angular_level", c.mesh.angular_level);
      read(m, "partition", c.mesh.partition);
      if (m.contains("cell_rule")) c.mesh.rule = cell_rule_from(m.at("cell_rule"));
    }
    if (j.contains("quadrature")) {
      const json& q = j.at("quadrature");
      check_keys(q, {"layer", "volume"}, "quadrature");
      if (q.contains("layer")) {
        const json& l = q.at("layer");
        check_keys(l,
                   {"near_ratio", "far_order", "near_order", "near_levels", "adapt_ratio", "max_extra_depth",
                    "duffy_order"},
                   "quadrature.layer");
        LayerOptions& o = c.quad.layer;
        read(l, "near_ratio", o.near_ratio);
        read(l, "far_order", o.far_order);
        read(l, "near_order", o.near_order);
        read(l, "near_levels", o.near_levels);
        read(l, "adapt_ratio", o.adapt_ratio);
        read(l, "max_extra_depth", o.max_extra_depth);
        read(l, "duffy_order", o.duffy_order);
      }
      if (q.contains("volume")) {
        const json& v = q.at("volume");
        check_keys(v, {"far_ratio", "mid_ratio", "refined", "cone"}, "quadrature.volume");
        VolumeRuleOptions& o = c.quad.volume;
        read(v, "far_ratio", o.far_ratio);
        read(v, "mid_ratio", o.mid_ratio);
        if (v.contains("refined")) o.refined = cell_rule_from(v.at("refined"));
        if (v.contains("cone")) {
          const json& k = v.at("cone");
          check_keys(k, {"face_order", "n_s", "split_ratio", "max_depth"}, "quadrature.volume.cone");
          read(k, "face_order", o.cone.face_order);
          read(k, "n_s", o.cone.n_s);
          read(k, "split_ratio", o.cone.split_ratio);
          read(k, "max_depth", o.cone.max_depth);
        }
      }
    }
    if (j.contains("jump")) {
      const std::string s = j.at("jump").get<std::string>();
      if (s == "half") c.jump = JumpMode::Half;
      else if (s == "solid-angle") c.jump = JumpMode::SolidAngle;
      else fail(ErrorKind::Config, "unknown jump mode '" + s + "' (expected solid-angle or half)");
    }
    if (j.contains("probes")) {
      c.probes.clear();
      for (const auto& p : j.at("probes").get<std::vector<std::array<double, 3>>>()) c.probes.push_back({p[0], p[1], p[2]});
    }
    if (j.contains("audit")) {
      const json& a = j.at("audit");
      check_keys(a, {"radii", "angular_samples"}, "audit");
      read(a, "radii", c.audit_radii);
      read(a, "angular_samples", c.audit_samples);
    }
    read(j, "tail_tol", c.tail_tol);
    read(j, "iterative_check", c.iterative_check);
    read(j, "output_dir", c.output_dir);
    read(j, "workers", c.workers);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
  json probes = json::array();
  for (const Vec3& p : c.probes) probes.push_back({p[0], p[1], p[2]});
  const LayerOptions& l = c.quad.layer;
  const VolumeRuleOptions& v = c.quad.volume;
  return {
      {"schema_version", kSchemaVersion},
      {"coefficient", {{"name", c.coefficient}, {"params", c.coefficient_params}}},
      {"case", c.case_name},
      {"level", c.level},
      {"levels", c.levels},
      {"mesh",
       {{"outer_radius", c.mesh.outer_radius},
        {"grading", c.mesh.grading},
        {"n_radial", c.mesh.n_radial},
        {"angular_level", c.mesh.angular_level},
        {"partition", c.mesh.partition},
        {"cell_rule", cell_rule_array(c.mesh.rule)}}},
      {"quadrature",
       {{"layer",
         {{"near_ratio", l.near_ratio},
          {"far_order", l.far_order},
          {"near_order", l.near_order},
          {"near_levels", l.near_levels},
          {"adapt_ratio", l.adapt_ratio},
          {"max_extra_depth", l.max_extra_depth},
          {"duffy_order", l.duffy_order}}},
        {"volume",
         {{"far_ratio", v.far_ratio},
          {"mid_ratio", v.mid_ratio},
          {"refined", cell_rule_array(v.refined)},
          {"cone",
           {{"face_order", v.cone.face_order},
            {"n_s", v.cone.n_s},
            {"split_ratio", v.cone.split_ratio},
            {"max_depth", v.cone.max_depth}}}}}}},
      {"jump", jump_name(c.jump)},
      {"probes", probes},
      {"audit", {{"radii", c.audit_radii}, {"angular_samples", c.audit_samples}}},
      {"tail_tol", c.tail_tol},
      {"iterative_check", c.iterative_check},
  };
}

void validate(const RunConfig& c) {
  c.field();  // throws on unknown names or bad parameters
  make_case(c.case_name, CoefficientField::constant(1.0));
  PartitionRule::parse(c.mesh.partition);
  if (c.level < 1 || c.level > 6) fail(ErrorKind::Config, "level must be in 1..6");
  if (c.levels.empty()) fail(ErrorKind::Config, "levels must be nonempty");
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i] < 1 || c.levels[i] > 6) fail(ErrorKind::Config, "levels must be in 1..6");
    if (i > 0 && c.levels[i] <= c.levels[i - 1]) fail(ErrorKind::Config, "levels must be strictly increasing");
  }
  if (!(c.mesh.outer_radius > 1.0)) fail(ErrorKind::Config, "outer_radius must exceed 1");
  for (const Vec3& p : c.probes) {
    const double r = norm(p);
    if (!(r > 1.0 && r < c.mesh.outer_radius)) {
      fail(ErrorKind::Config, "probe at radius " + format_double(r) + " is outside the truncated domain");
    }
  }
  if (c.audit_samples < 1) fail(ErrorKind::Config, "audit.angular_samples must be positive");
  if (c.workers < 0) fail(ErrorKind::Config, "workers must be nonnegative");
}

std::filesystem::path output_directory(const RunConfig& c) {
  const char* env = std::getenv("BDIE_OUT");
  const std::filesystem::path dir = env && *env ? std::filesystem::path(env) : std::filesystem::path(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const CoefficientReport& r) {
  json tail = json::array();
  for (const TailSample& s : r.tail_samples) tail.push_back({s.radius, s.omega_grad_a});
  return {{"passes_cond0", r.passes_cond0},
          {"passes_cond1", r.passes_cond1},
          {"passes_cond3", r.passes_cond3},
          {"passes_decay", r.passes_decay},
          {"min_a", r.min_a},
          {"max_a", r.max_a},
          {"sup_omega_grad_a", r.sup_omega_grad_a},
          {"sup_omega2_lap_a", r.sup_omega2_lap_a},
          {"tail_samples", tail},
          {"tolerances",
           {{"growth_factor", r.tolerances.growth_factor},
            {"zero_floor", r.tolerances.zero_floor},
            {"decay_tol", r.tolerances.decay_tol}}}};
}

json to_json(const ResidualReport& r) {
  json pts = json::array();
  for (const Vec3& p : r.points) pts.push_back({p[0], p[1], p[2]});
  return {{"name", r.name},         {"level", r.level},        {"points", pts},
          {"residuals", r.residuals}, {"max_abs", r.max_abs},    {"scale", r.scale},
          {"rel_to_scale", r.rel_to_scale}, {"excluded", r.excluded}};
}

json to_json(const EquivalenceReport& r) {
  json pts = json::array();
  for (const Vec3& p : r.probes) pts.push_back({p[0], p[1], p[2]});
  return {{"trace_max", r.trace_max},
          {"trace_scale", r.trace_scale},
          {"trace_rel", r.trace_rel},
          {"conormal_max", r.conormal_max},
          {"conormal_scale", r.conormal_scale},
          {"conormal_rel", r.conormal_rel},
          {"phi_on_dirichlet", r.phi_on_dirichlet},
          {"psi_on_neumann", r.psi_on_neumann},
          {"interior_weighted", r.interior_weighted},
          {"probes", pts},
          {"probe_values", r.probe_values},
          {"probe_exact", r.probe_exact},
          {"probe_rel", r.probe_rel}};
}

namespace {
const char* kConvergenceHeader = "level,h_surface,n_cells,n_unknowns,probe_rel,trace_rel,conormal_rel,weighted_rel,condition";
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << kConvergenceHeader << "\n";
  for (const ConvergenceRow& r : rows) {
    out << r.level << ',' << format_double(r.h_surface) << ',' << r.n_cells << ',' << r.n_unknowns << ','
        << format_double(r.probe_rel) << ',' << format_double(r.trace_rel) << ',' << format_double(r.conormal_rel)
        << ',' << format_double(r.weighted_rel) << ',' << format_double(r.condition) << "\n";
  }
}

std::vector<ConvergenceRow> read_convergence_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kConvergenceHeader) fail(ErrorKind::Io, "unexpected convergence table header");
  std::vector<ConvergenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) fail(ErrorKind::Io, "convergence row has " + std::to_string(f.size()) + " fields");
    ConvergenceRow r;
    try {
      r.level = std::stoi(f[0]);
      r.h_surface = std::stod(f[1]);
      r.n_cells = std::stoul(f[2]);
      r.n_unknowns = std::stoul(f[3]);
      r.probe_rel = std::stod(f[4]);
      r.trace_rel = std::stod(f[5]);
      r.conormal_rel = std::stod(f[6]);
      r.weighted_rel = std::stod(f[7]);
      r.condition = std::stod(f[8]);
    } catch (const std::exception&) {
      fail(ErrorKind::Io, "malformed convergence row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace bdie
