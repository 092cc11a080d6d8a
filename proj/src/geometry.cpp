#include "bdie/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

#include "bdie/error.hpp"
#include "bdie/quadrature.hpp"

namespace bdie {

double SurfaceMesh::total_area() const {
  double s = 0.0;
  for (double a : areas) s += a;
  return s;
}

double SurfaceMesh::part_area(Part p) const {
  double s = 0.0;
  for (std::size_t t = 0; t < areas.size(); ++t) {
    if (part_label[t] == p) s += areas[t];
  }
  return s;
}

double SurfaceMesh::diameter(std::size_t t) const {
  const Triangle c = corners(t);
  return std::max({norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
}

double SurfaceMesh::max_edge() const {
  double h = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) h = std::max(h, diameter(t));
  return h;
}

std::vector<std::vector<int>> SurfaceMesh::vertex_triangles() const {
  std::vector<std::vector<int>> vt(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t]) vt[v].push_back(static_cast<int>(t));
  }
  return vt;
}

SurfaceMesh make_surface_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles) {
  SurfaceMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  const int nv = static_cast<int>(m.vertices.size());
  for (const auto& tri : m.triangles) {
    for (int v : tri) {
      if (v < 0 || v >= nv) fail(ErrorKind::Geometry, "triangle references vertex " + std::to_string(v));
    }
    const Vec3 c = cross(m.vertices[tri[1]] - m.vertices[tri[0]], m.vertices[tri[2]] - m.vertices[tri[0]]);
    const double len = norm(c);
    if (!(len > 0.0)) fail(ErrorKind::Geometry, "degenerate triangle in surface mesh");
    m.normals.push_back(c / len);
    m.areas.push_back(0.5 * len);
    m.centroids.push_back((m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0);
  }
  m.part_label.assign(m.triangles.size(), Part::D);
  m.vertex_class.assign(m.vertices.size(), VertexClass::InteriorD);
  return m;
}

SurfaceMesh build_icosphere(int level) {
  if (level < 0) fail(ErrorKind::Config, "icosphere level must be nonnegative");
  if (level > 6) fail(ErrorKind::Resource, "icosphere level " + std::to_string(level) + " exceeds the cap of 6");

  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  // Rotate about x so that vertex 5 sits at the north pole. Central symmetry
  // then pairs every face with one of opposite centroid height, which makes
  // the default z < 0 split exactly balanced.
  const double th = std::atan2(1.0, g);
  for (auto& p : v) {
    const double y = p.y * std::cos(th) - p.z * std::sin(th);
    const double z = p.y * std::sin(th) + p.z * std::cos(th);
    p = normalized(Vec3{p.x, y, z});
  }
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  // Wind every face so that its normal points toward the origin.
  for (auto& t : f) {
    const Vec3 c = cross(v[t[1]] - v[t[0]], v[t[2]] - v[t[0]]);
    if (dot(c, v[t[0]] + v[t[1]] + v[t[2]]) > 0.0) std::swap(t[1], t[2]);
  }

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back(normalized(v[a] + v[b]));
      const int idx = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  SurfaceMesh m = make_surface_mesh(std::move(v), std::move(f));
  m.level = level;
  return partition_boundary(m, PartitionRule{});
}

SurfaceMesh flip_orientation(const SurfaceMesh& mesh) {
  SurfaceMesh m = mesh;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    std::swap(m.triangles[t][1], m.triangles[t][2]);
    m.normals[t] = -m.normals[t];
  }
  return m;
}

PartitionRule PartitionRule::parse(const std::string& text) {
  static const std::regex re(R"(^\s*([xyz])\s*(<=|>=|<|>)\s*([-+]?[0-9]*\.?[0-9]+([eE][-+]?[0-9]+)?)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) fail(ErrorKind::Config, "invalid partition rule '" + text + "'");
  PartitionRule r;
  r.axis = m[1].str()[0] - 'x';
  const std::string op = m[2].str();
  r.less = op[0] == '<';
  r.inclusive = op.size() == 2;
  r.threshold = std::stod(m[3].str());
  r.text = text;
  return r;
}

bool PartitionRule::dirichlet(const Vec3& c) const {
  const double v = c[axis];
  if (less) return inclusive ? v <= threshold : v < threshold;
  return inclusive ? v >= threshold : v > threshold;
}

SurfaceMesh partition_boundary(const SurfaceMesh& mesh, const PartitionRule& rule) {
  SurfaceMesh m = mesh;
  std::size_t nd = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    m.part_label[t] = rule.dirichlet(m.centroids[t]) ? Part::D : Part::N;
    nd += m.part_label[t] == Part::D;
  }
  if (nd == 0 || nd == m.triangles.size()) {
    fail(ErrorKind::Partition, "partition rule '" + rule.text + "' leaves the " + (nd == 0 ? "Dirichlet" : "Neumann") +
                                   " part empty");
  }
  std::vector<int> touches(m.vertices.size(), 0);  // bit 1: D, bit 2: N
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    for (int v : m.triangles[t]) touches[v] |= m.part_label[t] == Part::D ? 1 : 2;
  }
  for (std::size_t v = 0; v < touches.size(); ++v) {
    m.vertex_class[v] = touches[v] == 1 ? VertexClass::InteriorD
                        : touches[v] == 2 ? VertexClass::InteriorN
                                          : VertexClass::Interface;
  }
  return m;
}

double orientation_check(const SurfaceMesh& mesh, const Vec3& probe) {
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (point_triangle_distance(probe, mesh.corners(t)) < 1e-9 * mesh.diameter(t)) {
      fail(ErrorKind::Geometry, "orientation probe lies on the surface");
    }
    const Vec3 r = probe - mesh.centroids[t];
    const double d = norm(r);
    sum += mesh.areas[t] * dot(mesh.normals[t], r) / (d * d * d);
  }
  return sum / kFourPi;
}

void write_off(std::ostream& out, const SurfaceMesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  char buf[96];
  for (const auto& p : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

SurfaceMesh read_off(std::istream& in) {
  std::string header;
  if (!(in >> header) || header != "OFF") fail(ErrorKind::Io, "OFF input must start with 'OFF'");
  long nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne) || nv < 3 || nf < 1) fail(ErrorKind::Io, "malformed OFF counts");
  std::vector<Vec3> v(static_cast<std::size_t>(nv));
  for (auto& p : v) {
    if (!(in >> p.x >> p.y >> p.z)) fail(ErrorKind::Io, "truncated OFF vertex list");
  }
  std::vector<std::array<int, 3>> f(static_cast<std::size_t>(nf));
  for (auto& t : f) {
    int k = 0;
    if (!(in >> k >> t[0] >> t[1] >> t[2])) fail(ErrorKind::Io, "truncated OFF face list");
    if (k != 3) fail(ErrorKind::Io, "OFF faces must be triangles");
  }
  return make_surface_mesh(std::move(v), std::move(f));
}

// ---------------------------------------------------------------------------
// Volume mesh

namespace {

double plane_distance(const Triangle& t) {
  const Vec3 n = normalized(cross(t[1] - t[0], t[2] - t[0]));
  return std::abs(dot(n, t[0]));
}

double tri_area(const Triangle& t) { return 0.5 * norm(cross(t[1] - t[0], t[2] - t[0])); }

Triangle scaled(const Triangle& t, double s) { return {t[0] * s, t[1] * s, t[2] * s}; }

// Ray from the origin along `dir` hitting triangle t (Moller-Trumbore).
bool ray_hit(const Vec3& dir, const Triangle& t, Vec3& hit) {
  const Vec3 e1 = t[1] - t[0], e2 = t[2] - t[0];
  const Vec3 p = cross(dir, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-300) return false;
  const Vec3 s = -t[0];
  const double u = dot(s, p) / det;
  const Vec3 q = cross(s, e1);
  const double v = dot(dir, q) / det;
  const double tt = dot(e2, q) / det;
  const double eps = 1e-12;
  if (u < -eps || v < -eps || u + v > 1.0 + eps || tt <= 0.0) return false;
  hit = dir * tt;
  return true;
}

}  // namespace

double VolumeMesh::total_volume() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.volume;
  return s;
}

double VolumeMesh::polyhedral_shell_volume() const {
  double cone = 0.0;
  for (const auto& sec : sectors) {
    for (const auto& t : sec.patch) cone += plane_distance(t) * tri_area(t) / 3.0;
  }
  return cone * (std::pow(outer_radius, 3) - std::pow(inner_radius, 3));
}

std::vector<Facet> VolumeMesh::facets(std::size_t cell) const {
  const VolumeCell& c = cells[cell];
  const Sector& sec = sectors[c.sector];
  std::vector<Facet> out;
  out.reserve(2 * sec.patch.size() + 2 * sec.boundary_edges.size());
  for (const auto& t : sec.patch) {
    const Vec3 n = normalized(cross(t[1] - t[0], t[2] - t[0]));  // toward the origin
    out.push_back({scaled(t, c.t0), n});
    out.push_back({{t[0] * c.t1, t[2] * c.t1, t[1] * c.t1}, -n});
  }
  for (const auto& e : sec.boundary_edges) {
    Vec3 nu = normalized(cross(e[0], e[1]));
    if (dot(nu, sec.axis) > 0.0) nu = -nu;
    const Vec3 a0 = e[0] * c.t0, b0 = e[1] * c.t0, a1 = e[0] * c.t1, b1 = e[1] * c.t1;
    out.push_back({{a0, b0, b1}, nu});
    out.push_back({{a0, b1, a1}, nu});
  }
  return out;
}

double VolumeMesh::bounding_radius(std::size_t cell) const {
  const VolumeCell& c = cells[cell];
  double r = 0.0;
  for (const auto& t : sectors[c.sector].patch) {
    for (const auto& p : t) r = std::max({r, norm(p * c.t0 - c.center), norm(p * c.t1 - c.center)});
  }
  return r;
}

void cell_rule(const VolumeMesh& mesh, std::size_t cell, const CellRuleSpec& spec, std::vector<Vec3>& nodes,
               std::vector<double>& weights) {
  const VolumeCell& c = mesh.cells[cell];
  const QuadratureRule& tr = gauss_triangle(spec.tri_order);
  const Rule1D& gl = gauss_legendre(spec.n_t);
  const double dt = c.t1 - c.t0;
  std::vector<Triangle> pieces;
  for (const auto& t : mesh.sectors[c.sector].patch) {
    pieces.assign(1, t);
    for (int s = 0; s < spec.subdivide; ++s) {
      std::vector<Triangle> next;
      next.reserve(pieces.size() * 4);
      for (const auto& f : pieces) {
        const Vec3 m01 = (f[0] + f[1]) * 0.5, m12 = (f[1] + f[2]) * 0.5, m20 = (f[2] + f[0]) * 0.5;
        next.push_back({f[0], m01, m20});
        next.push_back({m01, f[1], m12});
        next.push_back({m20, m12, f[2]});
        next.push_back({m12, m20, m01});
      }
      pieces = std::move(next);
    }
    const double d = plane_distance(t);
    for (const auto& f : pieces) {
      const double scale = 2.0 * tri_area(f) * d;
      for (std::size_t k = 0; k < tr.weights.size(); ++k) {
        const double xi = tr.nodes[k][0], eta = tr.nodes[k][1];
        const Vec3 p = f[0] * (1.0 - xi - eta) + f[1] * xi + f[2] * eta;
        for (int j = 0; j < spec.n_t; ++j) {
          const double tt = c.t0 + dt * gl.nodes[j];
          nodes.push_back(p * tt);
          weights.push_back(tr.weights[k] * scale * tt * tt * gl.weights[j] * dt);
        }
      }
    }
  }
}

VolumeMesh build_shell_mesh(double inner_radius, double outer_radius, int n_radial, int n_angular_level,
                            double grading, int surface_level, const CellRuleSpec& rule) {
  if (!(inner_radius >= 1.0) || !(outer_radius > inner_radius) || !std::isfinite(outer_radius)) {
    fail(ErrorKind::Geometry, "shell radii must satisfy 1 <= inner < outer");
  }
  if (n_radial < 1) fail(ErrorKind::Geometry, "n_radial must be positive");
  if (!(grading >= 1.0)) fail(ErrorKind::Geometry, "grading must be >= 1");
  if (surface_level < 0) surface_level = n_angular_level;
  if (n_angular_level < 0 || surface_level < n_angular_level) {
    fail(ErrorKind::Config, "angular level must satisfy 0 <= angular level <= surface level");
  }
  const SurfaceMesh fine = build_icosphere(surface_level);
  const SurfaceMesh coarse = build_icosphere(n_angular_level);
  const std::size_t nsec = coarse.num_triangles();
  const std::size_t per = std::size_t{1} << (2 * (surface_level - n_angular_level));
  if (nsec * static_cast<std::size_t>(n_radial) > 4000) {
    fail(ErrorKind::Resource, "volume mesh of " + std::to_string(nsec * n_radial) + " cells exceeds the cap of 4000");
  }

  VolumeMesh vm;
  vm.inner_radius = inner_radius;
  vm.outer_radius = outer_radius;
  vm.grading = grading;
  vm.n_radial = n_radial;
  vm.angular_level = n_angular_level;
  vm.surface_level = surface_level;

  const double span = outer_radius - inner_radius;
  const double d0 = grading == 1.0 ? span / n_radial : span * (grading - 1.0) / (std::pow(grading, n_radial) - 1.0);
  vm.radii.resize(n_radial + 1);
  for (int k = 0; k <= n_radial; ++k) {
    vm.radii[k] = grading == 1.0 ? inner_radius + d0 * k
                                 : inner_radius + d0 * (std::pow(grading, k) - 1.0) / (grading - 1.0);
  }
  vm.radii.back() = outer_radius;

  // Edge -> fine triangles, to find patch boundaries and neighbouring sectors.
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    const auto& tri = fine.triangles[t];
    for (int k = 0; k < 3; ++k) edge_tris[std::minmax(tri[k], tri[(k + 1) % 3])].push_back(static_cast<int>(t));
  }

  vm.sectors.resize(nsec);
  for (std::size_t s = 0; s < nsec; ++s) {
    Sector& sec = vm.sectors[s];
    for (std::size_t c = s * per; c < (s + 1) * per; ++c) sec.patch.push_back(fine.corners(c));
    for (std::size_t c = s * per; c < (s + 1) * per; ++c) {
      const auto& tri = fine.triangles[c];
      for (int k = 0; k < 3; ++k) {
        const auto& owners = edge_tris[std::minmax(tri[k], tri[(k + 1) % 3])];
        const int other = owners[0] == static_cast<int>(c) ? owners[1] : owners[0];
        const int other_sector = static_cast<int>(static_cast<std::size_t>(other) / per);
        if (other_sector == static_cast<int>(s)) continue;
        sec.boundary_edges.push_back({fine.vertices[tri[k]], fine.vertices[tri[(k + 1) % 3]]});
        sec.neighbours.push_back(other_sector);
      }
    }
    const Vec3 dir = coarse.centroids[s];
    bool found = false;
    for (const auto& t : sec.patch) {
      if (ray_hit(dir, t, sec.axis)) {
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorKind::Geometry, "sector axis does not hit its patch");
  }

  vm.cells.reserve(nsec * n_radial);
  for (int k = 0; k < n_radial; ++k) {
    for (std::size_t s = 0; s < nsec; ++s) {
      VolumeCell c;
      c.radial_index = k;
      c.sector = static_cast<int>(s);
      c.t0 = vm.radii[k];
      c.t1 = vm.radii[k + 1];
      c.center = vm.sectors[s].axis * (0.5 * (c.t0 + c.t1));
      double cone = 0.0;
      for (const auto& t : vm.sectors[s].patch) cone += plane_distance(t) * tri_area(t) / 3.0;
      c.volume = cone * (c.t1 * c.t1 * c.t1 - c.t0 * c.t0 * c.t0);
      vm.cells.push_back(std::move(c));
    }
  }
  for (std::size_t i = 0; i < vm.cells.size(); ++i) cell_rule(vm, i, rule, vm.cells[i].nodes, vm.cells[i].weights);
  return vm;
}

std::vector<CellAdjacency> cell_adjacency(const VolumeMesh& mesh) {
  std::vector<CellAdjacency> out;
  const int nsec = static_cast<int>(mesh.sectors.size());
  for (int k = 0; k < mesh.n_radial; ++k) {
    for (int s = 0; s < nsec; ++s) {
      const int i = mesh.cell_index(k, s);
      const VolumeCell& ci = mesh.cells[i];
      const Sector& sec = mesh.sectors[s];
      if (k + 1 < mesh.n_radial) {
        double a = 0.0;
        for (const auto& t : sec.patch) a += tri_area(t);
        const int j = mesh.cell_index(k + 1, s);
        out.push_back({i, j, a * ci.t1 * ci.t1, norm(mesh.cells[j].center - ci.center)});
      }
      std::map<int, double> shared;
      for (std::size_t e = 0; e < sec.boundary_edges.size(); ++e) {
        const int other = sec.neighbours[e];
        if (other <= s) continue;
        const auto& ed = sec.boundary_edges[e];
        shared[other] += 0.5 * norm(cross(ed[0], ed[1])) * (ci.t1 * ci.t1 - ci.t0 * ci.t0);
      }
      for (const auto& [other, area] : shared) {
        const int j = mesh.cell_index(k, other);
        out.push_back({i, j, area, norm(mesh.cells[j].center - ci.center)});
      }
    }
  }
  return out;
}

MeshPair build_mesh_pair(int level, const MeshOptions& opts) {
  if (level < 1) fail(ErrorKind::Config, "mesh level must be at least 1");
  MeshPair p;
  p.level = level;
  p.surface = partition_boundary(build_icosphere(level), PartitionRule::parse(opts.partition));
  const int angular = opts.angular_level >= 0 ? opts.angular_level : level - 1;
  const int radial = opts.n_radial > 0 ? opts.n_radial : 2 * level + 2;
  if (angular > level) fail(ErrorKind::Config, "angular level may not exceed the surface level");
  p.volume = build_shell_mesh(1.0, opts.outer_radius, radial, angular, opts.grading, level, opts.rule);
  return p;
}

}  // namespace bdie
