#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdie/vec3.hpp"

namespace bdie {

enum class Part { D, N };
enum class VertexClass { InteriorD, InteriorN, Interface };

/// Triangulated closed surface S with normals pointing from the exterior
/// domain into the bounded complement (toward the origin for the sphere).
/// Triangle winding encodes the orientation: (v1 - v0) x (v2 - v0) is along
/// the normal.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;
  std::vector<double> areas;
  std::vector<Vec3> centroids;
  std::vector<Part> part_label;
  std::vector<VertexClass> vertex_class;
  int level = -1;  // subdivision level for icospheres, -1 otherwise

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  Triangle corners(std::size_t t) const {
    const auto& tri = triangles[t];
    return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
  }
  double total_area() const;
  double part_area(Part p) const;
  /// Longest edge over all triangles.
  double max_edge() const;
  /// Longest edge of triangle t.
  double diameter(std::size_t t) const;
  /// For every vertex, the triangles that contain it (ascending order).
  std::vector<std::vector<int>> vertex_triangles() const;
};

/// Builds a mesh from vertices and oriented triangles, computing normals,
/// areas and centroids. All triangles are labelled D until partitioned.
SurfaceMesh make_surface_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles);

/// Unit icosphere after `level` midpoint subdivisions. Children of triangle t
/// at one level are triangles 4t..4t+3 at the next, so a coarse triangle owns
/// a contiguous index block at every finer level.
SurfaceMesh build_icosphere(int level);

/// Reverses every triangle's winding (and hence its normal).
SurfaceMesh flip_orientation(const SurfaceMesh& mesh);

/// Half-space labelling rule "<axis><op><threshold>", e.g. "z<0" or "x>=0.25".
/// Triangles whose centroid satisfies the predicate are labelled D.
struct PartitionRule {
  int axis = 2;
  bool less = true;
  bool inclusive = false;
  double threshold = 0.0;
  std::string text = "z<0";

  static PartitionRule parse(const std::string& text);
  bool dirichlet(const Vec3& centroid) const;
};

/// Labels triangles and classifies vertices. Throws Partition when a part
/// would be empty.
SurfaceMesh partition_boundary(const SurfaceMesh& mesh, const PartitionRule& rule = {});

/// Discrete Gauss integral sum_T area_T n_T . (probe - c_T) / |probe - c_T|^3 / 4pi.
/// About +1 for a correctly oriented closed mesh around the probe.
double orientation_check(const SurfaceMesh& mesh, const Vec3& probe);

void write_off(std::ostream& out, const SurfaceMesh& mesh);
SurfaceMesh read_off(std::istream& in);

/// Planar boundary facet of a volume cell with its outward unit normal.
struct Facet {
  Triangle corners;
  Vec3 normal;
};

struct VolumeCell {
  Vec3 center;
  double volume = 0.0;
  int radial_index = 0;
  int sector = 0;
  double t0 = 0.0, t1 = 0.0;  // radial scale range of the frustum
  std::vector<Vec3> nodes;
  std::vector<double> weights;
};

/// Angular sector: the cone over a coarse icosphere triangle, whose base is the
/// union of its fine child triangles.
struct Sector {
  std::vector<Triangle> patch;  // fine child triangles, wound like the surface
  /// Boundary edges of the patch, each oriented so that the patch lies to the
  /// left when viewed from outside along the normal convention of the surface.
  std::vector<std::array<Vec3, 2>> boundary_edges;
  std::vector<int> neighbours;  // sector across each boundary edge
  Vec3 axis;                    // point on the patch along the sector's central ray
};

/// Graded cell decomposition of {inner <= g(x) <= outer}, where g is the
/// gauge of the inscribed polyhedron (g = |x| on the unit sphere vertices).
/// Cells are conical frusta: sector x radial interval.
struct VolumeMesh {
  double inner_radius = 1.0;
  double outer_radius = 4.0;
  double grading = 1.3;
  int n_radial = 8;
  int angular_level = 2;
  int surface_level = 2;
  std::vector<double> radii;  // n_radial + 1 interval endpoints
  std::vector<Sector> sectors;
  std::vector<VolumeCell> cells;  // cell index = radial_index * sectors + sector

  std::size_t num_cells() const { return cells.size(); }
  int cell_index(int radial, int sector) const {
    return radial * static_cast<int>(sectors.size()) + sector;
  }
  double total_volume() const;
  /// Volume of the polyhedral shell the cells tile exactly.
  double polyhedral_shell_volume() const;
  /// Closed facet set of a cell (outward normals).
  std::vector<Facet> facets(std::size_t cell) const;
  /// Radius of a ball around the center containing the cell.
  double bounding_radius(std::size_t cell) const;
};

/// Cell quadrature: each fine child triangle contributes its centroid (or a
/// `tri_order` Gauss rule) times an `n_t`-point Gauss-Legendre rule in the
/// radial scale; `subdivide` splits the children further.
struct CellRuleSpec {
  int tri_order = 2;
  int n_t = 3;
  int subdivide = 0;
};

VolumeMesh build_shell_mesh(double inner_radius, double outer_radius, int n_radial, int n_angular_level,
                            double grading, int surface_level = -1, const CellRuleSpec& rule = {});

/// Nodes and weights of a cell rule (used for the base rule stored in the
/// mesh and for refined rules).
void cell_rule(const VolumeMesh& mesh, std::size_t cell, const CellRuleSpec& spec, std::vector<Vec3>& nodes,
               std::vector<double>& weights);

/// Pairs of face-adjacent cells with the shared face area and the distance
/// between the cell centers.
struct CellAdjacency {
  int a, b;
  double area;
  double distance;
};
std::vector<CellAdjacency> cell_adjacency(const VolumeMesh& mesh);

/// Surface and volume meshes refined together. For level L the surface is the
/// level-L icosphere and the shell has 2L + 2 radial layers over the
/// level-(L - 1) sectors, so the inner cell faces are exactly the surface
/// triangles. Negative option values select these defaults.
struct MeshOptions {
  double outer_radius = 4.0;
  double grading = 1.3;
  int n_radial = -1;
  int angular_level = -1;
  CellRuleSpec rule{};
  std::string partition = "z<0";
};

struct MeshPair {
  int level = 0;
  SurfaceMesh surface;
  VolumeMesh volume;
};

MeshPair build_mesh_pair(int level, const MeshOptions& opts = {});

}  // namespace bdie
