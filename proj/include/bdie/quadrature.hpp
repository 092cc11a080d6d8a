#pragma once

#include <array>
#include <functional>
#include <vector>

#include "bdie/geometry.hpp"
#include "bdie/vec3.hpp"

namespace bdie {

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct QuadratureRule {
  std::vector<std::array<double, 2>> nodes;
  std::vector<double> weights;
};

/// Symmetric Gauss rule exact for total degree `order`, order in {1,2,3,4,6}.
const QuadratureRule& gauss_triangle(int order);

/// Square-to-triangle Duffy rule with an order x order tensor Gauss-Legendre
/// base, clustering nodes at reference vertex `singular_vertex`.
QuadratureRule duffy_triangle(int singular_vertex, int order);

/// Gauss-Legendre rule on [0, 1] with n points (1 <= n <= 64).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const Rule1D& gauss_legendre(int n);

/// Closest distance from p to the (closed) triangle.
double point_triangle_distance(const Vec3& p, const Triangle& tri);

struct LayerOptions {
  double near_ratio = 3.0;   // d/h at and above which the plain rule is used
  int far_order = 4;         // triangle rule in the far regime
  int near_order = 4;        // triangle rule on subdivided pieces
  int near_levels = 2;       // uniform subdivision levels in the near regime
  double adapt_ratio = 1.5;  // pieces with d/h below this are split further
  int max_extra_depth = 8;
  int duffy_order = 8;
  /// Relative (to h) distance below which a target counts as lying on the
  /// triangle and the singular Duffy split is used.
  double on_panel_tol = 1e-10;
};

/// Quadrature node on a surface triangle: position, physical weight and
/// barycentric coordinates with respect to the triangle's corners.
struct LayerNode {
  Vec3 x;
  double w;
  std::array<double, 3> bary;
};

enum class LayerScheme { Far, Near, Singular };

/// Appends the nodes of the scheme chosen for (target, triangle) to `out` and
/// returns which scheme was used.
LayerScheme layer_rule(const Vec3& target, const Triangle& tri, const LayerOptions& opts,
                       std::vector<LayerNode>& out);

using PointKernel = std::function<double(const Vec3&)>;

/// Integral over the triangle of kernel(x) dS(x), with the scheme selected from
/// the target-to-triangle distance.
double integrate_layer(const Vec3& target, const Triangle& tri, const PointKernel& kernel,
                       const LayerOptions& opts = {});

/// Sum of kernel(node) * weight over the cell rule, skipping nodes closer than
/// `exclusion_radius` to the target.
double integrate_volume(const Vec3& target, const std::vector<Vec3>& nodes, const std::vector<double>& weights,
                        const PointKernel& kernel, double exclusion_radius);
double integrate_volume(const Vec3& target, const VolumeCell& cell, const PointKernel& kernel,
                        double exclusion_radius);

struct ConeOptions {
  int face_order = 4;
  int n_s = 4;
  /// Facets closer to the target than split_ratio times their diameter are split.
  double split_ratio = 1.0;
  int max_depth = 6;
};

/// Signed cone decomposition of a closed polyhedron seen from `target`:
///   int_P g dx = sum_F h_F int_F int_0^1 g(y + s (q - y)) s^2 ds dA(q),
/// with h_F the signed height of the target over facet F. Valid for targets
/// inside, outside or on the boundary, and integrable for |x - y|^-2
/// singularities at the target.
void cone_rule(const Vec3& target, const std::vector<Facet>& facets, const ConeOptions& opts,
               std::vector<Vec3>& nodes, std::vector<double>& weights);

}  // namespace bdie
