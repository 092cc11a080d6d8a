#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "bdie/coefficient.hpp"
#include "bdie/geometry.hpp"
#include "bdie/parallel.hpp"
#include "bdie/quadrature.hpp"

namespace bdie {

// Sign conventions, fixed once for every module (normals n point into the
// unit ball, i.e. out of the exterior domain):
//   P_Delta(x - y)  = -1 / (4 pi |x - y|)
//   V_Delta rho(y)  =  int_S rho(x) / (4 pi |x - y|) dS(x)
//   W_Delta rho(y)  = -int_S n(x).(x - y) / (4 pi |x - y|^3) rho(x) dS(x)
// On the unit sphere with rho = 1: V_Delta = 1 / max(1, |y|); W_Delta = 0
// outside, 1 inside, 1/2 as a direct value; the trace of W_Delta rho from the
// exterior is -(1/2) rho + (direct value).

/// P_Delta(x - y). Throws SingularEvaluation for x == y.
double fund_solution(const Vec3& x, const Vec3& y);

enum class Wrt { X, Y };
/// Gradient of P_Delta(x - y) with respect to x or y; grad_x = (x - y) / (4 pi r^3).
Vec3 grad_fund_solution(const Vec3& x, const Vec3& y, Wrt wrt);

enum class Space { TriangleConstant, VertexLinear };
enum class Support { All, DirichletOnly, NeumannOnly };

/// Discrete trace-space function: one coefficient per triangle or per vertex.
/// Coefficients outside the support must be zero; S_N-only vertex densities
/// also vanish at interface vertices.
struct BoundaryDensity {
  Space space = Space::TriangleConstant;
  Support support = Support::All;
  std::vector<double> coeffs;

  static BoundaryDensity constant(const SurfaceMesh& mesh, Space space, double value,
                                  Support support = Support::All);
  /// Throws Config when sizes or support constraints are violated.
  void validate(const SurfaceMesh& mesh) const;
  double at(const SurfaceMesh& mesh, std::size_t tri, const std::array<double, 3>& bary) const;
};

/// Domain function on the volume mesh: per-cell values, optionally with a
/// pointwise evaluator used at quadrature nodes instead of the cell value.
struct DomainDensity {
  std::vector<double> values;
  std::function<double(const Vec3&)> pointwise;

  static DomainDensity constant(const VolumeMesh& mesh, double value);
  static DomainDensity from_function(const VolumeMesh& mesh, std::function<double(const Vec3&)> f);
  double at(std::size_t cell, const Vec3& x) const { return pointwise ? pointwise(x) : values[cell]; }
};

/// Surface density given pointwise: value at a node of triangle `tri`.
using SurfaceFunction = std::function<double(std::size_t tri, const std::array<double, 3>& bary, const Vec3& x)>;
SurfaceFunction as_function(const SurfaceMesh& mesh, const BoundaryDensity& density);

struct RowMeta {
  enum class Kind { Cell, Centroid, Vertex, Point } kind = Kind::Point;
  int index = -1;
  Vec3 point;
};
struct ColMeta {
  enum class Kind { Cell, Triangle, Vertex } kind = Kind::Cell;
  int index = -1;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense operator block with row (collocation) and column (basis) metadata.
struct OperatorBlock {
  RowMatrix matrix;
  std::vector<RowMeta> rows;
  std::vector<ColMeta> cols;
  bool consistent() const {
    return static_cast<std::size_t>(matrix.rows()) == rows.size() &&
           static_cast<std::size_t>(matrix.cols()) == cols.size();
  }
};

/// Coefficient quantities sampled at a surface quadrature node.
struct SurfaceCoeff {
  double inv_a = 1.0;
  double dn_ln_a = 0.0;  // n(x) . grad ln a(x)
};

/// Quadrature engine for layer potentials over a surface mesh. Far-field
/// nodes (and, with a coefficient, the sampled 1/a and d_n ln a there) are
/// cached per triangle; near and singular rules are built per target.
/// Without a coefficient every sample is a = 1, d_n ln a = 0, which makes the
/// parametrix operators run the exact Laplace code path.
class SurfaceQuadrature {
 public:
  explicit SurfaceQuadrature(const SurfaceMesh& mesh, const LayerOptions& opts = {},
                             const CoefficientField* field = nullptr);

  const SurfaceMesh& mesh() const { return *mesh_; }
  const LayerOptions& options() const { return opts_; }
  const CoefficientField* field() const { return field_; }

  /// Calls fn(tri, node, coeff, G w, K w) for every quadrature node seen from
  /// y, with G = 1/(4 pi r) and K = -n.(x - y)/(4 pi r^3). On the panel that
  /// contains y the double-layer weight is set to zero (flat-panel principal
  /// value). Triangles are visited in index order.
  template <class Fn>
  void visit(const Vec3& y, std::vector<LayerNode>& scratch, Fn&& fn) const;

  /// Largest difference between a cached coefficient sample and a fresh one.
  double cache_deviation() const;

 private:
  SurfaceCoeff sample(std::size_t tri, const Vec3& x) const;

  const SurfaceMesh* mesh_;
  LayerOptions opts_;
  const CoefficientField* field_;
  std::vector<double> diam_;
  std::vector<std::size_t> far_offset_;
  std::vector<LayerNode> far_nodes_;
  std::vector<SurfaceCoeff> far_coeff_;
};

/// Coefficient quantities sampled at a volume quadrature node.
struct VolumeCoeff {
  double inv_a = 1.0;
  Vec3 grad_ln_a;
  double lap_ln_a = 0.0;
};

struct VolumeRuleOptions {
  /// |y - center| / bounding radius at and above which the stored base rule
  /// is used.
  double far_ratio = 4.0;
  /// ... and above which the cached refined rule is used; closer cells use
  /// the signed cone rule from the target.
  double mid_ratio = 2.0;
  CellRuleSpec refined{4, 4, 0};
  ConeOptions cone{};
};

enum class VolumeRegime { Far, Mid, Near };

/// Quadrature engine for volume potentials over a cell mesh, with the same
/// caching scheme as SurfaceQuadrature.
class VolumeQuadrature {
 public:
  explicit VolumeQuadrature(const VolumeMesh& mesh, const VolumeRuleOptions& opts = {},
                            const CoefficientField* field = nullptr);

  const VolumeMesh& mesh() const { return *mesh_; }
  const VolumeRuleOptions& options() const { return opts_; }
  const CoefficientField* field() const { return field_; }

  VolumeRegime regime(const Vec3& y, std::size_t cell) const;

  struct Scratch {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    std::vector<Facet> facets;
  };

  /// Calls fn(x, w, coeff) for every node of `cell` seen from y.
  template <class Fn>
  void visit_cell(const Vec3& y, std::size_t cell, Scratch& scratch, Fn&& fn) const;

  double cache_deviation() const;

 private:
  VolumeCoeff sample(const Vec3& x) const;

  const VolumeMesh* mesh_;
  VolumeRuleOptions opts_;
  const CoefficientField* field_;
  std::vector<double> radius_;
  std::vector<std::size_t> base_offset_, fine_offset_;
  std::vector<Vec3> base_x_, fine_x_;
  std::vector<double> base_w_, fine_w_;
  std::vector<VolumeCoeff> base_c_, fine_c_;
};

// ---------------------------------------------------------------------------
// Laplace potentials. Targets may lie off S or on S (direct values).

std::vector<double> single_layer_V_delta(const SurfaceQuadrature& quad, const SurfaceFunction& density,
                                         const std::vector<Vec3>& targets, const Exec& exec = {});
std::vector<double> single_layer_V_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& targets, const LayerOptions& opts = {},
                                         const Exec& exec = {});

std::vector<double> double_layer_W_delta(const SurfaceQuadrature& quad, const SurfaceFunction& density,
                                         const std::vector<Vec3>& targets, const Exec& exec = {});
std::vector<double> double_layer_W_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& targets, const LayerOptions& opts = {},
                                         const Exec& exec = {});

/// Principal value of the double layer at boundary points (vertices or
/// centroids); the panels containing the point contribute nothing.
std::vector<double> direct_value_W_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& collocation, const LayerOptions& opts = {},
                                         const Exec& exec = {});

/// int_Omega P_Delta(x - y) f(x) dx over the truncated mesh.
std::vector<double> newton_potential_delta(const VolumeQuadrature& quad, const DomainDensity& f,
                                           const std::vector<Vec3>& targets, const Exec& exec = {});
std::vector<double> newton_potential_delta(const VolumeMesh& mesh, const DomainDensity& f,
                                           const std::vector<Vec3>& targets, const VolumeRuleOptions& opts = {},
                                           const Exec& exec = {});

/// Derivative along n, on the exterior-domain side, at the offset point
/// y - offset n: one-sided second-order stencil over y - k offset n, k = 1..3.
double normal_derivative_delta(const std::function<double(const Vec3&)>& potential, const Vec3& y, const Vec3& n,
                               double offset);

/// Solid-angle jump coefficient at boundary points: the direct value of
/// W_Delta[1] (exactly 1/2 on a smooth surface, the interior solid-angle
/// fraction at polyhedral vertices).
std::vector<double> jump_coefficient(const SurfaceQuadrature& quad, const std::vector<Vec3>& points,
                                     const Exec& exec = {});

// ---------------------------------------------------------------------------

template <class Fn>
void SurfaceQuadrature::visit(const Vec3& y, std::vector<LayerNode>& scratch, Fn&& fn) const {
  const SurfaceMesh& m = *mesh_;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const Triangle tri = m.corners(t);
    const Vec3& n = m.normals[t];
    const double d = point_triangle_distance(y, tri);
    if (d >= opts_.near_ratio * diam_[t]) {
      for (std::size_t k = far_offset_[t]; k < far_offset_[t + 1]; ++k) {
        const LayerNode& node = far_nodes_[k];
        const Vec3 r = node.x - y;
        const double r2 = norm2(r), rl = std::sqrt(r2);
        const double g = node.w / (kFourPi * rl);
        fn(t, node, far_coeff_[k], g, -dot(n, r) * g / r2);
      }
      continue;
    }
    scratch.clear();
    const LayerScheme scheme = layer_rule(y, tri, opts_, scratch);
    const bool on_panel = scheme == LayerScheme::Singular;
    for (const LayerNode& node : scratch) {
      const Vec3 r = node.x - y;
      const double r2 = norm2(r), rl = std::sqrt(r2);
      const double g = node.w / (kFourPi * rl);
      fn(t, node, sample(t, node.x), g, on_panel ? 0.0 : -dot(n, r) * g / r2);
    }
  }
}

template <class Fn>
void VolumeQuadrature::visit_cell(const Vec3& y, std::size_t cell, Scratch& scratch, Fn&& fn) const {
  switch (regime(y, cell)) {
    case VolumeRegime::Far:
      for (std::size_t k = base_offset_[cell]; k < base_offset_[cell + 1]; ++k) fn(base_x_[k], base_w_[k], base_c_[k]);
      return;
    case VolumeRegime::Mid:
      for (std::size_t k = fine_offset_[cell]; k < fine_offset_[cell + 1]; ++k) fn(fine_x_[k], fine_w_[k], fine_c_[k]);
      return;
    case VolumeRegime::Near: {
      scratch.nodes.clear();
      scratch.weights.clear();
      scratch.facets = mesh_->facets(cell);
      cone_rule(y, scratch.facets, opts_.cone, scratch.nodes, scratch.weights);
      for (std::size_t k = 0; k < scratch.nodes.size(); ++k) fn(scratch.nodes[k], scratch.weights[k], sample(scratch.nodes[k]));
      return;
    }
  }
}

}  // namespace bdie
