#pragma once

#include <vector>

#include "bdie/laplace_core.hpp"

namespace bdie {

/// P^x(x, y) = P_Delta(x - y) / a(x).
double kernel_P(const CoefficientField& field, const Vec3& x, const Vec3& y);

/// Remainder of P^x: -[lap ln a(x) P_Delta(x - y) + grad ln a(x) . grad_x P_Delta(x - y)].
double kernel_R(const CoefficientField& field, const Vec3& x, const Vec3& y);

struct QuadratureOptions {
  LayerOptions layer{};
  VolumeRuleOptions volume{};
};

/// Dense assembly limits.
inline constexpr std::size_t kMaxDenseCells = 4000;
inline constexpr std::size_t kMaxDenseTriangles = 2500;
/// Throws Resource when either mesh is above the dense-assembly cap.
void check_dense_cap(std::size_t cells, std::size_t triangles);

/// Coefficient plus surface and volume quadrature engines whose far-field
/// nodes carry cached samples of a, d_n ln a, grad ln a and lap ln a.
class ParametrixKernelSet {
 public:
  ParametrixKernelSet(const SurfaceMesh& surface, const VolumeMesh& volume, const CoefficientField& field,
                      const QuadratureOptions& opts = {});

  const CoefficientField& field() const { return *field_; }
  const SurfaceQuadrature& surface() const { return surface_; }
  const VolumeQuadrature& volume() const { return volume_; }
  double cache_deviation() const { return std::max(surface_.cache_deviation(), volume_.cache_deviation()); }

 private:
  const CoefficientField* field_;
  SurfaceQuadrature surface_;
  VolumeQuadrature volume_;
};

// ---------------------------------------------------------------------------
// Operators applied to densities. The quadrature engines must carry the
// coefficient; without one they are the Laplace operators.

/// V rho = V_Delta(rho / a), rescaled at quadrature nodes.
std::vector<double> op_V(const SurfaceQuadrature& quad, const SurfaceFunction& rho, const std::vector<Vec3>& targets,
                         const Exec& exec = {});
/// W rho = W_Delta rho - V_Delta(rho d_n ln a).
std::vector<double> op_W(const SurfaceQuadrature& quad, const SurfaceFunction& rho, const std::vector<Vec3>& targets,
                         const Exec& exec = {});
/// Direct values on S of the two operators above.
std::vector<double> dv_V(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                         const std::vector<Vec3>& collocation, const Exec& exec = {});
std::vector<double> dv_W(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                         const std::vector<Vec3>& collocation, const Exec& exec = {});

/// P f = P_Delta(f / a).
std::vector<double> op_P(const VolumeQuadrature& quad, const DomainDensity& f, const std::vector<Vec3>& targets,
                         const Exec& exec = {});
/// R u = int R(x, y) u(x) dx over the truncated mesh, in kernel form.
std::vector<double> op_R(const VolumeQuadrature& quad, const DomainDensity& u, const std::vector<Vec3>& targets,
                         const Exec& exec = {});

/// a(y') times the adjoint double layer of rho / a at y' = y - offset n(y),
/// i.e. n(y) . grad of V_Delta(rho / a) there. Diagnostic only.
std::vector<double> op_Wprime_offset(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                                     const std::vector<Vec3>& points, const std::vector<Vec3>& normals, double offset,
                                     const Exec& exec = {});
/// a(y') [d_n W_Delta rho - d_n V_Delta(rho d_n ln a)] at y' = y - offset n,
/// both normal derivatives from the offset stencil. Diagnostic only.
std::vector<double> op_Lhat_offset(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                                   const std::vector<Vec3>& points, const std::vector<Vec3>& normals, double offset,
                                   const Exec& exec = {});

// Mesh-level conveniences building a one-off quadrature engine.
std::vector<double> op_V(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& targets, const LayerOptions& opts = {});
std::vector<double> op_W(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& targets, const LayerOptions& opts = {});
std::vector<double> dv_V(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& collocation, const LayerOptions& opts = {});
std::vector<double> dv_W(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& collocation, const LayerOptions& opts = {});
std::vector<double> op_P(const VolumeMesh& mesh, const CoefficientField& field, const DomainDensity& f,
                         const std::vector<Vec3>& targets, const VolumeRuleOptions& opts = {});
std::vector<double> op_R(const VolumeMesh& mesh, const CoefficientField& field, const DomainDensity& u,
                         const std::vector<Vec3>& targets, const VolumeRuleOptions& opts = {});

// ---------------------------------------------------------------------------
// Dense blocks.

/// Rows at every cell center.
std::vector<RowMeta> cell_rows(const VolumeMesh& mesh);
/// Boundary rows: S_D centroids first, then interior-S_N vertices.
std::vector<RowMeta> boundary_rows(const SurfaceMesh& mesh);
std::vector<ColMeta> cell_columns(const VolumeMesh& mesh);
/// Triangle-constant basis on the triangles of the support.
std::vector<ColMeta> triangle_columns(const SurfaceMesh& mesh, Support support);
/// Vertex-linear basis: all vertices, or interior-S_N vertices for NeumannOnly.
std::vector<ColMeta> vertex_columns(const SurfaceMesh& mesh, Support support);

/// Columns: every cell.
OperatorBlock assemble_R_block(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows, const Exec& exec = {});
OperatorBlock assemble_P_block(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows, const Exec& exec = {});
/// Columns: triangle-constant basis functions.
OperatorBlock assemble_V_block(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                               const std::vector<ColMeta>& cols, const Exec& exec = {});
/// Columns: vertex-linear basis functions. The W_Delta part and the
/// V_Delta(. d_n ln a) part are accumulated separately and subtracted once.
OperatorBlock assemble_W_block(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                               const std::vector<ColMeta>& cols, const Exec& exec = {});

struct DecayReport {
  double max_entry = 0.0;
  double max_far_rows = 0.0;     // rows whose target lies at radius >= the cut
  double max_far_columns = 0.0;  // columns whose cell center lies at radius >= the cut
};
DecayReport remainder_decay(const OperatorBlock& r_block, const VolumeMesh& mesh, double radius);

}  // namespace bdie
