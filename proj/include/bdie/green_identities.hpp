#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bdie/parametrix_ops.hpp"

namespace bdie {

/// Closed-form field with its gradient and Laplacian.
struct AnalyticField {
  std::string name;
  std::function<double(const Vec3&)> u;
  std::function<Vec3(const Vec3&)> grad;
  std::function<double(const Vec3&)> laplacian;

  /// 1 / (4 pi |x - center|).
  static AnalyticField point_source(const Vec3& center = {0, 0, 0});
  static AnalyticField constant(double c);
  /// Newton potential P_Delta f of the radial bump
  /// f(r) = (1 - ((r - r0) / w)^2)^2 on |r - r0| < w, so that Laplacian = f.
  static AnalyticField radial_bump_potential(double r0 = 2.0, double w = 0.5);
  /// The field multiplied by s.
  AnalyticField scaled(double s) const;

  /// A u = div(a grad u) = grad a . grad u + a lap u.
  double apply_operator(const CoefficientField& field, const Vec3& x) const;
};

struct ResidualReport {
  std::string name;
  int level = 0;
  std::vector<Vec3> points;
  std::vector<double> residuals;
  double max_abs = 0.0;
  double scale = 0.0;
  double rel_to_scale = 0.0;
  std::size_t excluded = 0;  // test points dropped for being too close to S

  void finish();  // fills max_abs and rel_to_scale from residuals and scale
};

/// Which jump coefficient multiplies the trace in boundary equations.
enum class JumpMode { SolidAngle, Half };

struct IdentityOptions {
  QuadratureOptions quad{};
  JumpMode jump = JumpMode::SolidAngle;
  /// Truncation check: sup over the outer sphere of |integrand| R^3 must stay
  /// below this fraction of the reported scale.
  double tail_tol = 1e-3;
  int tail_samples = 200;
  Exec exec{};
};

/// T u = a grad u . n at the given points.
std::vector<double> conormal_trace(const CoefficientField& field, const AnalyticField& u,
                                   const std::vector<Vec3>& points, const std::vector<Vec3>& normals);

/// Surface functions for the exact Cauchy data on the polyhedral surface
/// (panel normals).
SurfaceFunction trace_function(const AnalyticField& u);
SurfaceFunction conormal_function(const SurfaceMesh& mesh, const CoefficientField& field, const AnalyticField& u);

/// Throws TruncationUnsound when |g| R^3 on the outer sphere exceeds
/// tol * scale.
void check_tail(const std::function<double(const Vec3&)>& g, double radius, double scale, double tol, int samples);

/// Cell centers away from S (distance >= max surface edge) on every other
/// radial layer short of the outermost, thinned over sectors.
std::vector<Vec3> default_test_points(const MeshPair& meshes, std::size_t target_count = 48);

/// int_Omega (v A u - u A v) dx  minus  int_S (v T u - u T v) dS, with n
/// pointing out of Omega. scale = the larger of int |v A u| + |u A v| dx
/// and int |v T u| + |u T v| dS; the signed sides can nearly cancel.
ResidualReport second_green_residual(const CoefficientField& field, const AnalyticField& u, const AnalyticField& v,
                                     const MeshPair& meshes, const IdentityOptions& opts = {});

/// u + R u - V T u + W u - P A u at interior points of Omega.
ResidualReport third_green_residual(const CoefficientField& field, const AnalyticField& u, const MeshPair& meshes,
                                    const std::vector<Vec3>& test_points, const IdentityOptions& opts = {});

/// (1 - kappa) u + R u - V T u + W u - P A u at the boundary collocation
/// points (S_D centroids, interior-S_N vertices), with direct values.
ResidualReport trace_identity_residual(const CoefficientField& field, const AnalyticField& u, const MeshPair& meshes,
                                       const IdentityOptions& opts = {});

/// a(y') times the offset-stencil normal derivative of the interior identity
/// u + R u - V T u + W u - P A u at y' = y - offset n. The four conormal
/// actions (T u, R, W', L-hat, P) all come from that one stencil.
/// Diagnostic only.
ResidualReport conormal_identity_residual_offset(const CoefficientField& field, const AnalyticField& u,
                                                 const MeshPair& meshes, double offset,
                                                 const IdentityOptions& opts = {});

/// Smallest singular value of the direct-value single-layer block on
/// triangle-constant densities collocated at centroids.
double single_layer_injectivity(const SurfaceMesh& mesh, const CoefficientField& field,
                                const LayerOptions& opts = {}, const Exec& exec = {});

struct RepresentationResult {
  DomainDensity f_star;       // a lap F on cells (pointwise evaluator attached)
  BoundaryDensity psi_star;   // a times the single-layer density, per triangle
  std::vector<double> psi_delta;  // the Laplace single-layer density
  double solve_residual = 0.0;
};

/// (f, Psi) = (a lap F, a V_Delta^{-1} trace[F - P_Delta(lap F)]).
RepresentationResult representation_C(const MeshPair& meshes, const CoefficientField& field, const AnalyticField& F,
                                      const IdentityOptions& opts = {});

/// P f + V Psi at the given points.
std::vector<double> reconstruct(const MeshPair& meshes, const CoefficientField& field,
                                const RepresentationResult& rep, const std::vector<Vec3>& points,
                                const IdentityOptions& opts = {});

}  // namespace bdie
