#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdie/green_identities.hpp"

namespace bdie {

/// Mixed problem data: div(a grad u) = f in Omega, u = dirichlet on S_D,
/// a grad u . n = neumann on S_N.
struct ProblemCase {
  std::string name;
  std::function<double(const Vec3&)> f;  // empty means f = 0
  std::function<double(const Vec3&)> dirichlet;
  std::function<double(const Vec3&, const Vec3&)> neumann;  // (x, n)
  std::optional<AnalyticField> exact;
};

/// Data taken from a closed-form solution: f = A u and its Cauchy data.
ProblemCase manufactured_case(const CoefficientField& field, const AnalyticField& u);
/// Built-in cases: "point-source", "constant" (u = 1), "bump", "zero".
ProblemCase make_case(const std::string& name, const CoefficientField& field);

/// Fixed extensions of the boundary data to all of S, by zero.
struct ExtensionPair {
  BoundaryDensity Phi0;  // vertex-linear: datum on S_D and interface vertices, 0 at interior-S_N vertices
  BoundaryDensity Psi0;  // triangle-constant: datum at S_N centroids, 0 on S_D
};

ExtensionPair build_extensions(const SurfaceMesh& mesh, const std::function<double(const Vec3&)>& phi0,
                               const std::function<double(const Vec3&, const Vec3&)>& psi0);

struct M12Options {
  QuadratureOptions quad{};
  JumpMode jump = JumpMode::SolidAngle;
  Exec exec{};
};

/// Unknowns: u at cells | psi on S_D triangles | phi at interior-S_N vertices.
/// Rows: cell centers | S_D centroids | interior-S_N vertices.
struct M12Layout {
  std::size_t cells = 0;
  std::size_t dirichlet_triangles = 0;
  std::size_t neumann_vertices = 0;

  std::size_t size() const { return cells + dirichlet_triangles + neumann_vertices; }
  std::size_t boundary_rows() const { return dirichlet_triangles + neumann_vertices; }
  /// Start of block column j (0: u, 1: psi, 2: phi) and its width.
  std::size_t column_start(int j) const;
  std::size_t column_width(int j) const;
};

struct M12System {
  RowMatrix matrix;  // [[I + R, -V, W], [g R, -V_dv, (1 - kappa) I + W_dv]]
  Eigen::VectorXd rhs;
  M12Layout layout;
  std::vector<RowMeta> rows;
  std::vector<ColMeta> cols;
  std::vector<double> kappa;  // jump coefficient per boundary row

  /// Block (i, j): i = 0 domain rows, 1 boundary rows; j as in M12Layout.
  Eigen::Block<const RowMatrix> block(int i, int j) const;
};

/// Matrix only; the right-hand side is set by set_rhs. Throws Resource above
/// the dense-assembly cap.
M12System assemble_M12(const MeshPair& meshes, const CoefficientField& field, const M12Options& opts = {});

/// F0 = P f + V Psi0 - W Phi0 at the system rows: cell centers, then the
/// boundary rows, where it is the exterior trace (kappa Phi0 - W_dv Phi0 + ...).
std::vector<double> assemble_F0(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                const ExtensionPair& ext, const M12Options& opts = {});
/// F0 at points of Omega away from S.
std::vector<double> F0_at(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                          const ExtensionPair& ext, const std::vector<Vec3>& points, const M12Options& opts = {});

/// rhs = [F0 at cells; trace of F0 - Phi0 at boundary rows].
void set_rhs(M12System& system, const MeshPair& meshes, const std::vector<double>& f0, const ExtensionPair& ext);

struct SolveOptions {
  bool iterative_check = false;  // also run restarted GMRES and compare
  int restart = 50;
  double tolerance = 1e-8;
  int max_iterations = 5000;
};

struct M12Solution {
  DomainDensity u;
  BoundaryDensity psi;  // triangle-constant, S_D only
  BoundaryDensity phi;  // vertex-linear, interior-S_N vertices only
  BoundaryDensity recovered_trace;     // Phi0 + phi
  BoundaryDensity recovered_conormal;  // Psi0 + psi
  double condition = 0.0;      // 1-norm condition estimate of the dense factorization
  double residual_norm = 0.0;  // |M x - F| / |F| (absolute when F = 0)
  int iterations = 0;          // GMRES iterations when the check ran
  double iterative_difference = 0.0;  // |x_gmres - x| / |x|
};

/// Dense LU solve. Throws Solver when the matrix is numerically singular or
/// the residual exceeds 1e-10.
M12Solution solve_M12(const M12System& system, const MeshPair& meshes, const ExtensionPair& ext,
                      const SolveOptions& opts = {});

/// u(y) = P f - R u + V Psi - W Phi at points of Omega (the domain equation
/// read as a representation of the solution).
std::vector<double> evaluate_solution(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                      const M12Solution& sol, const std::vector<Vec3>& points,
                                      const M12Options& opts = {});

enum class NormOrder { Weighted0, Semi1, Full };

/// sqrt of int omega^-2 u^2 (Weighted0), of the face-difference gradient
/// energy sum area / distance (u_a - u_b)^2 (Semi1), or of their sum.
double weighted_norm(const std::vector<double>& values, const VolumeMesh& mesh, NormOrder order);

struct EquivalenceReport {
  double trace_max = 0.0, trace_scale = 0.0, trace_rel = 0.0;
  double conormal_max = 0.0, conormal_scale = 0.0, conormal_rel = 0.0;
  double phi_on_dirichlet = 0.0;    // max |phi| at S_D and interface vertices (Dirichlet condition)
  double psi_on_neumann = 0.0;      // max |psi| on S_N triangles (Neumann condition)
  double interior_weighted = 0.0;   // |u - u_exact| / |u_exact| in the full weighted norm
  std::vector<Vec3> probes;
  std::vector<double> probe_values, probe_exact;
  double probe_rel = 0.0;           // max |u - u_exact| / max |u_exact| over probes
};

/// Default interior probes, all in 1.5 <= |y| <= 3.
std::vector<Vec3> default_probes();

EquivalenceReport equivalence_residuals(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                        const M12Solution& sol, const std::vector<Vec3>& probes,
                                        const M12Options& opts = {});

/// Assemble, solve and check one case.
struct M12Run {
  ExtensionPair ext;
  M12Solution solution;
  std::optional<EquivalenceReport> report;  // when the case has an exact solution
};
M12Run run_M12(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
               const std::vector<Vec3>& probes, const M12Options& opts = {}, const SolveOptions& sopts = {});

}  // namespace bdie
