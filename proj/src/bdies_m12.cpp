#include "bdie/bdies_m12.hpp"

#include <cmath>
#include <unsupported/Eigen/IterativeSolvers>

#include "bdie/error.hpp"

namespace bdie {

ProblemCase manufactured_case(const CoefficientField& field, const AnalyticField& u) {
  ProblemCase pc;
  pc.name = u.name;
  pc.exact = u;
  pc.f = [field, u](const Vec3& x) { return u.apply_operator(field, x); };
  pc.dirichlet = u.u;
  pc.neumann = [field, u](const Vec3& x, const Vec3& n) { return field.a(x) * dot(u.grad(x), n); };
  return pc;
}

ProblemCase make_case(const std::string& name, const CoefficientField& field) {
  ProblemCase pc;
  if (name == "point-source") {
    pc = manufactured_case(field, AnalyticField::point_source());
  } else if (name == "constant") {
    pc = manufactured_case(field, AnalyticField::constant(1.0));
  } else if (name == "bump") {
    pc = manufactured_case(field, AnalyticField::radial_bump_potential());
  } else if (name == "zero") {
    pc = manufactured_case(field, AnalyticField::constant(0.0));
  } else {
    fail(ErrorKind::Config, "unknown case '" + name + "' (expected point-source, constant, bump or zero)");
  }
  pc.name = name;
  return pc;
}

ExtensionPair build_extensions(const SurfaceMesh& mesh, const std::function<double(const Vec3&)>& phi0,
                               const std::function<double(const Vec3&, const Vec3&)>& psi0) {
  ExtensionPair ext;
  ext.Phi0.space = Space::VertexLinear;
  ext.Phi0.coeffs.assign(mesh.num_vertices(), 0.0);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertex_class[v] != VertexClass::InteriorN) ext.Phi0.coeffs[v] = phi0(mesh.vertices[v]);
  }
  ext.Psi0.space = Space::TriangleConstant;
  ext.Psi0.coeffs.assign(mesh.num_triangles(), 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.part_label[t] == Part::N) ext.Psi0.coeffs[t] = psi0(mesh.centroids[t], mesh.normals[t]);
  }
  for (const auto* d : {&ext.Phi0, &ext.Psi0}) {
    for (double c : d->coeffs) {
      if (!std::isfinite(c)) fail(ErrorKind::Config, "boundary data is not finite");
    }
  }
  return ext;
}

std::size_t M12Layout::column_start(int j) const {
  switch (j) {
    case 0: return 0;
    case 1: return cells;
    default: return cells + dirichlet_triangles;
  }
}

std::size_t M12Layout::column_width(int j) const {
  switch (j) {
    case 0: return cells;
    case 1: return dirichlet_triangles;
    default: return neumann_vertices;
  }
}

Eigen::Block<const RowMatrix> M12System::block(int i, int j) const {
  const Eigen::Index r0 = i == 0 ? 0 : static_cast<Eigen::Index>(layout.cells);
  const Eigen::Index nr = static_cast<Eigen::Index>(i == 0 ? layout.cells : layout.boundary_rows());
  return matrix.block(r0, static_cast<Eigen::Index>(layout.column_start(j)), nr,
                      static_cast<Eigen::Index>(layout.column_width(j)));
}

namespace {

std::vector<RowMeta> system_rows(const MeshPair& meshes) {
  std::vector<RowMeta> rows = cell_rows(meshes.volume);
  const std::vector<RowMeta> b = boundary_rows(meshes.surface);
  rows.insert(rows.end(), b.begin(), b.end());
  return rows;
}

std::vector<double> kappa_values(const SurfaceQuadrature& q, const std::vector<Vec3>& pts, JumpMode mode,
                                 const Exec& exec) {
  if (mode == JumpMode::Half) return std::vector<double>(pts.size(), 0.5);
  return jump_coefficient(q, pts, exec);
}

// Value of a vertex-linear density at a boundary row point.
double value_at_row(const SurfaceMesh& mesh, const BoundaryDensity& d, const RowMeta& r) {
  if (r.kind == RowMeta::Kind::Vertex) return d.coeffs[r.index];
  return d.at(mesh, r.index, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
}

// P f + V Psi0 - W Phi0 at the points (direct values for points on S).
std::vector<double> f0_terms(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                             const ExtensionPair& ext, const std::vector<Vec3>& pts, const M12Options& opts) {
  const SurfaceMesh& sm = meshes.surface;
  const VolumeMesh& vm = meshes.volume;
  ext.Phi0.validate(sm);
  ext.Psi0.validate(sm);
  std::vector<double> out(pts.size(), 0.0);
  if (pc.f) {
    double scale = 0.0;
    for (const VolumeCell& c : vm.cells) scale = std::max(scale, std::abs(pc.f(c.center)));
    if (scale > 0.0) check_tail(pc.f, vm.outer_radius, scale, 1e-3, 200);
    const VolumeQuadrature vq(vm, opts.quad.volume, &field);
    out = op_P(vq, DomainDensity::from_function(vm, pc.f), pts, opts.exec);
  }
  const SurfaceQuadrature sq(sm, opts.quad.layer, &field);
  const std::vector<double> v = op_V(sq, as_function(sm, ext.Psi0), pts, opts.exec);
  const std::vector<double> w = op_W(sq, as_function(sm, ext.Phi0), pts, opts.exec);
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] += v[i] - w[i];
  return out;
}

}  // namespace

M12System assemble_M12(const MeshPair& meshes, const CoefficientField& field, const M12Options& opts) {
  const SurfaceMesh& sm = meshes.surface;
  const VolumeMesh& vm = meshes.volume;
  check_dense_cap(vm.num_cells(), sm.num_triangles());

  M12System sys;
  sys.rows = system_rows(meshes);
  const std::vector<ColMeta> tcols = triangle_columns(sm, Support::DirichletOnly);
  const std::vector<ColMeta> vcols = vertex_columns(sm, Support::NeumannOnly);
  sys.layout = {vm.num_cells(), tcols.size(), vcols.size()};
  sys.cols = cell_columns(vm);
  sys.cols.insert(sys.cols.end(), tcols.begin(), tcols.end());
  sys.cols.insert(sys.cols.end(), vcols.begin(), vcols.end());
  const std::size_t n = sys.layout.size();
  if (sys.rows.size() != n) fail(ErrorKind::Partition, "row and unknown counts differ; the system is not square");

  const SurfaceQuadrature sq(sm, opts.quad.layer, &field);
  const VolumeQuadrature vq(vm, opts.quad.volume, &field);
  const OperatorBlock r = assemble_R_block(vq, sys.rows, opts.exec);
  const OperatorBlock v = assemble_V_block(sq, sys.rows, tcols, opts.exec);
  const OperatorBlock w = assemble_W_block(sq, sys.rows, vcols, opts.exec);

  const Eigen::Index nc = static_cast<Eigen::Index>(sys.layout.cells);
  const Eigen::Index nd = static_cast<Eigen::Index>(sys.layout.dirichlet_triangles);
  const Eigen::Index nv = static_cast<Eigen::Index>(sys.layout.neumann_vertices);
  sys.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys.matrix.leftCols(nc) = r.matrix;
  sys.matrix.middleCols(nc, nd) = -v.matrix;
  sys.matrix.rightCols(nv) = w.matrix;
  for (Eigen::Index i = 0; i < nc; ++i) sys.matrix(i, i) += 1.0;

  std::vector<Vec3> bpts;
  for (std::size_t i = sys.layout.cells; i < n; ++i) bpts.push_back(sys.rows[i].point);
  sys.kappa = kappa_values(sq, bpts, opts.jump, opts.exec);
  // Vertex rows and phi columns list the interior-S_N vertices in the same
  // order; the hat functions vanish at the S_D centroids.
  for (Eigen::Index k = 0; k < nv; ++k) {
    const Eigen::Index row = nc + nd + k;
    if (sys.rows[row].index != vcols[k].index) fail(ErrorKind::Partition, "vertex rows and columns are misaligned");
    sys.matrix(row, nc + nd + k) += 1.0 - sys.kappa[nd + k];
  }
  sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return sys;
}

std::vector<double> assemble_F0(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                const ExtensionPair& ext, const M12Options& opts) {
  const std::vector<RowMeta> rows = system_rows(meshes);
  std::vector<Vec3> pts;
  for (const RowMeta& r : rows) pts.push_back(r.point);
  std::vector<double> f0 = f0_terms(meshes, field, pc, ext, pts, opts);
  const std::size_t nc = meshes.volume.num_cells();
  std::vector<Vec3> bpts(pts.begin() + static_cast<std::ptrdiff_t>(nc), pts.end());
  const SurfaceQuadrature sq(meshes.surface, opts.quad.layer);
  const std::vector<double> kappa = kappa_values(sq, bpts, opts.jump, opts.exec);
  for (std::size_t i = nc; i < rows.size(); ++i) {
    f0[i] += kappa[i - nc] * value_at_row(meshes.surface, ext.Phi0, rows[i]);
  }
  return f0;
}

std::vector<double> F0_at(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                          const ExtensionPair& ext, const std::vector<Vec3>& points, const M12Options& opts) {
  return f0_terms(meshes, field, pc, ext, points, opts);
}

void set_rhs(M12System& system, const MeshPair& meshes, const std::vector<double>& f0, const ExtensionPair& ext) {
  if (f0.size() != system.layout.size()) fail(ErrorKind::Config, "F0 size does not match the system");
  system.rhs.resize(static_cast<Eigen::Index>(f0.size()));
  for (std::size_t i = 0; i < f0.size(); ++i) {
    double b = f0[i];
    if (i >= system.layout.cells) b -= value_at_row(meshes.surface, ext.Phi0, system.rows[i]);
    system.rhs[static_cast<Eigen::Index>(i)] = b;
  }
}

M12Solution solve_M12(const M12System& system, const MeshPair& meshes, const ExtensionPair& ext,
                      const SolveOptions& opts) {
  const Eigen::Index n = system.matrix.rows();
  if (n != system.matrix.cols() || n != system.rhs.size()) fail(ErrorKind::Solver, "system is not square");
  const Eigen::PartialPivLU<RowMatrix> lu(system.matrix);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    fail(ErrorKind::Solver, "M12 matrix is numerically singular (condition estimate " + std::to_string(1.0 / rcond) + ")");
  }
  const Eigen::VectorXd x = lu.solve(system.rhs);
  M12Solution sol;
  sol.condition = 1.0 / rcond;
  const double bn = system.rhs.norm();
  const double rn = (system.matrix * x - system.rhs).norm();
  sol.residual_norm = bn > 0.0 ? rn / bn : rn;
  if (!(sol.residual_norm <= 1e-10)) {
    fail(ErrorKind::Solver, "dense solve residual " + std::to_string(sol.residual_norm) + " above 1e-10 (condition " +
                                std::to_string(sol.condition) + ")");
  }

  if (opts.iterative_check) {
    const Eigen::MatrixXd a = system.matrix;
    Eigen::GMRES<Eigen::MatrixXd, Eigen::IdentityPreconditioner> gmres;
    gmres.set_restart(opts.restart);
    gmres.setTolerance(opts.tolerance);
    gmres.setMaxIterations(opts.max_iterations);
    gmres.compute(a);
    const Eigen::VectorXd xi = gmres.solve(system.rhs);
    if (gmres.info() != Eigen::Success) fail(ErrorKind::Solver, "GMRES did not reach the tolerance");
    sol.iterations = static_cast<int>(gmres.iterations());
    const double xn = x.norm();
    sol.iterative_difference = xn > 0.0 ? (xi - x).norm() / xn : (xi - x).norm();
  }

  const SurfaceMesh& sm = meshes.surface;
  const M12Layout& l = system.layout;
  sol.u.values.assign(x.data(), x.data() + l.cells);
  sol.psi.space = Space::TriangleConstant;
  sol.psi.support = Support::DirichletOnly;
  sol.psi.coeffs.assign(sm.num_triangles(), 0.0);
  sol.phi.space = Space::VertexLinear;
  sol.phi.support = Support::NeumannOnly;
  sol.phi.coeffs.assign(sm.num_vertices(), 0.0);
  for (std::size_t j = l.cells; j < l.size(); ++j) {
    const ColMeta& c = system.cols[j];
    (c.kind == ColMeta::Kind::Triangle ? sol.psi : sol.phi).coeffs[c.index] = x[static_cast<Eigen::Index>(j)];
  }
  sol.recovered_trace = ext.Phi0;
  for (std::size_t v = 0; v < sm.num_vertices(); ++v) sol.recovered_trace.coeffs[v] += sol.phi.coeffs[v];
  sol.recovered_conormal = ext.Psi0;
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) sol.recovered_conormal.coeffs[t] += sol.psi.coeffs[t];
  return sol;
}

std::vector<double> evaluate_solution(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                      const M12Solution& sol, const std::vector<Vec3>& points,
                                      const M12Options& opts) {
  const ExtensionPair full{sol.recovered_trace, sol.recovered_conormal};
  std::vector<double> out = f0_terms(meshes, field, pc, full, points, opts);
  const VolumeQuadrature vq(meshes.volume, opts.quad.volume, &field);
  const std::vector<double> r = op_R(vq, sol.u, points, opts.exec);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= r[i];
  return out;
}

double weighted_norm(const std::vector<double>& values, const VolumeMesh& mesh, NormOrder order) {
  if (values.size() != mesh.num_cells()) fail(ErrorKind::Config, "cell values do not match the volume mesh");
  double zero = 0.0, semi = 0.0;
  if (order != NormOrder::Semi1) {
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const VolumeCell& cell = mesh.cells[c];
      double m = 0.0;
      for (std::size_t k = 0; k < cell.nodes.size(); ++k) {
        const double w = weight(cell.nodes[k]);
        m += cell.weights[k] / (w * w);
      }
      zero += m * values[c] * values[c];
    }
  }
  if (order != NormOrder::Weighted0) {
    for (const CellAdjacency& f : cell_adjacency(mesh)) {
      const double d = values[f.a] - values[f.b];
      semi += f.area / f.distance * d * d;
    }
  }
  return std::sqrt(zero + semi);
}

std::vector<Vec3> default_probes() {
  return {{0, 0, 2.5},     {1.5, 0, 0},    {0, -2, 0.5},  {-1.2, 1.2, -1.2},
          {0.9, 0.6, -1.8}, {2.0, 1.0, 1.0}, {0, 0, -2.5}, {-1.6, -1.6, 0.3}};
}

EquivalenceReport equivalence_residuals(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
                                        const M12Solution& sol, const std::vector<Vec3>& probes,
                                        const M12Options& opts) {
  if (!pc.exact) fail(ErrorKind::Config, "case '" + pc.name + "' has no exact solution");
  const AnalyticField& u = *pc.exact;
  const SurfaceMesh& sm = meshes.surface;
  const VolumeMesh& vm = meshes.volume;
  EquivalenceReport rep;
  for (std::size_t v = 0; v < sm.num_vertices(); ++v) {
    const double e = u.u(sm.vertices[v]);
    rep.trace_max = std::max(rep.trace_max, std::abs(sol.recovered_trace.coeffs[v] - e));
    rep.trace_scale = std::max(rep.trace_scale, std::abs(e));
    if (sm.vertex_class[v] != VertexClass::InteriorN) {
      rep.phi_on_dirichlet = std::max(rep.phi_on_dirichlet, std::abs(sol.phi.coeffs[v]));
    }
  }
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) {
    const Vec3& c = sm.centroids[t];
    const double e = field.a(c) * dot(u.grad(c), sm.normals[t]);
    rep.conormal_max = std::max(rep.conormal_max, std::abs(sol.recovered_conormal.coeffs[t] - e));
    rep.conormal_scale = std::max(rep.conormal_scale, std::abs(e));
    if (sm.part_label[t] == Part::N) rep.psi_on_neumann = std::max(rep.psi_on_neumann, std::abs(sol.psi.coeffs[t]));
  }
  rep.trace_rel = rep.trace_scale > 0.0 ? rep.trace_max / rep.trace_scale : rep.trace_max;
  rep.conormal_rel = rep.conormal_scale > 0.0 ? rep.conormal_max / rep.conormal_scale : rep.conormal_max;

  std::vector<double> err(vm.num_cells()), ex(vm.num_cells());
  for (std::size_t c = 0; c < vm.num_cells(); ++c) {
    ex[c] = u.u(vm.cells[c].center);
    err[c] = sol.u.values[c] - ex[c];
  }
  const double en = weighted_norm(err, vm, NormOrder::Full), xn = weighted_norm(ex, vm, NormOrder::Full);
  rep.interior_weighted = xn > 0.0 ? en / xn : en;

  rep.probes = probes;
  rep.probe_values = evaluate_solution(meshes, field, pc, sol, probes, opts);
  double pmax = 0.0, pscale = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    rep.probe_exact.push_back(u.u(probes[i]));
    pmax = std::max(pmax, std::abs(rep.probe_values[i] - rep.probe_exact[i]));
    pscale = std::max(pscale, std::abs(rep.probe_exact[i]));
  }
  rep.probe_rel = pscale > 0.0 ? pmax / pscale : pmax;
  return rep;
}

M12Run run_M12(const MeshPair& meshes, const CoefficientField& field, const ProblemCase& pc,
               const std::vector<Vec3>& probes, const M12Options& opts, const SolveOptions& sopts) {
  M12Run run;
  run.ext = build_extensions(meshes.surface, pc.dirichlet, pc.neumann);
  M12System sys = assemble_M12(meshes, field, opts);
  set_rhs(sys, meshes, assemble_F0(meshes, field, pc, run.ext, opts), run.ext);
  run.solution = solve_M12(sys, meshes, run.ext, sopts);
  if (pc.exact) run.report = equivalence_residuals(meshes, field, pc, run.solution, probes, opts);
  return run;
}

}  // namespace bdie
