#include "bdie/parametrix_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bdie/error.hpp"

namespace bdie {

double kernel_P(const CoefficientField& field, const Vec3& x, const Vec3& y) {
  const double a = field.a(x);
  if (!(a > 0.0)) fail(ErrorKind::CoefficientViolation, "coefficient is not positive");
  return fund_solution(x, y) / a;
}

double kernel_R(const CoefficientField& field, const Vec3& x, const Vec3& y) {
  const double p = fund_solution(x, y);
  const Vec3 gp = grad_fund_solution(x, y, Wrt::X);
  return -(eval_laplacian_ln_a(field, x) * p + dot(eval_grad_ln_a(field, x), gp));
}

void check_dense_cap(std::size_t cells, std::size_t triangles) {
  if (cells > kMaxDenseCells) {
    fail(ErrorKind::Resource, "dense assembly refused: " + std::to_string(cells) + " cells exceed the cap of " +
                                  std::to_string(kMaxDenseCells));
  }
  if (triangles > kMaxDenseTriangles) {
    fail(ErrorKind::Resource, "dense assembly refused: " + std::to_string(triangles) +
                                  " triangles exceed the cap of " + std::to_string(kMaxDenseTriangles));
  }
}

ParametrixKernelSet::ParametrixKernelSet(const SurfaceMesh& surface, const VolumeMesh& volume,
                                         const CoefficientField& field, const QuadratureOptions& opts)
    : field_(&field),
      surface_(surface, opts.layer, &field),
      volume_(volume, opts.volume, &field) {}

// ---------------------------------------------------------------------------

std::vector<double> op_V(const SurfaceQuadrature& quad, const SurfaceFunction& rho, const std::vector<Vec3>& targets,
                         const Exec& exec) {
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    double s = 0.0;
    quad.visit(targets[i], scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff& c, double g, double) {
      s += g * (rho(t, n.bary, n.x) * c.inv_a);
    });
    out[i] = s;
  });
  return out;
}

std::vector<double> op_W(const SurfaceQuadrature& quad, const SurfaceFunction& rho, const std::vector<Vec3>& targets,
                         const Exec& exec) {
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    double sw = 0.0, sv = 0.0;
    quad.visit(targets[i], scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff& c, double g, double k) {
      const double r = rho(t, n.bary, n.x);
      if (k != 0.0) sw += k * r;
      sv += g * (r * c.dn_ln_a);
    });
    out[i] = sw - sv;
  });
  return out;
}

std::vector<double> dv_V(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                         const std::vector<Vec3>& collocation, const Exec& exec) {
  return op_V(quad, rho, collocation, exec);
}

std::vector<double> dv_W(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                         const std::vector<Vec3>& collocation, const Exec& exec) {
  return op_W(quad, rho, collocation, exec);
}

namespace {

void check_density(const VolumeMesh& m, const DomainDensity& f) {
  if (f.values.size() != m.num_cells() && !f.pointwise) {
    fail(ErrorKind::Config, "domain density size does not match the volume mesh");
  }
}

}  // namespace

std::vector<double> op_P(const VolumeQuadrature& quad, const DomainDensity& f, const std::vector<Vec3>& targets,
                         const Exec& exec) {
  const VolumeMesh& m = quad.mesh();
  check_density(m, f);
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    VolumeQuadrature::Scratch scratch;
    const Vec3& y = targets[i];
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      double cs = 0.0;
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff& k) {
        cs += w * (f.at(c, x) * k.inv_a) / (kFourPi * norm(x - y));
      });
      s -= cs;
    }
    out[i] = s;
  });
  return out;
}

namespace {

// R(x, y) from cached samples.
inline double remainder(const Vec3& x, const Vec3& y, const VolumeCoeff& k) {
  const Vec3 d = x - y;
  const double r2 = norm2(d), r = std::sqrt(r2);
  const double p = -1.0 / (kFourPi * r);
  return -(k.lap_ln_a * p + dot(k.grad_ln_a, d) / (kFourPi * r2 * r));
}

}  // namespace

std::vector<double> op_R(const VolumeQuadrature& quad, const DomainDensity& u, const std::vector<Vec3>& targets,
                         const Exec& exec) {
  const VolumeMesh& m = quad.mesh();
  check_density(m, u);
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    VolumeQuadrature::Scratch scratch;
    const Vec3& y = targets[i];
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      double cs = 0.0;
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff& k) {
        cs += w * u.at(c, x) * remainder(x, y, k);
      });
      s += cs;
    }
    out[i] = s;
  });
  return out;
}

std::vector<double> op_Wprime_offset(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                                     const std::vector<Vec3>& points, const std::vector<Vec3>& normals, double offset,
                                     const Exec& exec) {
  if (!(offset > 10.0 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorKind::Config, "normal-derivative offset must exceed 10 machine epsilons");
  }
  if (points.size() != normals.size()) fail(ErrorKind::Config, "one normal per boundary point is required");
  std::vector<double> out(points.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(points.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    const Vec3& n = normals[i];
    const Vec3 y = points[i] - n * offset;
    double s = 0.0;
    quad.visit(y, scratch, [&](std::size_t t, const LayerNode& node, const SurfaceCoeff& c, double g, double) {
      const Vec3 d = node.x - y;
      s += g * dot(n, d) / norm2(d) * (rho(t, node.bary, node.x) * c.inv_a);
    });
    out[i] = (quad.field() ? quad.field()->a(y) : 1.0) * s;
  });
  return out;
}

std::vector<double> op_Lhat_offset(const SurfaceQuadrature& quad, const SurfaceFunction& rho,
                                   const std::vector<Vec3>& points, const std::vector<Vec3>& normals, double offset,
                                   const Exec& exec) {
  if (!(offset > 10.0 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorKind::Config, "normal-derivative offset must exceed 10 machine epsilons");
  }
  if (points.size() != normals.size()) fail(ErrorKind::Config, "one normal per boundary point is required");
  std::vector<double> out(points.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(points.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    auto w_delta = [&](const Vec3& y) {
      double s = 0.0;
      quad.visit(y, scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff&, double, double k) {
        if (k != 0.0) s += k * rho(t, n.bary, n.x);
      });
      return s;
    };
    auto v_part = [&](const Vec3& y) {
      double s = 0.0;
      quad.visit(y, scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff& c, double g, double) {
        s += g * (rho(t, n.bary, n.x) * c.dn_ln_a);
      });
      return s;
    };
    const Vec3& n = normals[i];
    const double dw = normal_derivative_delta(w_delta, points[i], n, offset);
    const double dv = normal_derivative_delta(v_part, points[i], n, offset);
    const double a = quad.field() ? quad.field()->a(points[i] - n * offset) : 1.0;
    out[i] = a * dw - a * dv;
  });
  return out;
}

std::vector<double> op_V(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& targets, const LayerOptions& opts) {
  return op_V(SurfaceQuadrature(mesh, opts, &field), as_function(mesh, rho), targets);
}

std::vector<double> op_W(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& targets, const LayerOptions& opts) {
  return op_W(SurfaceQuadrature(mesh, opts, &field), as_function(mesh, rho), targets);
}

std::vector<double> dv_V(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& collocation, const LayerOptions& opts) {
  return op_V(mesh, field, rho, collocation, opts);
}

std::vector<double> dv_W(const SurfaceMesh& mesh, const CoefficientField& field, const BoundaryDensity& rho,
                         const std::vector<Vec3>& collocation, const LayerOptions& opts) {
  return op_W(mesh, field, rho, collocation, opts);
}

std::vector<double> op_P(const VolumeMesh& mesh, const CoefficientField& field, const DomainDensity& f,
                         const std::vector<Vec3>& targets, const VolumeRuleOptions& opts) {
  return op_P(VolumeQuadrature(mesh, opts, &field), f, targets);
}

std::vector<double> op_R(const VolumeMesh& mesh, const CoefficientField& field, const DomainDensity& u,
                         const std::vector<Vec3>& targets, const VolumeRuleOptions& opts) {
  return op_R(VolumeQuadrature(mesh, opts, &field), u, targets);
}

// ---------------------------------------------------------------------------

std::vector<RowMeta> cell_rows(const VolumeMesh& mesh) {
  std::vector<RowMeta> rows(mesh.num_cells());
  for (std::size_t c = 0; c < rows.size(); ++c) rows[c] = {RowMeta::Kind::Cell, static_cast<int>(c), mesh.cells[c].center};
  return rows;
}

std::vector<RowMeta> boundary_rows(const SurfaceMesh& mesh) {
  std::vector<RowMeta> rows;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.part_label[t] == Part::D) rows.push_back({RowMeta::Kind::Centroid, static_cast<int>(t), mesh.centroids[t]});
  }
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertex_class[v] == VertexClass::InteriorN) {
      rows.push_back({RowMeta::Kind::Vertex, static_cast<int>(v), mesh.vertices[v]});
    }
  }
  return rows;
}

std::vector<ColMeta> cell_columns(const VolumeMesh& mesh) {
  std::vector<ColMeta> cols(mesh.num_cells());
  for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = {ColMeta::Kind::Cell, static_cast<int>(c)};
  return cols;
}

std::vector<ColMeta> triangle_columns(const SurfaceMesh& mesh, Support support) {
  std::vector<ColMeta> cols;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const bool in = support == Support::All || (support == Support::DirichletOnly && mesh.part_label[t] == Part::D) ||
                    (support == Support::NeumannOnly && mesh.part_label[t] == Part::N);
    if (in) cols.push_back({ColMeta::Kind::Triangle, static_cast<int>(t)});
  }
  return cols;
}

std::vector<ColMeta> vertex_columns(const SurfaceMesh& mesh, Support support) {
  std::vector<ColMeta> cols;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const VertexClass c = mesh.vertex_class[v];
    const bool in = support == Support::All || (support == Support::NeumannOnly && c == VertexClass::InteriorN) ||
                    (support == Support::DirichletOnly && c != VertexClass::InteriorN);
    if (in) cols.push_back({ColMeta::Kind::Vertex, static_cast<int>(v)});
  }
  return cols;
}

namespace {

std::vector<int> column_lookup(const std::vector<ColMeta>& cols, std::size_t n, ColMeta::Kind kind) {
  std::vector<int> of(n, -1);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].kind != kind || cols[j].index < 0 || static_cast<std::size_t>(cols[j].index) >= n) {
      fail(ErrorKind::Config, "column metadata does not match the mesh");
    }
    of[cols[j].index] = static_cast<int>(j);
  }
  return of;
}

template <class Kernel>
OperatorBlock volume_block(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows, const Exec& exec,
                           Kernel kernel) {
  const VolumeMesh& m = quad.mesh();
  check_dense_cap(m.num_cells(), 0);
  OperatorBlock b;
  b.rows = rows;
  b.cols = cell_columns(m);
  b.matrix = RowMatrix::Zero(rows.size(), m.num_cells());
  parallel_for(static_cast<std::ptrdiff_t>(rows.size()), exec, [&](std::ptrdiff_t i) {
    VolumeQuadrature::Scratch scratch;
    const Vec3& y = rows[i].point;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      double cs = 0.0;
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff& k) { cs += w * kernel(x, y, k); });
      b.matrix(i, c) = cs;
    }
  });
  return b;
}

}  // namespace

OperatorBlock assemble_R_block(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows, const Exec& exec) {
  return volume_block(quad, rows, exec, [](const Vec3& x, const Vec3& y, const VolumeCoeff& k) {
    return remainder(x, y, k);
  });
}

OperatorBlock assemble_P_block(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows, const Exec& exec) {
  return volume_block(quad, rows, exec, [](const Vec3& x, const Vec3& y, const VolumeCoeff& k) {
    return -k.inv_a / (kFourPi * norm(x - y));
  });
}

OperatorBlock assemble_V_block(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                               const std::vector<ColMeta>& cols, const Exec& exec) {
  const SurfaceMesh& m = quad.mesh();
  check_dense_cap(0, m.num_triangles());
  const std::vector<int> of = column_lookup(cols, m.num_triangles(), ColMeta::Kind::Triangle);
  OperatorBlock b;
  b.rows = rows;
  b.cols = cols;
  b.matrix = RowMatrix::Zero(rows.size(), cols.size());
  parallel_for(static_cast<std::ptrdiff_t>(rows.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    quad.visit(rows[i].point, scratch, [&](std::size_t t, const LayerNode&, const SurfaceCoeff& c, double g, double) {
      const int j = of[t];
      if (j >= 0) b.matrix(i, j) += g * c.inv_a;
    });
  });
  return b;
}

OperatorBlock assemble_W_block(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                               const std::vector<ColMeta>& cols, const Exec& exec) {
  const SurfaceMesh& m = quad.mesh();
  check_dense_cap(0, m.num_triangles());
  const std::vector<int> of = column_lookup(cols, m.num_vertices(), ColMeta::Kind::Vertex);
  OperatorBlock b;
  b.rows = rows;
  b.cols = cols;
  b.matrix = RowMatrix::Zero(rows.size(), cols.size());
  parallel_for(static_cast<std::ptrdiff_t>(rows.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    std::vector<double> wpart(cols.size(), 0.0), vpart(cols.size(), 0.0);
    quad.visit(rows[i].point, scratch,
               [&](std::size_t t, const LayerNode& n, const SurfaceCoeff& c, double g, double k) {
                 const auto& tri = m.triangles[t];
                 for (int v = 0; v < 3; ++v) {
                   const int j = of[tri[v]];
                   if (j < 0) continue;
                   if (k != 0.0) wpart[j] += k * n.bary[v];
                   vpart[j] += g * (n.bary[v] * c.dn_ln_a);
                 }
               });
    for (std::size_t j = 0; j < cols.size(); ++j) b.matrix(i, j) = wpart[j] - vpart[j];
  });
  return b;
}

DecayReport remainder_decay(const OperatorBlock& r_block, const VolumeMesh& mesh, double radius) {
  DecayReport rep;
  const auto& a = r_block.matrix;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const bool far_row = norm(r_block.rows[i].point) >= radius;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double e = std::abs(a(i, j));
      rep.max_entry = std::max(rep.max_entry, e);
      if (far_row) rep.max_far_rows = std::max(rep.max_far_rows, e);
      if (norm(mesh.cells[r_block.cols[j].index].center) >= radius) rep.max_far_columns = std::max(rep.max_far_columns, e);
    }
  }
  return rep;
}

}  // namespace bdie
