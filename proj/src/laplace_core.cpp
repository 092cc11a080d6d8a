#include "bdie/laplace_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdie/error.hpp"

namespace bdie {

double fund_solution(const Vec3& x, const Vec3& y) {
  const double r = norm(x - y);
  if (r == 0.0) fail(ErrorKind::SingularEvaluation, "fundamental solution evaluated at coincident points");
  return -1.0 / (kFourPi * r);
}

Vec3 grad_fund_solution(const Vec3& x, const Vec3& y, Wrt wrt) {
  const Vec3 d = x - y;
  const double r = norm(d);
  if (r == 0.0) fail(ErrorKind::SingularEvaluation, "fundamental solution gradient at coincident points");
  const Vec3 gx = d / (kFourPi * r * r * r);
  return wrt == Wrt::X ? gx : -gx;
}

BoundaryDensity BoundaryDensity::constant(const SurfaceMesh& mesh, Space space, double value, Support support) {
  BoundaryDensity d;
  d.space = space;
  d.support = support;
  if (space == Space::TriangleConstant) {
    d.coeffs.assign(mesh.num_triangles(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const bool in = support == Support::All || (support == Support::DirichletOnly && mesh.part_label[t] == Part::D) ||
                      (support == Support::NeumannOnly && mesh.part_label[t] == Part::N);
      if (in) d.coeffs[t] = value;
    }
  } else {
    d.coeffs.assign(mesh.num_vertices(), 0.0);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      const VertexClass c = mesh.vertex_class[v];
      const bool in = support == Support::All || (support == Support::DirichletOnly && c != VertexClass::InteriorN) ||
                      (support == Support::NeumannOnly && c == VertexClass::InteriorN);
      if (in) d.coeffs[v] = value;
    }
  }
  return d;
}

void BoundaryDensity::validate(const SurfaceMesh& mesh) const {
  const std::size_t expect = space == Space::TriangleConstant ? mesh.num_triangles() : mesh.num_vertices();
  if (coeffs.size() != expect) fail(ErrorKind::Config, "boundary density size does not match the mesh");
  if (support == Support::All) return;
  if (space == Space::TriangleConstant) {
    const Part keep = support == Support::DirichletOnly ? Part::D : Part::N;
    for (std::size_t t = 0; t < coeffs.size(); ++t) {
      if (mesh.part_label[t] != keep && coeffs[t] != 0.0) fail(ErrorKind::Config, "density nonzero outside its support");
    }
  } else {
    for (std::size_t v = 0; v < coeffs.size(); ++v) {
      const VertexClass c = mesh.vertex_class[v];
      const bool out = support == Support::NeumannOnly ? c != VertexClass::InteriorN : c == VertexClass::InteriorN;
      if (out && coeffs[v] != 0.0) fail(ErrorKind::Config, "density nonzero outside its support");
    }
  }
}

double BoundaryDensity::at(const SurfaceMesh& mesh, std::size_t tri, const std::array<double, 3>& bary) const {
  if (space == Space::TriangleConstant) return coeffs[tri];
  const auto& t = mesh.triangles[tri];
  return bary[0] * coeffs[t[0]] + bary[1] * coeffs[t[1]] + bary[2] * coeffs[t[2]];
}

DomainDensity DomainDensity::constant(const VolumeMesh& mesh, double value) {
  DomainDensity d;
  d.values.assign(mesh.num_cells(), value);
  return d;
}

DomainDensity DomainDensity::from_function(const VolumeMesh& mesh, std::function<double(const Vec3&)> f) {
  DomainDensity d;
  d.values.reserve(mesh.num_cells());
  for (const auto& c : mesh.cells) d.values.push_back(f(c.center));
  d.pointwise = std::move(f);
  return d;
}

SurfaceFunction as_function(const SurfaceMesh& mesh, const BoundaryDensity& density) {
  density.validate(mesh);
  return [&mesh, density](std::size_t tri, const std::array<double, 3>& bary, const Vec3&) {
    return density.at(mesh, tri, bary);
  };
}

// ---------------------------------------------------------------------------

SurfaceQuadrature::SurfaceQuadrature(const SurfaceMesh& mesh, const LayerOptions& opts, const CoefficientField* field)
    : mesh_(&mesh), opts_(opts), field_(field) {
  const std::size_t nt = mesh.num_triangles();
  diam_.resize(nt);
  far_offset_.assign(nt + 1, 0);
  const Vec3 far_away{1e30, 1e30, 1e30};
  for (std::size_t t = 0; t < nt; ++t) {
    diam_[t] = mesh.diameter(t);
    far_offset_[t] = far_nodes_.size();
    layer_rule(far_away, mesh.corners(t), opts_, far_nodes_);
  }
  far_offset_[nt] = far_nodes_.size();
  far_coeff_.resize(far_nodes_.size());
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t k = far_offset_[t]; k < far_offset_[t + 1]; ++k) far_coeff_[k] = sample(t, far_nodes_[k].x);
  }
}

SurfaceCoeff SurfaceQuadrature::sample(std::size_t tri, const Vec3& x) const {
  if (!field_) return {};
  const double a = field_->a(x);
  return {1.0 / a, dot(mesh_->normals[tri], field_->grad_a(x)) / a};
}

VolumeQuadrature::VolumeQuadrature(const VolumeMesh& mesh, const VolumeRuleOptions& opts,
                                   const CoefficientField* field)
    : mesh_(&mesh), opts_(opts), field_(field) {
  const std::size_t nc = mesh.num_cells();
  radius_.resize(nc);
  base_offset_.assign(nc + 1, 0);
  fine_offset_.assign(nc + 1, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    radius_[c] = mesh.bounding_radius(c);
    base_offset_[c] = base_x_.size();
    base_x_.insert(base_x_.end(), mesh.cells[c].nodes.begin(), mesh.cells[c].nodes.end());
    base_w_.insert(base_w_.end(), mesh.cells[c].weights.begin(), mesh.cells[c].weights.end());
    fine_offset_[c] = fine_x_.size();
    cell_rule(mesh, c, opts_.refined, fine_x_, fine_w_);
  }
  base_offset_[nc] = base_x_.size();
  fine_offset_[nc] = fine_x_.size();
  base_c_.resize(base_x_.size());
  fine_c_.resize(fine_x_.size());
  for (std::size_t k = 0; k < base_x_.size(); ++k) base_c_[k] = sample(base_x_[k]);
  for (std::size_t k = 0; k < fine_x_.size(); ++k) fine_c_[k] = sample(fine_x_[k]);
}

double SurfaceQuadrature::cache_deviation() const {
  double dev = 0.0;
  for (std::size_t t = 0; t + 1 < far_offset_.size(); ++t) {
    for (std::size_t k = far_offset_[t]; k < far_offset_[t + 1]; ++k) {
      const SurfaceCoeff c = sample(t, far_nodes_[k].x);
      dev = std::max({dev, std::abs(c.inv_a - far_coeff_[k].inv_a), std::abs(c.dn_ln_a - far_coeff_[k].dn_ln_a)});
    }
  }
  return dev;
}

namespace {

double coeff_diff(const VolumeCoeff& a, const VolumeCoeff& b) {
  return std::max({std::abs(a.inv_a - b.inv_a), norm(a.grad_ln_a - b.grad_ln_a), std::abs(a.lap_ln_a - b.lap_ln_a)});
}

}  // namespace

double VolumeQuadrature::cache_deviation() const {
  double dev = 0.0;
  for (std::size_t k = 0; k < base_x_.size(); ++k) dev = std::max(dev, coeff_diff(sample(base_x_[k]), base_c_[k]));
  for (std::size_t k = 0; k < fine_x_.size(); ++k) dev = std::max(dev, coeff_diff(sample(fine_x_[k]), fine_c_[k]));
  return dev;
}

VolumeCoeff VolumeQuadrature::sample(const Vec3& x) const {
  if (!field_) return {};
  const CoefficientSample s = sample_coefficient(*field_, x);
  return {1.0 / s.a, s.grad_ln_a, s.laplacian_ln_a};
}

VolumeRegime VolumeQuadrature::regime(const Vec3& y, std::size_t cell) const {
  const double q = norm(y - mesh_->cells[cell].center) / radius_[cell];
  if (q >= opts_.far_ratio) return VolumeRegime::Far;
  if (q >= opts_.mid_ratio) return VolumeRegime::Mid;
  return VolumeRegime::Near;
}

// ---------------------------------------------------------------------------

std::vector<double> single_layer_V_delta(const SurfaceQuadrature& quad, const SurfaceFunction& density,
                                         const std::vector<Vec3>& targets, const Exec& exec) {
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    double s = 0.0;
    quad.visit(targets[i], scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff&, double g, double) {
      s += g * density(t, n.bary, n.x);
    });
    out[i] = s;
  });
  return out;
}

std::vector<double> single_layer_V_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& targets, const LayerOptions& opts,
                                         const Exec& exec) {
  return single_layer_V_delta(SurfaceQuadrature(mesh, opts), as_function(mesh, density), targets, exec);
}

std::vector<double> double_layer_W_delta(const SurfaceQuadrature& quad, const SurfaceFunction& density,
                                         const std::vector<Vec3>& targets, const Exec& exec) {
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    std::vector<LayerNode> scratch;
    double s = 0.0;
    quad.visit(targets[i], scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff&, double, double k) {
      if (k != 0.0) s += k * density(t, n.bary, n.x);
    });
    out[i] = s;
  });
  return out;
}

std::vector<double> double_layer_W_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& targets, const LayerOptions& opts,
                                         const Exec& exec) {
  return double_layer_W_delta(SurfaceQuadrature(mesh, opts), as_function(mesh, density), targets, exec);
}

std::vector<double> direct_value_W_delta(const SurfaceMesh& mesh, const BoundaryDensity& density,
                                         const std::vector<Vec3>& collocation, const LayerOptions& opts,
                                         const Exec& exec) {
  return double_layer_W_delta(mesh, density, collocation, opts, exec);
}

std::vector<double> newton_potential_delta(const VolumeQuadrature& quad, const DomainDensity& f,
                                           const std::vector<Vec3>& targets, const Exec& exec) {
  const VolumeMesh& m = quad.mesh();
  if (f.values.size() != m.num_cells() && !f.pointwise) {
    fail(ErrorKind::Config, "domain density size does not match the volume mesh");
  }
  std::vector<double> out(targets.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(targets.size()), exec, [&](std::ptrdiff_t i) {
    VolumeQuadrature::Scratch scratch;
    const Vec3& y = targets[i];
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      double cs = 0.0;
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff&) {
        cs += w * f.at(c, x) / (kFourPi * norm(x - y));
      });
      s -= cs;
    }
    out[i] = s;
  });
  return out;
}

std::vector<double> newton_potential_delta(const VolumeMesh& mesh, const DomainDensity& f,
                                           const std::vector<Vec3>& targets, const VolumeRuleOptions& opts,
                                           const Exec& exec) {
  return newton_potential_delta(VolumeQuadrature(mesh, opts), f, targets, exec);
}

double normal_derivative_delta(const std::function<double(const Vec3&)>& potential, const Vec3& y, const Vec3& n,
                               double offset) {
  if (!(offset > 10.0 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorKind::Config, "normal-derivative offset must exceed 10 machine epsilons");
  }
  const double f1 = potential(y - n * offset);
  const double f2 = potential(y - n * (2.0 * offset));
  const double f3 = potential(y - n * (3.0 * offset));
  // derivative along -n at the first point, then flip to the n direction
  return (3.0 * f1 - 4.0 * f2 + f3) / (2.0 * offset);
}

std::vector<double> jump_coefficient(const SurfaceQuadrature& quad, const std::vector<Vec3>& points, const Exec& exec) {
  const SurfaceFunction one = [](std::size_t, const std::array<double, 3>&, const Vec3&) { return 1.0; };
  return double_layer_W_delta(quad, one, points, exec);
}

}  // namespace bdie
