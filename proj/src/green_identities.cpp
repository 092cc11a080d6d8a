#include "bdie/green_identities.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bdie/error.hpp"

namespace bdie {

AnalyticField AnalyticField::point_source(const Vec3& center) {
  AnalyticField f;
  f.name = "point_source";
  f.u = [center](const Vec3& x) { return 1.0 / (kFourPi * norm(x - center)); };
  f.grad = [center](const Vec3& x) {
    const Vec3 d = x - center;
    const double r = norm(d);
    return d * (-1.0 / (kFourPi * r * r * r));
  };
  f.laplacian = [](const Vec3&) { return 0.0; };
  return f;
}

AnalyticField AnalyticField::constant(double c) {
  AnalyticField f;
  f.name = "constant";
  f.u = [c](const Vec3&) { return c; };
  f.grad = [](const Vec3&) { return Vec3{0, 0, 0}; };
  f.laplacian = [](const Vec3&) { return 0.0; };
  return f;
}

namespace {

// Integral of g over [lo, hi] by 64-point Gauss-Legendre (exact for the
// polynomial integrands used below).
template <class G>
double integrate_1d(G g, double lo, double hi) {
  if (hi <= lo) return 0.0;
  const Rule1D& r = gauss_legendre(64);
  double s = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * g(lo + (hi - lo) * r.nodes[k]);
  return s * (hi - lo);
}

}  // namespace

AnalyticField AnalyticField::radial_bump_potential(double r0, double w) {
  if (!(w > 0.0) || r0 - w < 0.0) fail(ErrorKind::Config, "bump must have positive width and lie at r >= 0");
  auto f = [r0, w](double r) {
    const double t = (r - r0) / w;
    return std::abs(t) < 1.0 ? (1.0 - t * t) * (1.0 - t * t) : 0.0;
  };
  const double lo = r0 - w, hi = r0 + w;
  // M(r) = int_0^r f s^2 ds, N(r) = int_r^inf f s ds; F = -(M / r + N).
  auto m = [=](double r) { return integrate_1d([&](double s) { return f(s) * s * s; }, lo, std::min(r, hi)); };
  auto n = [=](double r) { return integrate_1d([&](double s) { return f(s) * s; }, std::max(r, lo), hi); };
  AnalyticField a;
  a.name = "radial_bump_potential";
  a.u = [=](const Vec3& x) {
    const double r = norm(x);
    return r > 0.0 ? -(m(r) / r + n(r)) : -n(0.0);
  };
  a.grad = [=](const Vec3& x) {
    const double r = norm(x);
    if (r == 0.0) return Vec3{0, 0, 0};
    return x * (m(r) / (r * r * r));
  };
  a.laplacian = [=](const Vec3& x) { return f(norm(x)); };
  return a;
}

AnalyticField AnalyticField::scaled(double s) const {
  AnalyticField f;
  f.name = name;
  auto u0 = u;
  auto g0 = grad;
  auto l0 = laplacian;
  f.u = [u0, s](const Vec3& x) { return s * u0(x); };
  f.grad = [g0, s](const Vec3& x) { return g0(x) * s; };
  f.laplacian = [l0, s](const Vec3& x) { return s * l0(x); };
  return f;
}

double AnalyticField::apply_operator(const CoefficientField& field, const Vec3& x) const {
  return dot(field.grad_a(x), grad(x)) + field.a(x) * laplacian(x);
}

void ResidualReport::finish() {
  max_abs = 0.0;
  for (double r : residuals) max_abs = std::max(max_abs, std::abs(r));
  rel_to_scale = scale > 0.0 ? max_abs / scale : 0.0;
}

std::vector<double> conormal_trace(const CoefficientField& field, const AnalyticField& u,
                                   const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
  if (points.size() != normals.size()) fail(ErrorKind::Config, "one normal per boundary point is required");
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = field.a(points[i]) * dot(u.grad(points[i]), normals[i]);
  return out;
}

SurfaceFunction trace_function(const AnalyticField& u) {
  auto f = u.u;
  return [f](std::size_t, const std::array<double, 3>&, const Vec3& x) { return f(x); };
}

SurfaceFunction conormal_function(const SurfaceMesh& mesh, const CoefficientField& field, const AnalyticField& u) {
  auto g = u.grad;
  return [&mesh, &field, g](std::size_t t, const std::array<double, 3>&, const Vec3& x) {
    return field.a(x) * dot(g(x), mesh.normals[t]);
  };
}

void check_tail(const std::function<double(const Vec3&)>& g, double radius, double scale, double tol, int samples) {
  double sup = 0.0;
  for (const Vec3& d : fibonacci_directions(samples)) sup = std::max(sup, std::abs(g(d * radius)));
  const double tail = sup * radius * radius * radius;
  if (tail > tol * scale) {
    fail(ErrorKind::TruncationUnsound, "integrand does not decay within the truncation radius (tail estimate " +
                                           std::to_string(tail) + ", allowed " + std::to_string(tol * scale) + ")");
  }
}

std::vector<Vec3> default_test_points(const MeshPair& meshes, std::size_t target_count) {
  const VolumeMesh& vm = meshes.volume;
  const std::size_t nsec = vm.sectors.size();
  std::vector<int> layers;
  for (int k = 1; k + 1 < vm.n_radial; k += 2) layers.push_back(k);
  if (layers.empty()) layers.push_back(0);
  const std::size_t per_layer = std::max<std::size_t>(1, target_count / layers.size());
  const std::size_t stride = std::max<std::size_t>(1, nsec / per_layer);
  std::vector<Vec3> pts;
  for (int k : layers) {
    for (std::size_t s = (k * 7) % stride; s < nsec; s += stride) pts.push_back(vm.cells[vm.cell_index(k, s)].center);
  }
  return pts;
}

namespace {

double distance_to_surface(const SurfaceMesh& m, const Vec3& y) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.num_triangles(); ++t) d = std::min(d, point_triangle_distance(y, m.corners(t)));
  return d;
}

Vec3 vertex_normal(const SurfaceMesh& m, const std::vector<int>& tris) {
  Vec3 n{0, 0, 0};
  for (int t : tris) n += m.normals[t] * m.areas[t];
  return normalized(n);
}

std::vector<double> jump_values(const SurfaceQuadrature& q, const std::vector<Vec3>& pts, JumpMode mode,
                                const Exec& exec) {
  if (mode == JumpMode::Half) return std::vector<double>(pts.size(), 0.5);
  return jump_coefficient(q, pts, exec);
}

}  // namespace

ResidualReport second_green_residual(const CoefficientField& field, const AnalyticField& u, const AnalyticField& v,
                                     const MeshPair& meshes, const IdentityOptions& opts) {
  const VolumeMesh& vm = meshes.volume;
  const SurfaceMesh& sm = meshes.surface;
  auto integrand = [&](const Vec3& x) {
    return v.u(x) * u.apply_operator(field, x) - u.u(x) * v.apply_operator(field, x);
  };
  // Per cell: signed integral and the integral of |v A u| + |u A v|.
  std::vector<double> cell_sums(vm.num_cells(), 0.0), cell_abs(vm.num_cells(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(vm.num_cells()), opts.exec, [&](std::ptrdiff_t c) {
    std::vector<Vec3> x;
    std::vector<double> w;
    cell_rule(vm, c, opts.quad.volume.refined, x, w);
    double s = 0.0, m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double p = v.u(x[k]) * u.apply_operator(field, x[k]);
      const double q = u.u(x[k]) * v.apply_operator(field, x[k]);
      s += w[k] * (p - q);
      m += w[k] * (std::abs(p) + std::abs(q));
    }
    cell_sums[c] = s;
    cell_abs[c] = m;
  });
  double volume_side = 0.0, volume_mag = 0.0;
  for (std::size_t c = 0; c < cell_sums.size(); ++c) {
    volume_side += cell_sums[c];
    volume_mag += cell_abs[c];
  }

  const QuadratureRule& rule = gauss_triangle(6);
  double boundary_side = 0.0, boundary_mag = 0.0;
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) {
    const Triangle tri = sm.corners(t);
    const Vec3& n = sm.normals[t];
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      const double xi = rule.nodes[k][0], eta = rule.nodes[k][1];
      const Vec3 x = tri[0] * (1.0 - xi - eta) + tri[1] * xi + tri[2] * eta;
      const double a = field.a(x);
      const double p = v.u(x) * a * dot(u.grad(x), n), q = u.u(x) * a * dot(v.grad(x), n);
      const double w = rule.weights[k] * 2.0 * sm.areas[t];
      boundary_side += w * (p - q);
      boundary_mag += w * (std::abs(p) + std::abs(q));
    }
  }
  ResidualReport rep;
  rep.name = "second_green";
  rep.level = meshes.level;
  rep.points = {};
  rep.residuals = {volume_side - boundary_side};
  rep.scale = std::max(volume_mag, boundary_mag);
  check_tail(integrand, vm.outer_radius, rep.scale, opts.tail_tol, opts.tail_samples);
  rep.finish();
  return rep;
}

namespace {

// R u, V T u, W u and P A u at the points.
struct IdentityTerms {
  std::vector<double> r, v, w, p;
};

IdentityTerms identity_terms(const CoefficientField& field, const AnalyticField& u, const MeshPair& meshes,
                             const std::vector<Vec3>& pts, const SurfaceQuadrature& sq, const VolumeQuadrature& vq,
                             const Exec& exec) {
  const VolumeMesh& vm = meshes.volume;
  const DomainDensity ud = DomainDensity::from_function(vm, u.u);
  const DomainDensity au = DomainDensity::from_function(vm, [&](const Vec3& x) { return u.apply_operator(field, x); });
  IdentityTerms t;
  t.r = op_R(vq, ud, pts, exec);
  t.v = op_V(sq, conormal_function(meshes.surface, field, u), pts, exec);
  t.w = op_W(sq, trace_function(u), pts, exec);
  t.p = op_P(vq, au, pts, exec);
  return t;
}

void check_identity_tails(const CoefficientField& field, const AnalyticField& u, double radius, double scale,
                          const IdentityOptions& opts) {
  check_tail([&](const Vec3& x) { return u.apply_operator(field, x); }, radius, scale, opts.tail_tol,
             opts.tail_samples);
  check_tail(
      [&](const Vec3& x) {
        const CoefficientSample s = sample_coefficient(field, x);
        return u.u(x) * (norm(s.grad_ln_a) + std::abs(s.laplacian_ln_a));
      },
      radius, scale, opts.tail_tol, opts.tail_samples);
}

}  // namespace

ResidualReport third_green_residual(const CoefficientField& field, const AnalyticField& u, const MeshPair& meshes,
                                    const std::vector<Vec3>& test_points, const IdentityOptions& opts) {
  const double h = meshes.surface.max_edge();
  ResidualReport rep;
  rep.name = "third_green";
  rep.level = meshes.level;
  for (const Vec3& y : test_points) {
    if (distance_to_surface(meshes.surface, y) < h) {
      ++rep.excluded;
      continue;
    }
    rep.points.push_back(y);
  }
  for (const Vec3& y : rep.points) rep.scale = std::max(rep.scale, std::abs(u.u(y)));
  check_identity_tails(field, u, meshes.volume.outer_radius, rep.scale, opts);

  const SurfaceQuadrature sq(meshes.surface, opts.quad.layer, &field);
  const VolumeQuadrature vq(meshes.volume, opts.quad.volume, &field);
  const IdentityTerms t = identity_terms(field, u, meshes, rep.points, sq, vq, opts.exec);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    rep.residuals.push_back(u.u(rep.points[i]) + t.r[i] - t.v[i] + t.w[i] - t.p[i]);
  }
  rep.finish();
  return rep;
}

ResidualReport trace_identity_residual(const CoefficientField& field, const AnalyticField& u, const MeshPair& meshes,
                                       const IdentityOptions& opts) {
  ResidualReport rep;
  rep.name = "trace_identity";
  rep.level = meshes.level;
  for (const RowMeta& r : boundary_rows(meshes.surface)) rep.points.push_back(r.point);
  for (const Vec3& y : rep.points) rep.scale = std::max(rep.scale, std::abs(u.u(y)));
  check_identity_tails(field, u, meshes.volume.outer_radius, rep.scale, opts);

  const SurfaceQuadrature sq(meshes.surface, opts.quad.layer, &field);
  const VolumeQuadrature vq(meshes.volume, opts.quad.volume, &field);
  const std::vector<double> kappa = jump_values(sq, rep.points, opts.jump, opts.exec);
  const IdentityTerms t = identity_terms(field, u, meshes, rep.points, sq, vq, opts.exec);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    rep.residuals.push_back((1.0 - kappa[i]) * u.u(rep.points[i]) + t.r[i] - t.v[i] + t.w[i] - t.p[i]);
  }
  rep.finish();
  return rep;
}

ResidualReport conormal_identity_residual_offset(const CoefficientField& field, const AnalyticField& u,
                                                 const MeshPair& meshes, double offset,
                                                 const IdentityOptions& opts) {
  if (!(offset > 10.0 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorKind::Config, "normal-derivative offset must exceed 10 machine epsilons");
  }
  const SurfaceMesh& sm = meshes.surface;
  ResidualReport rep;
  rep.name = "conormal_identity_offset";
  rep.level = meshes.level;
  std::vector<Vec3> normals;
  const auto vt = sm.vertex_triangles();
  const std::vector<RowMeta> rows = boundary_rows(sm);
  const std::size_t stride = std::max<std::size_t>(1, rows.size() / 64);
  for (std::size_t i = 0; i < rows.size(); i += stride) {
    const RowMeta& r = rows[i];
    rep.points.push_back(r.point);
    normals.push_back(r.kind == RowMeta::Kind::Centroid ? sm.normals[r.index] : vertex_normal(sm, vt[r.index]));
  }
  const SurfaceQuadrature sq(sm, opts.quad.layer, &field);
  const VolumeQuadrature vq(meshes.volume, opts.quad.volume, &field);
  const DomainDensity ud = DomainDensity::from_function(meshes.volume, u.u);
  const DomainDensity au =
      DomainDensity::from_function(meshes.volume, [&](const Vec3& x) { return u.apply_operator(field, x); });
  const SurfaceFunction tu = conormal_function(sm, field, u);
  const SurfaceFunction gu = trace_function(u);
  rep.residuals.assign(rep.points.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(rep.points.size()), opts.exec, [&](std::ptrdiff_t i) {
    const Vec3& n = normals[i];
    const Exec serial = Exec::serial();
    // The stencil is applied to the whole identity, so the stencil's own
    // truncation error cancels between terms and only the quadrature error
    // is differentiated.
    auto identity = [&](const Vec3& x) {
      const std::vector<Vec3> pt{x};
      return u.u(x) + op_R(vq, ud, pt, serial)[0] - op_V(sq, tu, pt, serial)[0] + op_W(sq, gu, pt, serial)[0] -
             op_P(vq, au, pt, serial)[0];
    };
    rep.residuals[i] = field.a(rep.points[i] - n * offset) * normal_derivative_delta(identity, rep.points[i], n, offset);
  });
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const Vec3 y = rep.points[i] - normals[i] * offset;
    rep.scale = std::max(rep.scale, std::abs(field.a(y) * dot(u.grad(y), normals[i])));
  }
  rep.finish();
  return rep;
}

double single_layer_injectivity(const SurfaceMesh& mesh, const CoefficientField& field, const LayerOptions& opts,
                                const Exec& exec) {
  const SurfaceQuadrature q(mesh, opts, &field);
  std::vector<RowMeta> rows;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    rows.push_back({RowMeta::Kind::Centroid, static_cast<int>(t), mesh.centroids[t]});
  }
  const OperatorBlock v = assemble_V_block(q, rows, triangle_columns(mesh, Support::All), exec);
  const Eigen::MatrixXd m = v.matrix;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s[s.size() - 1];
}

RepresentationResult representation_C(const MeshPair& meshes, const CoefficientField& field, const AnalyticField& F,
                                      const IdentityOptions& opts) {
  const SurfaceMesh& sm = meshes.surface;
  const VolumeMesh& vm = meshes.volume;
  RepresentationResult res;
  res.f_star = DomainDensity::from_function(vm, [&field, lap = F.laplacian](const Vec3& x) {
    return field.a(x) * lap(x);
  });
  const double scale = [&] {
    double s = 0.0;
    for (const Vec3& c : sm.centroids) s = std::max(s, std::abs(F.u(c)));
    return s;
  }();
  check_tail(F.laplacian, vm.outer_radius, std::max(scale, 1e-300), opts.tail_tol, opts.tail_samples);

  const SurfaceQuadrature sq(sm, opts.quad.layer);
  const VolumeQuadrature vq(vm, opts.quad.volume);
  const DomainDensity lap = DomainDensity::from_function(vm, F.laplacian);
  const std::vector<double> pf = newton_potential_delta(vq, lap, sm.centroids, opts.exec);
  Eigen::VectorXd g(sm.num_triangles());
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) g[t] = F.u(sm.centroids[t]) - pf[t];

  std::vector<RowMeta> rows;
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) {
    rows.push_back({RowMeta::Kind::Centroid, static_cast<int>(t), sm.centroids[t]});
  }
  const OperatorBlock v = assemble_V_block(sq, rows, triangle_columns(sm, Support::All), opts.exec);
  const Eigen::PartialPivLU<RowMatrix> lu(v.matrix);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) fail(ErrorKind::Solver, "single-layer block is singular (rcond " + std::to_string(rcond) + ")");
  const Eigen::VectorXd psi = lu.solve(g);
  const double gn = g.norm();
  res.solve_residual = gn > 0.0 ? (v.matrix * psi - g).norm() / gn : (v.matrix * psi - g).norm();
  if (!std::isfinite(res.solve_residual)) fail(ErrorKind::Solver, "single-layer solve produced non-finite values");

  res.psi_delta.assign(psi.data(), psi.data() + psi.size());
  res.psi_star.space = Space::TriangleConstant;
  res.psi_star.coeffs.resize(sm.num_triangles());
  for (std::size_t t = 0; t < sm.num_triangles(); ++t) res.psi_star.coeffs[t] = field.a(sm.centroids[t]) * psi[t];
  return res;
}

std::vector<double> reconstruct(const MeshPair& meshes, const CoefficientField& field,
                                const RepresentationResult& rep, const std::vector<Vec3>& points,
                                const IdentityOptions& opts) {
  const SurfaceQuadrature sq(meshes.surface, opts.quad.layer, &field);
  const VolumeQuadrature vq(meshes.volume, opts.quad.volume, &field);
  std::vector<double> out = op_P(vq, rep.f_star, points, opts.exec);
  const std::vector<double> v = op_V(sq, as_function(meshes.surface, rep.psi_star), points, opts.exec);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  return out;
}

}  // namespace bdie
