#include <cmath>
#include <random>

#include "bdie/error.hpp"
#include "bdie/parametrix_ops.hpp"
#include "bdie/reference.hpp"
#include "doctest.h"

using namespace bdie;

namespace {

const SurfaceMesh& sphere(int level) {
  static std::vector<SurfaceMesh> cache = [] {
    std::vector<SurfaceMesh> v;
    for (int l = 0; l <= 3; ++l) v.push_back(build_icosphere(l));
    return v;
  }();
  return cache[level];
}

const VolumeMesh& shell() {
  static const VolumeMesh m = build_shell_mesh(1.0, 4.0, 8, 2, 1.3, 3);
  return m;
}

const VolumeMesh& thin_shell() {
  static const VolumeMesh m = build_shell_mesh(1.0, 2.0, 8, 2, 1.0, 3);
  return m;
}

const CoefficientField& gauss() {
  static const CoefficientField f = CoefficientField::gaussian_bump(1.0);
  return f;
}

const CoefficientField& one() {
  static const CoefficientField f = CoefficientField::constant(1.0);
  return f;
}

const CoefficientField& two() {
  static const CoefficientField f = CoefficientField::constant(2.0);
  return f;
}

BoundaryDensity random_vertex_density(const SurfaceMesh& m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  BoundaryDensity d;
  d.space = Space::VertexLinear;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) d.coeffs.push_back(u(rng));
  return d;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0 ? num / den : num;
}

}  // namespace

TEST_SUITE("parametrix_ops") {
  TEST_CASE("kernel_P") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 20; ++k) {
      const Vec3 x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
      CHECK(kernel_P(one(), x, y) == fund_solution(x, y));
    }
    CHECK(kernel_P(two(), {0, 0, 0}, {0, 1, 0}) == doctest::Approx(-0.0397887).epsilon(1e-6));
    CHECK(kernel_P(gauss(), {1, 0, 0}, {3, 0, 0}) == doctest::Approx(-0.029091).epsilon(1e-4));
    CHECK(kernel_P(gauss(), {1, 0, 0}, {3, 0, 0}) ==
          doctest::Approx(-1.0 / (8.0 * kPi * (1.0 + std::exp(-1.0)))).epsilon(1e-14));
    CHECK_THROWS_AS(kernel_P(gauss(), {1, 0, 0}, {1, 0, 0}), Error);
  }

  TEST_CASE("kernel_R matches the divergence form by finite differences") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-2, 2);
    const double h = 1e-4;
    for (int k = 0; k < 30; ++k) {
      const Vec3 x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
      if (norm(x - y) < 0.3) continue;
      double div = 0.0;
      for (int i = 0; i < 3; ++i) {
        Vec3 e{0, 0, 0};
        e[i] = h;
        const double fp = eval_grad_ln_a(gauss(), x + e)[i] * fund_solution(x + e, y);
        const double fm = eval_grad_ln_a(gauss(), x - e)[i] * fund_solution(x - e, y);
        div += (fp - fm) / (2 * h);
      }
      CHECK(std::abs(kernel_R(gauss(), x, y) - (-div)) < 1e-5);
      CHECK(kernel_R(one(), x, y) == 0.0);
      CHECK(kernel_R(two(), x, y) == 0.0);
    }
    CHECK_THROWS_AS(kernel_R(gauss(), {0, 1, 0}, {0, 1, 0}), Error);
  }

  TEST_CASE("kernel_R decays with the coefficient gradient") {
    const Vec3 y{0, 0, 2};
    for (const Vec3& dir : fibonacci_directions(12)) {
      const double near = std::abs(kernel_R(gauss(), dir * 1.0, y));
      const double far = std::abs(kernel_R(gauss(), dir * 4.0, y));
      if (norm(dir - Vec3{0, 0, 1}) < 1e-3) continue;
      CHECK(far < 1e-5 * near);
    }
  }

  TEST_CASE("kernel set caches match fresh samples") {
    ParametrixKernelSet k(sphere(2), thin_shell(), gauss());
    CHECK(k.cache_deviation() < 1e-14);
  }

  TEST_CASE("single layer relations") {
    const auto& m = sphere(3);
    const auto rho1 = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0);
    const std::vector<Vec3> t = {{2, 0, 0}, {0, 1.5, 0.2}, m.centroids[5], m.vertices[7]};
    CHECK(op_V(m, one(), rho1, t) == single_layer_V_delta(m, rho1, t));
    const auto half = op_V(m, two(), rho1, t);
    CHECK(half[0] == doctest::Approx(0.25).epsilon(0.01));
    const auto dv1 = dv_V(m, one(), rho1, {m.centroids[5], m.vertices[7]});
    const auto dv2 = dv_V(m, two(), rho1, {m.centroids[5], m.vertices[7]});
    for (std::size_t i = 0; i < dv1.size(); ++i) {
      CHECK(dv1[i] == doctest::Approx(1.0).epsilon(0.02));
      CHECK(dv2[i] == 0.5 * dv1[i]);
    }
    // direct quadrature of the parametrix on the same nodes
    SurfaceQuadrature q(m, {}, &gauss());
    const auto rho = random_vertex_density(m, 9);
    const auto f = as_function(m, rho);
    CHECK(rel_diff(op_V(q, f, t), reference::op_V_kernel(q, gauss(), f, t)) < 1e-10);
  }

  TEST_CASE("double layer relations") {
    const auto& m = sphere(3);
    const auto rho1 = BoundaryDensity::constant(m, Space::VertexLinear, 1.0);
    const std::vector<Vec3> t = {{3, 0, 0}, {0, 0, 0.3}, m.centroids[5], m.vertices[7]};
    CHECK(op_W(m, one(), rho1, t) == double_layer_W_delta(m, rho1, t));
    const double dn = 2 * std::exp(-1.0) / (1 + std::exp(-1.0));
    CHECK(dn == doctest::Approx(0.53788).epsilon(1e-5));
    CHECK(op_W(m, gauss(), rho1, {{3, 0, 0}})[0] == doctest::Approx(-dn / 3).epsilon(0.02));
    CHECK(op_W(m, gauss(), rho1, {{3, 0, 0}})[0] == doctest::Approx(-0.17929).epsilon(0.02));
    const auto dv = dv_W(m, one(), rho1, {m.centroids[5], m.centroids[300]});
    for (double x : dv) CHECK(x == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("surface operators are linear") {
    const auto& m = sphere(2);
    SurfaceQuadrature q(m, {}, &gauss());
    const auto a = random_vertex_density(m, 3), b = random_vertex_density(m, 4);
    BoundaryDensity c = a;
    for (std::size_t i = 0; i < c.coeffs.size(); ++i) c.coeffs[i] = 2.5 * a.coeffs[i] - 0.5 * b.coeffs[i];
    const std::vector<Vec3> t = {{1.7, 0.2, 0}, m.vertices[11], {0.1, 0, 0}};
    for (int op = 0; op < 2; ++op) {
      auto f = [&](const BoundaryDensity& d) { return op == 0 ? op_V(q, as_function(m, d), t) : op_W(q, as_function(m, d), t); };
      const auto va = f(a), vb = f(b), vc = f(c);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(vc[i] - (2.5 * va[i] - 0.5 * vb[i])) < 1e-13);
    }
  }

  TEST_CASE("Newton potential relation") {
    const auto& vm = thin_shell();
    const auto f1 = DomainDensity::constant(vm, 1.0);
    const std::vector<Vec3> t = {{0, 0, 0}, vm.cells[17].center, {0, 0, 1.0}};
    CHECK(op_P(vm, one(), f1, t) == newton_potential_delta(vm, f1, t));
    const auto fa = DomainDensity::from_function(vm, [](const Vec3& x) { return gauss().a(x); });
    CHECK(op_P(vm, gauss(), fa, {{0, 0, 0}})[0] == doctest::Approx(-1.5).epsilon(0.01));
    CHECK(op_P(vm, gauss(), DomainDensity::constant(vm, 0.0), t) == std::vector<double>(3, 0.0));
    VolumeQuadrature q(vm, {}, &gauss());
    const auto fs = DomainDensity::from_function(vm, [](const Vec3& x) { return std::cos(x.x) + x.y * x.z; });
    CHECK(rel_diff(op_P(q, fs, t), reference::op_P_kernel(q, gauss(), fs, t)) < 1e-10);
  }

  TEST_CASE("remainder operator: constant coefficient and kernel cross-check") {
    const auto& vm = thin_shell();
    const auto u1 = DomainDensity::constant(vm, 1.0);
    const std::vector<Vec3> t = {{0, 0, 0}, vm.cells[17].center, {0, 0, 1.0}};
    for (double v : op_R(vm, one(), u1, t)) CHECK(v == 0.0);
    for (double v : op_R(vm, two(), u1, t)) CHECK(v == 0.0);
    VolumeQuadrature q(vm, {}, &gauss());
    CHECK(rel_diff(op_R(q, u1, t), reference::op_R_kernel(q, gauss(), u1, t)) < 1e-10);
  }

  TEST_CASE("remainder operator: divergence form agrees with the kernel form") {
    const auto& vm = shell();
    const VolumeQuadrature lap(vm);
    const VolumeQuadrature par(vm, {}, &gauss());
    const auto u = DomainDensity::from_function(vm, [](const Vec3&) { return 1.0; });
    const std::vector<Vec3> ys = {{0, 0, 1.8}, {1.2, 1.2, 0.5}, {-0.4, 2.2, -0.9}};
    const auto dual = reference::op_R_dual(lap, gauss(), [](const Vec3&) { return 1.0; }, ys);
    const auto kern = op_R(par, u, ys);
    for (std::size_t k = 0; k < ys.size(); ++k) CHECK(std::abs(dual[k] - kern[k]) < 1e-3 * std::abs(kern[k]));
  }

  TEST_CASE("remainder operator self-convergence") {
    const auto coarse = op_R(shell(), gauss(), DomainDensity::constant(shell(), 1.0), {{0, 0, 2}});
    const VolumeMesh fine_mesh = build_shell_mesh(1.0, 4.0, 8, 2, 1.3, 3, CellRuleSpec{2, 4, 0});
    VolumeRuleOptions fine;
    fine.refined = {6, 8, 0};
    fine.cone.face_order = 6;
    fine.cone.n_s = 8;
    const auto ref = op_R(fine_mesh, gauss(), DomainDensity::constant(fine_mesh, 1.0), {{0, 0, 2}}, fine);
    CHECK(coarse[0] == doctest::Approx(ref[0]).epsilon(0.03));
  }

  TEST_CASE("adjoint double layer offset diagnostic") {
    const auto& m = sphere(3);
    const auto rho1 = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0);
    SurfaceQuadrature q1(m, {}, &one()), q2(m, {}, &two());
    const auto f = as_function(m, rho1);
    const std::size_t t = 77;
    const double h = m.max_edge();
    std::vector<double> v;
    for (double s : {0.2, 0.1, 0.05}) v.push_back(op_Wprime_offset(q1, f, {m.centroids[t]}, {m.normals[t]}, s * h)[0]);
    const double e1 = 2 * v[1] - v[0], e2 = 2 * v[2] - v[1];
    CHECK(e2 == doctest::Approx(e1).epsilon(0.05));
    CHECK(e2 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(op_Wprime_offset(q2, f, {m.centroids[t]}, {m.normals[t]}, 0.1 * h) ==
          op_Wprime_offset(q1, f, {m.centroids[t]}, {m.normals[t]}, 0.1 * h));
    const auto zero = as_function(m, BoundaryDensity::constant(m, Space::TriangleConstant, 0.0));
    CHECK(op_Wprime_offset(q1, zero, {m.centroids[t]}, {m.normals[t]}, 0.1)[0] == 0.0);
    CHECK_THROWS_AS(op_Wprime_offset(q1, f, {m.centroids[t]}, {m.normals[t]}, 0.0), Error);
  }

  TEST_CASE("hypersingular offset diagnostic") {
    const auto& m = sphere(3);
    SurfaceQuadrature q1(m, {}, &one()), qg(m, {}, &gauss()), lap(m);
    const auto c = as_function(m, BoundaryDensity::constant(m, Space::VertexLinear, 1.0));
    const auto zero = as_function(m, BoundaryDensity::constant(m, Space::VertexLinear, 0.0));
    const std::size_t t = 123;
    const double h = m.max_edge();
    CHECK(op_Lhat_offset(qg, zero, {m.centroids[t]}, {m.normals[t]}, 0.1)[0] == 0.0);
    std::vector<double> v;
    for (double s : {0.2, 0.1, 0.05}) v.push_back(op_Lhat_offset(q1, c, {m.centroids[t]}, {m.normals[t]}, s * h)[0]);
    CHECK(std::abs(2 * v[2] - v[1]) < 0.05);
    // a = 1: the normal derivative of the Laplace double layer
    const auto rho = as_function(m, random_vertex_density(m, 8));
    const double l = op_Lhat_offset(q1, rho, {m.centroids[t]}, {m.normals[t]}, 0.05)[0];
    const double d = normal_derivative_delta(
        [&](const Vec3& x) { return double_layer_W_delta(lap, rho, {x}, Exec::serial())[0]; }, m.centroids[t],
        m.normals[t], 0.05);
    CHECK(l == d);
  }

  TEST_CASE("dense blocks reduce to the Laplace blocks bitwise for a = 1") {
    const auto& m = sphere(2);
    const auto& vm = thin_shell();
    SurfaceQuadrature lap(m), par(m, {}, &one());
    VolumeQuadrature vlap(vm), vpar(vm, {}, &one());
    auto rows = boundary_rows(m);
    const auto cr = cell_rows(vm);
    rows.insert(rows.begin(), cr.begin(), cr.begin() + 40);
    const auto tc = triangle_columns(m, Support::DirichletOnly);
    const auto vc = vertex_columns(m, Support::NeumannOnly);
    CHECK(assemble_V_block(lap, rows, tc).matrix == assemble_V_block(par, rows, tc).matrix);
    CHECK(assemble_W_block(lap, rows, vc).matrix == assemble_W_block(par, rows, vc).matrix);
    CHECK(assemble_P_block(vlap, rows).matrix == assemble_P_block(vpar, rows).matrix);
    const auto r = assemble_R_block(vpar, rows);
    CHECK(r.consistent());
    CHECK(r.matrix.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("dense blocks match operator application") {
    const auto& m = sphere(2);
    SurfaceQuadrature q(m, {}, &gauss());
    const auto rows = boundary_rows(m);
    std::vector<Vec3> pts;
    for (const auto& r : rows) pts.push_back(r.point);
    const auto vc = vertex_columns(m, Support::NeumannOnly);
    const auto w = assemble_W_block(q, rows, vc);
    CHECK(w.consistent());
    BoundaryDensity ind = BoundaryDensity::constant(m, Space::VertexLinear, 1.0, Support::NeumannOnly);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(vc.size());
    const Eigen::VectorXd applied = w.matrix * ones;
    const auto direct = op_W(q, as_function(m, ind), pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(applied[i] - direct[i]) < 1e-10);
    const auto tc = triangle_columns(m, Support::All);
    const auto v = assemble_V_block(q, rows, tc);
    const Eigen::VectorXd av = v.matrix * Eigen::VectorXd::Ones(tc.size());
    const auto dv = op_V(q, as_function(m, BoundaryDensity::constant(m, Space::TriangleConstant, 1.0)), pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(av[i] - dv[i]) < 1e-10);
  }

  TEST_CASE("parallel and serial assembly agree bitwise") {
    const auto& m = sphere(2);
    SurfaceQuadrature q(m, {}, &gauss());
    const auto rows = boundary_rows(m);
    const auto vc = vertex_columns(m, Support::NeumannOnly);
    CHECK(assemble_W_block(q, rows, vc, Exec{4}).matrix == reference::assemble_W_block_serial(q, rows, vc).matrix);
  }

  TEST_CASE("remainder block decay") {
    VolumeQuadrature q(shell(), {}, &gauss());
    auto rows = cell_rows(shell());
    std::vector<RowMeta> some;
    for (std::size_t i = 0; i < rows.size(); i += 16) some.push_back(rows[i]);
    const auto r = assemble_R_block(q, some);
    const DecayReport d = remainder_decay(r, shell(), 3.0);
    MESSAGE("far rows / max = " << d.max_far_rows / d.max_entry << ", far columns / max = "
                                << d.max_far_columns / d.max_entry);
    // The kernel decays with the coefficient derivatives in the source
    // variable x; cells beyond radius 3 see lap ln a ~ 1e-3 of its peak.
    CHECK(d.max_far_columns <= 5e-3 * d.max_entry);
    CHECK(d.max_far_columns <= 0.1 * d.max_far_rows);
  }

  TEST_CASE("dense cap") {
    CHECK_NOTHROW(check_dense_cap(4000, 2500));
    CHECK_THROWS_AS(check_dense_cap(4001, 10), Error);
    try {
      check_dense_cap(10, 2501);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Resource);
    }
    const auto big = build_icosphere(4);
    SurfaceQuadrature q(big);
    CHECK_THROWS_AS(assemble_V_block(q, boundary_rows(big), triangle_columns(big, Support::All)), Error);
  }
}
