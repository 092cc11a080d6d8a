#include <cmath>
#include <random>

#include "bdie/error.hpp"
#include "bdie/laplace_core.hpp"
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

double max_rel(const std::vector<double>& got, const std::vector<double>& want) {
  double e = 0;
  for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, std::abs(got[i] - want[i]) / std::abs(want[i]));
  return e;
}

}  // namespace

TEST_SUITE("laplace_core") {
  TEST_CASE("fundamental solution") {
    CHECK(fund_solution({0, 0, 0}, {1, 0, 0}) == doctest::Approx(-0.0795775).epsilon(1e-6));
    CHECK(fund_solution({0, 0, 0}, {0, 2, 0}) == doctest::Approx(-0.0397887).epsilon(1e-6));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 50; ++k) {
      const Vec3 x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
      CHECK(fund_solution(x, y) == fund_solution(y, x));
      const Vec3 gx = grad_fund_solution(x, y, Wrt::X), gy = grad_fund_solution(x, y, Wrt::Y);
      CHECK(gx == -gy);
      const double h = 1e-5;
      for (int i = 0; i < 3; ++i) {
        const Vec3 e{i == 0 ? h : 0, i == 1 ? h : 0, i == 2 ? h : 0};
        const double fd = (fund_solution(x + e, y) - fund_solution(x - e, y)) / (2 * h);
        CHECK(std::abs(fd - gx[i]) < 1e-6 * std::max(1.0, std::abs(gx[i])));
      }
    }
    CHECK(norm(grad_fund_solution({0, 0, 0}, {0, 0, 1}, Wrt::X)) == doctest::Approx(0.0795775).epsilon(1e-6));
    try {
      fund_solution({1, 1, 1}, {1, 1, 1});
      FAIL("expected a singular-evaluation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularEvaluation);
    }
    CHECK_THROWS_AS(grad_fund_solution({1, 1, 1}, {1, 1, 1}, Wrt::Y), Error);
  }

  TEST_CASE("single layer sphere oracle") {
    const auto& m = sphere(3);
    const auto one = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0);
    const auto v = single_layer_V_delta(m, one, {{2, 0, 0}, {0, 0, 1.5}, {0, -3, 0}});
    CHECK(v[0] == doctest::Approx(0.5).epsilon(0.01));
    CHECK(v[1] == doctest::Approx(1 / 1.5).epsilon(0.01));
    CHECK(v[2] == doctest::Approx(1 / 3.0).epsilon(0.01));
    const auto zero = BoundaryDensity::constant(m, Space::TriangleConstant, 0.0);
    CHECK(single_layer_V_delta(m, zero, {{2, 0, 0}})[0] == 0.0);
    // direct values on S, at a vertex and at a centroid
    const auto d = single_layer_V_delta(m, one, {m.vertices[10], m.centroids[33]});
    CHECK(d[0] == doctest::Approx(1.0).epsilon(0.02));
    CHECK(d[1] == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("double layer sphere oracle") {
    const auto& m = sphere(3);
    const auto one = BoundaryDensity::constant(m, Space::VertexLinear, 1.0);
    const auto w = double_layer_W_delta(m, one, {{3, 0, 0}, {0, 1.2, 0.3}, {0, 0, 0}, {0.2, -0.3, 0.4}});
    CHECK(std::abs(w[0]) < 1e-2);
    CHECK(std::abs(w[1]) < 1e-2);
    CHECK(w[2] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(w[3] == doctest::Approx(1.0).epsilon(0.01));
    const auto zero = BoundaryDensity::constant(m, Space::VertexLinear, 0.0);
    CHECK(double_layer_W_delta(m, zero, {{0, 0, 0}})[0] == 0.0);
  }

  TEST_CASE("direct value of the double layer") {
    const auto& m = sphere(3);
    const auto one = BoundaryDensity::constant(m, Space::VertexLinear, 1.0);
    const auto dv = direct_value_W_delta(m, one, m.centroids);
    for (double x : dv) CHECK(x == doctest::Approx(0.5).epsilon(0.02));
    const auto zero = BoundaryDensity::constant(m, Space::VertexLinear, 0.0);
    CHECK(direct_value_W_delta(m, zero, {m.centroids[0]})[0] == 0.0);
  }

  TEST_CASE("vertex direct values approach 1/2 monotonically under refinement") {
    double prev = 1.0;
    for (int level = 1; level <= 3; ++level) {
      const auto& m = sphere(level);
      const auto one = BoundaryDensity::constant(m, Space::VertexLinear, 1.0);
      const auto dv = direct_value_W_delta(m, one, m.vertices);
      double err = 0;
      for (double x : dv) err = std::max(err, std::abs(x - 0.5));
      CHECK(err < prev);
      prev = err;
    }
  }

  TEST_CASE("jump coefficient at centroids is 1/2 and at vertices below 1/2") {
    const auto& m = sphere(2);
    SurfaceQuadrature q(m);
    const auto kc = jump_coefficient(q, m.centroids);
    for (double k : kc) CHECK(k == doctest::Approx(0.5).epsilon(1e-3));
    const auto kv = jump_coefficient(q, m.vertices);
    for (double k : kv) {
      CHECK(k < 0.5);
      CHECK(k > 0.4);
    }
  }

  TEST_CASE("jump relation of the double layer at centroids") {
    double prev = 1e9;
    for (int level : {2, 3}) {
      const auto& m = sphere(level);
      BoundaryDensity rho;
      rho.space = Space::VertexLinear;
      for (const auto& v : m.vertices) rho.coeffs.push_back(2.0 + v.z + 0.5 * v.x * v.y);
      const double h = m.max_edge();
      std::vector<Vec3> off, on;
      for (std::size_t t = 0; t < m.num_triangles(); t += 7) {
        on.push_back(m.centroids[t]);
        off.push_back(m.centroids[t] - m.normals[t] * (1e-3 * h));
      }
      const auto ext = double_layer_W_delta(m, rho, off);
      const auto dv = direct_value_W_delta(m, rho, on);
      double err = 0;
      for (std::size_t i = 0; i < on.size(); ++i) {
        const std::size_t t = 7 * i;
        const double r = rho.at(m, t, {1 / 3.0, 1 / 3.0, 1 / 3.0});
        err = std::max(err, std::abs(ext[i] - (-0.5 * r + dv[i])));
      }
      CHECK(err < prev);
      CHECK(err < 0.02);
      prev = err;
    }
  }

  TEST_CASE("single layer is continuous across S") {
    const auto& m = sphere(3);
    const auto one = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0);
    const std::size_t t = 100;
    const double h = m.max_edge();
    const Vec3 y = m.centroids[t], n = m.normals[t];
    std::vector<Vec3> pts;
    for (double f : {0.1, 0.05, 0.025}) pts.push_back(y - n * (f * h));
    pts.push_back(y);
    const auto v = single_layer_V_delta(m, one, pts);
    const double extrap = 2 * v[2] - v[1];
    CHECK(extrap == doctest::Approx(v[3]).epsilon(0.02));
  }

  TEST_CASE("layer operators are linear in the density") {
    const auto& m = sphere(2);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    BoundaryDensity a, b, c;
    a.space = b.space = c.space = Space::VertexLinear;
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      a.coeffs.push_back(u(rng));
      b.coeffs.push_back(u(rng));
      c.coeffs.push_back(0.7 * a.coeffs.back() - 1.3 * b.coeffs.back());
    }
    const std::vector<Vec3> t = {{1.5, 0, 0}, m.vertices[3], m.centroids[9], {0, 0, 0.2}};
    for (int op = 0; op < 2; ++op) {
      auto f = [&](const BoundaryDensity& d) {
        return op == 0 ? single_layer_V_delta(m, d, t) : double_layer_W_delta(m, d, t);
      };
      const auto va = f(a), vb = f(b), vc = f(c);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(vc[i] - (0.7 * va[i] - 1.3 * vb[i])) < 1e-13);
    }
  }

  TEST_CASE("density validation") {
    const auto& m = sphere(1);
    BoundaryDensity d = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0, Support::DirichletOnly);
    CHECK_NOTHROW(d.validate(m));
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      if (m.part_label[t] == Part::N) {
        d.coeffs[t] = 1.0;
        break;
      }
    }
    CHECK_THROWS_AS(d.validate(m), Error);
    auto phi = BoundaryDensity::constant(m, Space::VertexLinear, 1.0, Support::NeumannOnly);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      if (m.vertex_class[v] != VertexClass::InteriorN) CHECK(phi.coeffs[v] == 0.0);
    }
    phi.coeffs.pop_back();
    CHECK_THROWS_AS(phi.validate(m), Error);
  }

  TEST_CASE("newton potential radial oracle") {
    const auto vm = build_shell_mesh(1.0, 2.0, 8, 2, 1.0, 3);
    const auto zero = DomainDensity::constant(vm, 0.0);
    CHECK(newton_potential_delta(vm, zero, {{0, 0, 0}})[0] == 0.0);
    const auto one = DomainDensity::constant(vm, 1.0), two = DomainDensity::constant(vm, 2.0);
    const double v1 = newton_potential_delta(vm, one, {{0, 0, 0}})[0];
    CHECK(v1 == doctest::Approx(-1.5).epsilon(0.01));
    CHECK(newton_potential_delta(vm, two, {{0, 0, 0}})[0] == 2 * v1);
  }

  TEST_CASE("newton potential inside and on the shell") {
    // f = 1 on the shell 1<|x|<2: potential at radius r in [1,2] is
    // -(r^2/2 - 1/(3r) ... ) computed from the radial Green function.
    const auto vm = build_shell_mesh(1.0, 2.0, 6, 2, 1.0, 3);
    const auto one = DomainDensity::constant(vm, 1.0);
    auto exact = [](double r) {
      // -[(1/r) int_1^r s^2 ds + int_r^2 s ds]
      return -((r * r * r - 1.0) / (3.0 * r) + (4.0 - r * r) / 2.0);
    };
    const std::vector<Vec3> pts = {vm.cells[5].center, vm.cells[vm.cell_index(3, 40)].center, {0, 0, 2.5}};
    const auto v = newton_potential_delta(vm, one, pts);
    for (std::size_t i = 0; i < 2; ++i) CHECK(v[i] == doctest::Approx(exact(norm(pts[i]))).epsilon(0.02));
    CHECK(v[2] == doctest::Approx(-(8.0 - 1.0) / (3.0 * 2.5)).epsilon(0.02));
  }

  TEST_CASE("normal derivative stencil") {
    const auto& m = sphere(3);
    const auto one = BoundaryDensity::constant(m, Space::TriangleConstant, 1.0);
    SurfaceQuadrature q(m);
    const SurfaceFunction f = as_function(m, one);
    const std::size_t t = 200;
    const auto pot = [&](const Vec3& x) { return single_layer_V_delta(q, f, {x})[0]; };
    CHECK(normal_derivative_delta(pot, m.centroids[t], m.normals[t], 0.005) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(normal_derivative_delta([](const Vec3&) { return 3.0; }, {0, 0, 1}, {0, 0, -1}, 0.1) == 0.0);
    CHECK(normal_derivative_delta([](const Vec3& x) { return x.z; }, {0, 0, 1}, {0, 0, -1}, 0.1) ==
          doctest::Approx(-1.0).epsilon(1e-6));
    CHECK_THROWS_AS(normal_derivative_delta([](const Vec3&) { return 0.0; }, {0, 0, 1}, {0, 0, -1}, 1e-20), Error);
  }

  TEST_CASE("worker count does not change results") {
    const auto& m = sphere(2);
    const auto one = BoundaryDensity::constant(m, Space::VertexLinear, 1.0);
    const auto a = double_layer_W_delta(m, one, m.vertices, {}, Exec::serial());
    const auto b = double_layer_W_delta(m, one, m.vertices, {}, Exec{4});
    CHECK(a == b);
  }
}
