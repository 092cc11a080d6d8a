#include <cmath>

#include "bdie/error.hpp"
#include "bdie/green_identities.hpp"
#include "doctest.h"

using namespace bdie;

namespace {

const MeshPair& meshes(int level) {
  static std::vector<MeshPair> cache = [] {
    std::vector<MeshPair> v;
    for (int l = 1; l <= 3; ++l) v.push_back(build_mesh_pair(l));
    return v;
  }();
  return cache[level - 1];
}

const CoefficientField& gauss() {
  static const CoefficientField f = CoefficientField::gaussian_bump(1.0);
  return f;
}

const CoefficientField& one() {
  static const CoefficientField f = CoefficientField::constant(1.0);
  return f;
}

void check_fd(const AnalyticField& f, const std::vector<Vec3>& pts) {
  const double h = 1e-4;
  for (const Vec3& x : pts) {
    double lap = 0.0;
    for (int i = 0; i < 3; ++i) {
      Vec3 e{0, 0, 0};
      e[i] = h;
      const double fp = f.u(x + e), fm = f.u(x - e), f0 = f.u(x);
      CHECK(std::abs((fp - fm) / (2 * h) - f.grad(x)[i]) < 1e-6);
      lap += (fp - 2 * f0 + fm) / (h * h);
    }
    CHECK(std::abs(lap - f.laplacian(x)) < 1e-4);
  }
}

}  // namespace

TEST_SUITE("green_identities") {
  TEST_CASE("analytic fields agree with finite differences") {
    const std::vector<Vec3> pts = {{1.2, 0.3, -0.4}, {0, 0, 2.1}, {-1.5, 1.1, 0.7}, {2.6, -0.2, 0.1}, {0.3, 1.7, 1.0}};
    check_fd(AnalyticField::point_source(), pts);
    check_fd(AnalyticField::point_source({0, 0, 0.5}), pts);
    check_fd(AnalyticField::radial_bump_potential(), pts);
    check_fd(AnalyticField::constant(3.0), pts);
    // the bump potential's Laplacian is the bump itself
    const auto b = AnalyticField::radial_bump_potential(2.0, 0.5);
    CHECK(b.laplacian({0, 0, 2.0}) == 1.0);
    CHECK(b.laplacian({0, 0, 3.0}) == 0.0);
    // outside the support the potential is -(total mass)/(4 pi r)
    const double mass = 4 * kPi * b.u({0, 0, 3.0}) * -3.0;
    CHECK(b.u({0, 3.5, 0}) == doctest::Approx(-mass / (4 * kPi * 3.5)).epsilon(1e-12));
  }

  TEST_CASE("conormal trace") {
    const auto& s = meshes(1).surface;
    std::vector<Vec3> n;
    for (const Vec3& v : s.vertices) n.push_back(v * -1.0);
    const auto u = AnalyticField::point_source();
    const auto t1 = conormal_trace(one(), u, s.vertices, n);
    const auto two = CoefficientField::constant(2.0);
    const auto t2 = conormal_trace(two, u, s.vertices, n);
    for (std::size_t i = 0; i < t1.size(); ++i) {
      CHECK(t1[i] == doctest::Approx(0.0795775).epsilon(1e-6));
      CHECK(t2[i] == 2 * t1[i]);
    }
    for (double v : conormal_trace(gauss(), AnalyticField::constant(5.0), s.vertices, n)) CHECK(v == 0.0);
  }

  TEST_CASE("second Green identity") {
    const auto u = AnalyticField::point_source();
    const auto v = AnalyticField::point_source({0, 0, 0.5});
    const auto same = second_green_residual(gauss(), u, u, meshes(2));
    CHECK(same.max_abs == 0.0);
    const auto r = second_green_residual(gauss(), u, v, meshes(3));
    MESSAGE("second Green, gaussian: rel " << r.rel_to_scale << " scale " << r.scale);
    CHECK(r.rel_to_scale < 0.03);
    const auto h = second_green_residual(one(), u, v, meshes(3));
    MESSAGE("second Green, a = 1: residual " << h.max_abs);
    CHECK(h.max_abs < 1e-3);
  }

  TEST_CASE("truncation check rejects non-decaying integrands") {
    AnalyticField q;
    q.u = [](const Vec3& x) { return norm2(x); };
    q.grad = [](const Vec3& x) { return x * 2.0; };
    q.laplacian = [](const Vec3&) { return 6.0; };
    try {
      third_green_residual(one(), q, meshes(1), default_test_points(meshes(1)));
      FAIL("expected a truncation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TruncationUnsound);
    }
  }

  TEST_CASE("third Green identity") {
    const auto u = AnalyticField::point_source();
    double prev_h = 1e9, prev_g = 1e9;
    for (int level : {2, 3}) {
      const auto& m = meshes(level);
      const auto pts = default_test_points(m);
      const auto h = third_green_residual(one(), u, m, pts);
      const auto g = third_green_residual(gauss(), u, m, pts);
      MESSAGE("level " << level << ": harmonic " << h.rel_to_scale << ", gaussian " << g.rel_to_scale << " ("
                       << h.points.size() << " points, " << h.excluded << " excluded)");
      CHECK(h.rel_to_scale < prev_h);
      CHECK(g.rel_to_scale < prev_g);
      prev_h = h.rel_to_scale;
      prev_g = g.rel_to_scale;
    }
    CHECK(prev_h < 0.03);
    CHECK(prev_g < 0.05);
  }

  TEST_CASE("third Green identity is linear in u") {
    const auto u = AnalyticField::point_source();
    const auto pts = default_test_points(meshes(1));
    const auto r1 = third_green_residual(gauss(), u, meshes(1), pts);
    const auto r10 = third_green_residual(gauss(), u.scaled(10.0), meshes(1), pts);
    for (std::size_t i = 0; i < r1.residuals.size(); ++i) {
      CHECK(r10.residuals[i] == doctest::Approx(10.0 * r1.residuals[i]).epsilon(1e-12));
    }
    const auto z = third_green_residual(gauss(), AnalyticField::constant(0.0), meshes(1), pts);
    CHECK(z.max_abs == 0.0);
  }

  TEST_CASE("constant field leaves the flux at infinity in the identity") {
    // For u = 1 the surface at infinity contributes -W_{S_R}[1] = 1, which the
    // exterior identity does not contain: the residual is 1 up to quadrature.
    const auto c = AnalyticField::constant(1.0);
    const auto& m = meshes(2);
    const auto r = third_green_residual(gauss(), c, m, default_test_points(m));
    for (double x : r.residuals) CHECK(x == doctest::Approx(1.0).epsilon(0.03));
    const auto t = trace_identity_residual(one(), c, m);
    for (double x : t.residuals) CHECK(x == doctest::Approx(1.0).epsilon(0.03));
  }

  TEST_CASE("trace identity") {
    const auto u = AnalyticField::point_source();
    const auto h = trace_identity_residual(one(), u, meshes(3));
    const auto g = trace_identity_residual(gauss(), u, meshes(3));
    IdentityOptions half;
    half.jump = JumpMode::Half;
    const auto hh = trace_identity_residual(one(), u, meshes(3), half);
    MESSAGE("trace identity level 3: harmonic " << h.rel_to_scale << ", gaussian " << g.rel_to_scale
                                                << ", harmonic with plain 1/2 " << hh.rel_to_scale);
    CHECK(h.rel_to_scale < 0.05);
    CHECK(g.rel_to_scale < 0.05);
  }

  TEST_CASE("conormal identity offset diagnostic") {
    const auto u = AnalyticField::point_source();
    const auto& m = meshes(2);
    const auto r1 = conormal_identity_residual_offset(one(), u, m, 0.1);
    const auto r2 = conormal_identity_residual_offset(one(), u, m, 0.05);
    MESSAGE("conormal offset 0.1: " << r1.rel_to_scale << ", 0.05: " << r2.rel_to_scale);
    CHECK(r1.rel_to_scale < 0.1);
    CHECK(r2.rel_to_scale < 0.1);
    // At a fixed offset the residual is differentiated quadrature error, so
    // it falls under mesh refinement.
    const auto r3 = conormal_identity_residual_offset(one(), u, meshes(3), 0.1);
    MESSAGE("conormal offset 0.1, level 3: " << r3.rel_to_scale);
    CHECK(r3.rel_to_scale < r1.rel_to_scale);
    CHECK(conormal_identity_residual_offset(gauss(), AnalyticField::constant(0.0), m, 0.05).max_abs == 0.0);
  }

  TEST_CASE("single layer injectivity") {
    const CoefficientField two = CoefficientField::constant(2.0);
    std::vector<double> normalized;
    for (int level = 1; level <= 3; ++level) {
      const auto& s = meshes(level).surface;
      const double sigma = single_layer_injectivity(s, one());
      CHECK(sigma > 0.0);
      normalized.push_back(sigma / (s.total_area() / s.num_triangles()));
      if (level == 2) CHECK(single_layer_injectivity(s, two) == doctest::Approx(0.5 * sigma).epsilon(1e-12));
    }
    MESSAGE("area-normalized sigma_min: " << normalized[0] << " " << normalized[1] << " " << normalized[2]);
    const auto [lo, hi] = std::minmax_element(normalized.begin(), normalized.end());
    CHECK(*hi < 4.0 * *lo);
  }

  TEST_CASE("representation operator round trips") {
    const auto& m = meshes(3);
    const auto pts = default_test_points(m, 24);
    // F = V_Delta[1] = 1/|x| outside the ball
    const auto f1 = AnalyticField::point_source().scaled(kFourPi);
    const auto r1 = representation_C(m, one(), f1);
    double psi_err = 0.0;
    for (double p : r1.psi_star.coeffs) psi_err = std::max(psi_err, std::abs(p - 1.0));
    for (double v : r1.f_star.values) CHECK(v == 0.0);
    MESSAGE("single-layer round trip: max |psi - 1| = " << psi_err);
    CHECK(psi_err < 0.05);
    const auto back1 = reconstruct(m, one(), r1, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(back1[i] == doctest::Approx(f1.u(pts[i])).epsilon(0.05));

    // F = P_Delta f for a radial bump
    const auto f2 = AnalyticField::radial_bump_potential();
    const auto r2 = representation_C(m, one(), f2);
    double scale = 0.0, psi_max = 0.0;
    for (const Vec3& c : m.surface.centroids) scale = std::max(scale, std::abs(f2.u(c)));
    for (double p : r2.psi_star.coeffs) psi_max = std::max(psi_max, std::abs(p));
    MESSAGE("volume round trip: max |psi| / scale = " << psi_max / scale);
    CHECK(psi_max < 0.05 * scale);
    for (std::size_t c = 0; c < m.volume.num_cells(); ++c) {
      CHECK(r2.f_star.values[c] == doctest::Approx(f2.laplacian(m.volume.cells[c].center)));
    }
    const auto back2 = reconstruct(m, one(), r2, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(back2[i] == doctest::Approx(f2.u(pts[i])).epsilon(0.05));
  }
}
