#include "bdie/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdie/error.hpp"

namespace bdie {

namespace {

// Adds the full orbit of barycentric point (a, b, c) with the given weight
// (already scaled to the reference area 1/2).
void add_orbit(QuadratureRule& rule, double a, double b, double w) {
  const double c = 1.0 - a - b;
  std::array<std::array<double, 3>, 6> perms = {{{a, b, c}, {b, c, a}, {c, a, b}, {b, a, c}, {a, c, b}, {c, b, a}}};
  std::vector<std::array<double, 2>> seen;
  for (const auto& p : perms) {
    const std::array<double, 2> node{p[1], p[2]};
    bool dup = false;
    for (const auto& s : seen) dup = dup || (std::abs(s[0] - node[0]) < 1e-14 && std::abs(s[1] - node[1]) < 1e-14);
    if (dup) continue;
    seen.push_back(node);
    rule.nodes.push_back(node);
    rule.weights.push_back(w);
  }
}

QuadratureRule make_gauss_triangle(int order) {
  QuadratureRule r;
  switch (order) {
    case 1:
      r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0});
      r.weights.push_back(0.5);
      break;
    case 2:
      add_orbit(r, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0);
      break;
    case 3:
      add_orbit(r, 0.659027622374092, 0.231933368553031, 1.0 / 12.0);
      break;
    case 4:
      add_orbit(r, 0.44594849091596488631832925388305, 0.44594849091596488631832925388305,
                0.5 * 0.22338158967801146569500700843312);
      add_orbit(r, 0.091576213509770743459571463402202, 0.091576213509770743459571463402202,
                0.5 * 0.10995174365532186763832632490021);
      break;
    case 6:
      add_orbit(r, 0.063089014491502228340331602870819, 0.063089014491502228340331602870819,
                0.5 * 0.050844906370206816920936809106869);
      add_orbit(r, 0.24928674517091042129163855310702, 0.24928674517091042129163855310702,
                0.5 * 0.11678627572637936602528961138558);
      add_orbit(r, 0.053145049844816947353249671631398, 0.31035245103378440541660773395655,
                0.5 * 0.082851075618373575193553456420442);
      break;
    default:
      fail(ErrorKind::Config, "unsupported triangle rule order " + std::to_string(order));
  }
  return r;
}

Rule1D make_gauss_legendre(int n) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // map [-1, 1] to [0, 1], ascending
    r.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace

const QuadratureRule& gauss_triangle(int order) {
  static const std::array<QuadratureRule, 5> rules = {make_gauss_triangle(1), make_gauss_triangle(2),
                                                      make_gauss_triangle(3), make_gauss_triangle(4),
                                                      make_gauss_triangle(6)};
  switch (order) {
    case 1: return rules[0];
    case 2: return rules[1];
    case 3: return rules[2];
    case 4: return rules[3];
    case 6: return rules[4];
    default: fail(ErrorKind::Config, "unsupported triangle rule order " + std::to_string(order));
  }
}

const Rule1D& gauss_legendre(int n) {
  static const std::vector<Rule1D> table = [] {
    std::vector<Rule1D> t(65);
    for (int k = 1; k <= 64; ++k) t[k] = make_gauss_legendre(k);
    return t;
  }();
  if (n < 1 || n > 64) fail(ErrorKind::Config, "unsupported Gauss-Legendre size " + std::to_string(n));
  return table[n];
}

QuadratureRule duffy_triangle(int singular_vertex, int order) {
  if (singular_vertex < 0 || singular_vertex > 2) fail(ErrorKind::Config, "singular vertex must be 0, 1 or 2");
  static const std::array<std::array<double, 2>, 3> ref = {{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
  const auto& p0 = ref[singular_vertex];
  const auto& p1 = ref[(singular_vertex + 1) % 3];
  const auto& p2 = ref[(singular_vertex + 2) % 3];
  const Rule1D& g = gauss_legendre(order);
  QuadratureRule r;
  for (int i = 0; i < order; ++i) {
    const double u = g.nodes[i];
    for (int j = 0; j < order; ++j) {
      const double v = g.nodes[j];
      r.nodes.push_back({p0[0] + u * (p1[0] - p0[0]) + u * v * (p2[0] - p1[0]),
                         p0[1] + u * (p1[1] - p0[1]) + u * v * (p2[1] - p1[1])});
      // Jacobian of (u, v) -> reference triangle is u.
      r.weights.push_back(u * g.weights[i] * g.weights[j]);
    }
  }
  return r;
}

double point_triangle_distance(const Vec3& p, const Triangle& tri) {
  const Vec3& a = tri[0];
  const Vec3& b = tri[1];
  const Vec3& c = tri[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(ap);
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(bp);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(p - (a + ab * (d1 / (d1 - d3))));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(cp);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(p - (a + ac * (d2 / (d2 - d6))));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return norm(p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))));
  }
  const double denom = 1.0 / (va + vb + vc);
  return norm(p - (a + ab * (vb * denom) + ac * (vc * denom)));
}

namespace {

using Bary = std::array<double, 3>;
using BaryTri = std::array<Bary, 3>;

Vec3 at(const Triangle& tri, const Bary& b) { return tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2]; }

Bary mid(const Bary& a, const Bary& b) { return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])}; }

double edge_max(const Triangle& t) {
  return std::max({norm(t[1] - t[0]), norm(t[2] - t[1]), norm(t[0] - t[2])});
}

double area_of(const Triangle& t) { return 0.5 * norm(cross(t[1] - t[0], t[2] - t[0])); }

// Maps a reference-triangle rule onto the sub-triangle `sub` (in barycentric
// coordinates of the parent) and appends physical nodes.
void emit(const Triangle& tri, const BaryTri& sub, const QuadratureRule& rule, std::vector<LayerNode>& out) {
  const Triangle phys = {at(tri, sub[0]), at(tri, sub[1]), at(tri, sub[2])};
  const double scale = 2.0 * area_of(phys);
  for (std::size_t k = 0; k < rule.weights.size(); ++k) {
    const double xi = rule.nodes[k][0], eta = rule.nodes[k][1];
    const double l0 = 1.0 - xi - eta;
    Bary b;
    for (int i = 0; i < 3; ++i) b[i] = l0 * sub[0][i] + xi * sub[1][i] + eta * sub[2][i];
    out.push_back({at(tri, b), rule.weights[k] * scale, b});
  }
}

void near_rule(const Vec3& target, const Triangle& tri, const BaryTri& sub, int uniform_levels, int extra_depth,
               const LayerOptions& opts, std::vector<LayerNode>& out) {
  const Triangle phys = {at(tri, sub[0]), at(tri, sub[1]), at(tri, sub[2])};
  bool split = uniform_levels > 0;
  if (!split && extra_depth < opts.max_extra_depth) {
    const double h = edge_max(phys);
    split = point_triangle_distance(target, phys) < opts.adapt_ratio * h;
  }
  if (!split) {
    emit(tri, sub, gauss_triangle(opts.near_order), out);
    return;
  }
  const Bary m01 = mid(sub[0], sub[1]), m12 = mid(sub[1], sub[2]), m20 = mid(sub[2], sub[0]);
  const int next_uniform = std::max(uniform_levels - 1, 0);
  const int next_extra = uniform_levels > 0 ? extra_depth : extra_depth + 1;
  for (const BaryTri& child : {BaryTri{sub[0], m01, m20}, BaryTri{m01, sub[1], m12}, BaryTri{m20, m12, sub[2]},
                               BaryTri{m12, m20, m01}}) {
    near_rule(target, tri, child, next_uniform, next_extra, opts, out);
  }
}

}  // namespace

LayerScheme layer_rule(const Vec3& target, const Triangle& tri, const LayerOptions& opts,
                       std::vector<LayerNode>& out) {
  static const BaryTri whole = {Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}};
  const double h = edge_max(tri);
  const double d = point_triangle_distance(target, tri);
  if (d >= opts.near_ratio * h) {
    emit(tri, whole, gauss_triangle(opts.far_order), out);
    return LayerScheme::Far;
  }
  if (d > opts.on_panel_tol * h) {
    near_rule(target, tri, whole, opts.near_levels, 0, opts, out);
    return LayerScheme::Near;
  }
  // Target on the closed triangle: barycentric coordinates of its projection.
  const Vec3 e1 = tri[1] - tri[0], e2 = tri[2] - tri[0], r = target - tri[0];
  const double a11 = dot(e1, e1), a12 = dot(e1, e2), a22 = dot(e2, e2);
  const double b1 = dot(e1, r), b2 = dot(e2, r);
  const double det = a11 * a22 - a12 * a12;
  const double s = (a22 * b1 - a12 * b2) / det;
  const double t = (a11 * b2 - a12 * b1) / det;
  const Bary p = {1.0 - s - t, s, t};
  const QuadratureRule duffy = duffy_triangle(0, opts.duffy_order);
  const double total = area_of(tri);
  for (int k = 0; k < 3; ++k) {
    const BaryTri sub = {p, whole[k], whole[(k + 1) % 3]};
    const Triangle phys = {at(tri, sub[0]), at(tri, sub[1]), at(tri, sub[2])};
    if (area_of(phys) <= 1e-12 * total) continue;
    // Split once more at the foot of the perpendicular from the target onto
    // the far edge: the angular integrand 1/|x - y| is then far better
    // resolved by the tensor rule than over a wide-angled piece.
    const Vec3 e = phys[2] - phys[1];
    const double s = dot(phys[0] - phys[1], e) / dot(e, e);
    if (s > 0.05 && s < 0.95) {
      const Bary foot = {sub[1][0] + s * (sub[2][0] - sub[1][0]), sub[1][1] + s * (sub[2][1] - sub[1][1]),
                         sub[1][2] + s * (sub[2][2] - sub[1][2])};
      emit(tri, {p, sub[1], foot}, duffy, out);
      emit(tri, {p, foot, sub[2]}, duffy, out);
    } else {
      emit(tri, sub, duffy, out);
    }
  }
  return LayerScheme::Singular;
}

double integrate_layer(const Vec3& target, const Triangle& tri, const PointKernel& kernel, const LayerOptions& opts) {
  std::vector<LayerNode> nodes;
  layer_rule(target, tri, opts, nodes);
  double sum = 0.0;
  for (const auto& n : nodes) sum += kernel(n.x) * n.w;
  return sum;
}

double integrate_volume(const Vec3& target, const std::vector<Vec3>& nodes, const std::vector<double>& weights,
                        const PointKernel& kernel, double exclusion_radius) {
  if (exclusion_radius < 0.0) fail(ErrorKind::Config, "exclusion radius must be nonnegative");
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (exclusion_radius > 0.0 && norm(nodes[k] - target) < exclusion_radius) continue;
    sum += kernel(nodes[k]) * weights[k];
  }
  return sum;
}

double integrate_volume(const Vec3& target, const VolumeCell& cell, const PointKernel& kernel,
                        double exclusion_radius) {
  return integrate_volume(target, cell.nodes, cell.weights, kernel, exclusion_radius);
}

namespace {

void cone_face(const Vec3& y, const Triangle& f, double h, int depth, const ConeOptions& opts,
               std::vector<Vec3>& nodes, std::vector<double>& weights) {
  const double diam = edge_max(f);
  if (depth < opts.max_depth && point_triangle_distance(y, f) < opts.split_ratio * diam) {
    const Vec3 m01 = (f[0] + f[1]) * 0.5, m12 = (f[1] + f[2]) * 0.5, m20 = (f[2] + f[0]) * 0.5;
    for (const Triangle& c : {Triangle{f[0], m01, m20}, Triangle{m01, f[1], m12}, Triangle{m20, m12, f[2]},
                              Triangle{m12, m20, m01}}) {
      cone_face(y, c, h, depth + 1, opts, nodes, weights);
    }
    return;
  }
  const QuadratureRule& tr = gauss_triangle(opts.face_order);
  const Rule1D& gs = gauss_legendre(opts.n_s);
  const double scale = 2.0 * area_of(f);
  for (std::size_t k = 0; k < tr.weights.size(); ++k) {
    const double xi = tr.nodes[k][0], eta = tr.nodes[k][1];
    const Vec3 q = f[0] * (1.0 - xi - eta) + f[1] * xi + f[2] * eta;
    const double wq = tr.weights[k] * scale * h;
    for (int j = 0; j < opts.n_s; ++j) {
      const double s = gs.nodes[j];
      nodes.push_back(y + (q - y) * s);
      weights.push_back(wq * gs.weights[j] * s * s);
    }
  }
}

}  // namespace

void cone_rule(const Vec3& target, const std::vector<Facet>& facets, const ConeOptions& opts,
               std::vector<Vec3>& nodes, std::vector<double>& weights) {
  for (const Facet& f : facets) {
    const double h = dot(f.corners[0] - target, f.normal);
    if (std::abs(h) <= 1e-13 * edge_max(f.corners)) continue;
    cone_face(target, f.corners, h, 0, opts, nodes, weights);
  }
}

}  // namespace bdie
