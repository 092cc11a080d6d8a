#include "bdie/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bdie/error.hpp"

namespace bdie {

double weight(const Vec3& x) { return std::sqrt(1.0 + norm2(x)); }

CoefficientField::CoefficientField(std::string name, Scalar a, Vector grad_a, Scalar laplacian_a,
                                   double c_lower, double c_upper,
                                   std::map<std::string, double> params)
    : name_(std::move(name)),
      a_(std::move(a)),
      grad_a_(std::move(grad_a)),
      laplacian_a_(std::move(laplacian_a)),
      c_lower_(c_lower),
      c_upper_(c_upper),
      params_(std::move(params)) {
  if (!(c_lower_ > 0.0) || !(c_upper_ > c_lower_)) {
    fail(ErrorKind::Config, "coefficient '" + name_ + "': bounds must satisfy 0 < c_lower < c_upper");
  }
}

CoefficientField CoefficientField::constant(double c) {
  if (!(c > 0.0)) fail(ErrorKind::CoefficientViolation, "constant coefficient must be positive");
  CoefficientField f(
      "constant", [c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3{}; },
      [](const Vec3&) { return 0.0; }, 0.5 * c, 2.0 * c, {{"value", c}});
  f.constant_ = true;
  return f;
}

CoefficientField CoefficientField::gaussian_bump(double beta) {
  if (!(beta > -1.0)) fail(ErrorKind::CoefficientViolation, "gaussian bump needs beta > -1");
  const double lo = std::min(1.0, 1.0 + beta) * 0.5;
  const double hi = std::max(1.0, 1.0 + beta) + 0.5;
  return CoefficientField(
      "gaussian",
      [beta](const Vec3& x) { return 1.0 + beta * std::exp(-norm2(x)); },
      [beta](const Vec3& x) { return x * (-2.0 * beta * std::exp(-norm2(x))); },
      [beta](const Vec3& x) {
        const double r2 = norm2(x);
        return beta * std::exp(-r2) * (4.0 * r2 - 6.0);
      },
      lo, hi, {{"beta", beta}});
}

CoefficientField CoefficientField::sine_x1() {
  return CoefficientField(
      "sine_x1", [](const Vec3& x) { return 2.0 + std::sin(x.x); },
      [](const Vec3& x) { return Vec3{std::cos(x.x), 0.0, 0.0}; },
      [](const Vec3& x) { return -std::sin(x.x); }, 0.5, 3.5);
}

CoefficientField CoefficientField::from_catalog(const std::string& name,
                                                const std::map<std::string, double>& params) {
  auto get = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  for (const auto& [key, value] : params) {
    const bool known = (name == "constant" && key == "value") || (name == "gaussian" && key == "beta");
    if (!known) fail(ErrorKind::Config, "coefficient '" + name + "' has no parameter '" + key + "'");
  }
  if (name == "constant") return constant(get("value", 1.0));
  if (name == "gaussian") return gaussian_bump(get("beta", 1.0));
  if (name == "sine_x1") return sine_x1();
  fail(ErrorKind::Config, "unknown coefficient '" + name + "'");
}

namespace {

double checked_a(const CoefficientField& field, const Vec3& x) {
  const double a = field.a(x);
  if (!(a > 0.0)) {
    std::ostringstream msg;
    msg << "coefficient '" << field.name() << "' is non-positive (" << a << ") at (" << x.x << ", "
        << x.y << ", " << x.z << ")";
    fail(ErrorKind::CoefficientViolation, msg.str());
  }
  return a;
}

}  // namespace

Vec3 eval_grad_ln_a(const CoefficientField& field, const Vec3& x) {
  const double a = checked_a(field, x);
  return field.grad_a(x) / a;
}

double eval_laplacian_ln_a(const CoefficientField& field, const Vec3& x) {
  const double a = checked_a(field, x);
  const Vec3 g = field.grad_a(x);
  return field.laplacian_a(x) / a - norm2(g) / (a * a);
}

CoefficientSample sample_coefficient(const CoefficientField& field, const Vec3& x) {
  const double a = field.a(x);
  const Vec3 g = field.grad_a(x);
  return {a, g / a, field.laplacian_a(x) / a - norm2(g) / (a * a)};
}

std::vector<Vec3> fibonacci_directions(int count) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
  }
  return dirs;
}

CoefficientReport validate_conditions(const CoefficientField& field,
                                      const std::vector<double>& radial_grid, int angular_samples,
                                      const ConditionTolerances& tol) {
  if (radial_grid.empty()) fail(ErrorKind::Config, "radial grid must be nonempty");
  for (std::size_t i = 1; i < radial_grid.size(); ++i) {
    if (!(radial_grid[i] > radial_grid[i - 1])) fail(ErrorKind::Config, "radial grid must be increasing");
  }
  if (angular_samples < 1) fail(ErrorKind::Config, "angular_samples must be positive");

  CoefficientReport rep;
  rep.tolerances = tol;
  rep.min_a = std::numeric_limits<double>::infinity();
  rep.max_a = -std::numeric_limits<double>::infinity();

  const auto dirs = fibonacci_directions(angular_samples);
  const std::size_t n = radial_grid.size();
  std::vector<double> grad_per_radius(n, 0.0), lap_per_radius(n, 0.0);
  bool cond0 = true;

  for (std::size_t k = 0; k < n; ++k) {
    const double r = radial_grid[k];
    const std::size_t m = r == 0.0 ? 1 : dirs.size();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3 x = dirs[j] * r;
      const double a = field.a(x);
      rep.min_a = std::min(rep.min_a, a);
      rep.max_a = std::max(rep.max_a, a);
      if (!(field.c_lower() < a && a < field.c_upper())) cond0 = false;
      const double w = weight(x);
      grad_per_radius[k] = std::max(grad_per_radius[k], w * norm(field.grad_a(x)));
      lap_per_radius[k] = std::max(lap_per_radius[k], w * w * std::abs(field.laplacian_a(x)));
    }
    rep.tail_samples.push_back({r, grad_per_radius[k]});
  }

  rep.sup_omega_grad_a = *std::max_element(grad_per_radius.begin(), grad_per_radius.end());
  rep.sup_omega2_lap_a = *std::max_element(lap_per_radius.begin(), lap_per_radius.end());

  // A finite sample cannot certify an L-infinity bound; what it can detect is
  // growth: the outermost sphere must not exceed the inner-half supremum by
  // more than growth_factor.
  auto bounded = [&](const std::vector<double>& per_radius) {
    const std::size_t half = std::max<std::size_t>(1, (n + 1) / 2);
    const double inner = *std::max_element(per_radius.begin(), per_radius.begin() + half);
    const double outer = per_radius.back();
    return std::isfinite(inner) && outer <= tol.growth_factor * inner + tol.zero_floor;
  };

  rep.passes_cond0 = cond0;
  rep.passes_cond1 = bounded(grad_per_radius);
  rep.passes_cond3 = bounded(lap_per_radius);
  rep.passes_decay = grad_per_radius.back() < tol.decay_tol;
  return rep;
}

}  // namespace bdie
