#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bdie/vec3.hpp"

namespace bdie {

/// Weight of the weighted Sobolev setting, (1 + |x|^2)^{1/2}.
double weight(const Vec3& x);

/// Variable coefficient a(x) of div(a grad u) = f together with its first and
/// second derivatives. Immutable after construction; the evaluators must be
/// safe to call concurrently.
class CoefficientField {
 public:
  using Scalar = std::function<double(const Vec3&)>;
  using Vector = std::function<Vec3(const Vec3&)>;

  CoefficientField(std::string name, Scalar a, Vector grad_a, Scalar laplacian_a, double c_lower,
                   double c_upper, std::map<std::string, double> params = {});

  /// a = c everywhere.
  static CoefficientField constant(double c);
  /// a = 1 + beta * exp(-|x|^2).
  static CoefficientField gaussian_bump(double beta = 1.0);
  /// a = 2 + sin(x1); bounded but with non-decaying gradient.
  static CoefficientField sine_x1();

  /// Catalog lookup by name ("constant", "gaussian", "sine_x1") with optional
  /// parameters ("value" for constant, "beta" for gaussian).
  static CoefficientField from_catalog(const std::string& name,
                                       const std::map<std::string, double>& params);

  double a(const Vec3& x) const { return a_(x); }
  Vec3 grad_a(const Vec3& x) const { return grad_a_(x); }
  double laplacian_a(const Vec3& x) const { return laplacian_a_(x); }

  double c_lower() const { return c_lower_; }
  double c_upper() const { return c_upper_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }

  /// True when grad a vanishes identically (constant coefficient catalog entry).
  bool is_constant() const { return constant_; }

 private:
  std::string name_;
  Scalar a_;
  Vector grad_a_;
  Scalar laplacian_a_;
  double c_lower_;
  double c_upper_;
  std::map<std::string, double> params_;
  bool constant_ = false;
};

/// grad(ln a)(x) = grad a / a. Throws CoefficientViolation when a(x) <= 0.
Vec3 eval_grad_ln_a(const CoefficientField& field, const Vec3& x);

/// Laplacian of ln a: lap a / a - |grad a|^2 / a^2.
double eval_laplacian_ln_a(const CoefficientField& field, const Vec3& x);

/// Pointwise a, grad ln a and laplacian ln a in one call (no positivity check;
/// callers validate positivity up front).
struct CoefficientSample {
  double a;
  Vec3 grad_ln_a;
  double laplacian_ln_a;
};
CoefficientSample sample_coefficient(const CoefficientField& field, const Vec3& x);

struct ConditionTolerances {
  /// Sup over the outermost sphere may exceed the sup over the inner half of
  /// the grid by at most this factor before an L-infinity bound is rejected.
  double growth_factor = 2.0;
  /// Absolute floor below which a sampled quantity counts as zero.
  double zero_floor = 1e-12;
  /// omega |grad a| at the largest radius must fall below this for decay.
  double decay_tol = 1e-3;
};

struct TailSample {
  double radius;
  double omega_grad_a;
};

struct CoefficientReport {
  bool passes_cond0 = false;
  bool passes_cond1 = false;
  bool passes_cond3 = false;
  bool passes_decay = false;
  double min_a = 0.0;
  double max_a = 0.0;
  double sup_omega_grad_a = 0.0;
  double sup_omega2_lap_a = 0.0;
  std::vector<TailSample> tail_samples;
  ConditionTolerances tolerances;
};

/// Audits the admissibility conditions on spheres of the given radii using
/// `angular_samples` quasi-uniform (Fibonacci) directions per sphere.
CoefficientReport validate_conditions(const CoefficientField& field,
                                      const std::vector<double>& radial_grid, int angular_samples,
                                      const ConditionTolerances& tol = {});

/// Deterministic quasi-uniform directions on the unit sphere.
std::vector<Vec3> fibonacci_directions(int count);

}  // namespace bdie
