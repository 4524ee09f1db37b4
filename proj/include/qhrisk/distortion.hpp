#pragma once

#include <span>
#include <string>
#include <vector>

namespace qhrisk {

enum class DistortionKind {
  avatr,
  identity,
  one_sided_moment,
  expectile,
  proportional_hazard,
  tabulated,
};

std::string to_string(DistortionKind kind);

/// A concave distortion g: [0,1] -> [0,1] with g(0) = 0, g(1) = 1,
/// together with its right-sided derivative. Immutable value type.
///
/// The closed-form families are
///   avatr(alpha)               g(t) = min(t / alpha, 1),          alpha in (0,1]
///   identity                   g(t) = t
///   one_sided_moment(a, p)     g(t) = t + a (1 - t) t^{1/p},      a in (0,1], p >= 1
///   expectile(alpha)           g(t) = alpha t / (1 - alpha + t (2 alpha - 1)),
///                                                                  alpha in [1/2, 1)
///   proportional_hazard(beta)  g(t) = t^beta,                     beta in (0,1]
/// and `tabulated`, a piecewise-linear g through user breakpoints.
class Distortion {
 public:
  static Distortion avatr(double alpha);
  static Distortion identity();
  static Distortion one_sided_moment(double a, double p);
  static Distortion expectile(double alpha);
  static Distortion proportional_hazard(double beta);
  /// Breakpoints (t_i, g_i) with t_0 = 0, t_last = 1, g_0 = 0, g_last = 1.
  /// Rejects input that is not nondecreasing and concave.
  static Distortion tabulated(std::vector<double> t, std::vector<double> g);

  /// Builds a closed-form family from its kind and parameter list.
  static Distortion make_builtin(DistortionKind kind,
                                 std::span<const double> params);

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;

  /// 1 - g(1 - s), accurate for small s.
  double codistort(double s) const;
  /// Right derivative on [0,1). May be +inf at t = 0 (t^{1/p}, t^beta).
  double rderiv(double t) const;

  /// rderiv with t clamped below 1; for integrands that reach F0(x) = 1.
  double rderiv_clamped(double t) const;

  /// Levels in (0,1) where rderiv jumps.
  std::vector<double> kinks() const;

  /// beta with g(t) of exact order t^beta as t -> 0+.
  double small_t_exponent() const;

  /// sup{ t : rderiv(t) > 0 }; g is flat on [active_upper, 1].
  double active_upper() const;

  DistortionKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  std::string name() const;

  bool operator==(const Distortion&) const = default;

 private:
  Distortion(DistortionKind kind, std::vector<double> params)
      : kind_(kind), params_(std::move(params)) {}

  DistortionKind kind_;
  std::vector<double> params_;
  std::vector<double> knots_t_;
  std::vector<double> knots_g_;
};

struct DistortionBoundReport {
  /// max over the grid of sup_g g'(t) - g_rho(gamma t) / (gamma t); <= 0 when
  /// the derivative bound holds.
  double max_derivative_violation = 0.0;
  double worst_t = 0.0;
  /// max over the grid of |sup_g g(t) - g_rho(t)|.
  double max_sup_gap = 0.0;

  bool bound_holds(double tol = 1e-12) const {
    return max_derivative_violation <= tol;
  }
};

/// Checks that a finite family is consistent with g_rho: the derivative
/// bound sup_g g'(t) <= g_rho(gamma t)/(gamma t) and the envelope identity
/// sup_g g = g_rho (the latter only meaningful for exhaustive families).
DistortionBoundReport check_distortion_bound(std::span<const Distortion> family,
                                             const Distortion& g_rho,
                                             double gamma,
                                             std::span<const double> grid);

/// Grid {1/(m+1), ..., m/(m+1)}.
std::vector<double> unit_grid(int m);

}  // namespace qhrisk
