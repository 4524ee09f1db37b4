#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qhrisk/distribution.hpp"

namespace qhrisk {

/// Weight function phi: R -> [1, inf) for the weighted sup norm
/// ||v||_phi = sup |v phi|. Builtin family phi(x) = (1 + |x|)^lambda.
class WeightFn {
 public:
  /// phi_lambda(x) = (1 + |x|)^lambda, lambda >= 0.
  static WeightFn power(double lambda);
  /// phi == 1.
  static WeightFn one() { return power(0.0); }
  static WeightFn custom(std::function<double(double)> f, std::string name);

  double operator()(double x) const;
  /// lambda for the builtin power family.
  std::optional<double> exponent() const { return lambda_; }
  std::string name() const { return name_; }

 private:
  WeightFn() = default;
  std::optional<double> lambda_;
  std::function<double(double)> f_;
  std::string name_;
};

/// A reference function multiplied into direction segments, e.g. a cdf.
/// `left` returns the left limit; `jumps` lists its discontinuities and
/// `kinks` further points where it is not smooth.
struct BaseFn {
  std::function<double(double)> value;
  std::function<double(double)> left;
  std::vector<double> jumps;
  std::vector<double> kinks;
};

/// One segment [left, right) of a direction:
///   v(x) = c0 + c1 x + c2 x^2 + c3 x^3 + base_coef * base(x).
struct DirectionSegment {
  double left = 0.0;
  double right = 0.0;
  std::array<double, 4> poly{};
  double base_coef = 0.0;
};

/// A cadlag perturbation v, represented exactly as a finite sum of
/// piecewise cubic parts, each optionally carrying a shared base function.
/// v vanishes outside the union of its segments.
class Direction {
 public:
  Direction() = default;

  /// Polynomials (global coordinates) on [knots[i], knots[i+1]).
  static Direction piecewise(std::vector<double> knots,
                             std::vector<std::array<double, 4>> polys);
  /// value on [a, b), zero elsewhere.
  static Direction constant(double a, double b, double value);
  /// C^1 hat supported on [a, b] with peak `height` at the midpoint, built
  /// from two cubic smoothstep pieces.
  static Direction bump(double a, double b, double height);
  /// Segments referring to `base`; segments must be sorted and disjoint.
  static Direction with_base(std::shared_ptr<const BaseFn> base,
                             std::vector<DirectionSegment> segments);
  /// The function G - F0 on the union of both supports.
  static Direction difference(const Dist& G, const Dist& F0);

  double operator()(double x) const;
  double left_limit(double x) const;

  Direction operator+(const Direction& other) const;
  Direction operator-(const Direction& other) const;
  Direction operator*(double c) const;
  friend Direction operator*(double c, const Direction& v) { return v * c; }

  /// Sorted segment endpoints and base-function jumps (finite only).
  std::vector<double> breakpoints() const;
  /// Interval partition of the hull on which v is continuous.
  std::vector<std::pair<double, double>> pieces() const;
  /// Locations where the left limit differs from the value by more than tol.
  std::vector<double> jumps(double tol = 0.0) const;
  /// [min segment left, max segment right]; empty direction gives (0, 0).
  std::pair<double, double> hull() const;
  bool empty() const { return comps_.empty(); }
  /// A polynomial of positive degree on an unbounded segment.
  bool has_unbounded_polynomial() const;

 private:
  struct Component {
    std::vector<DirectionSegment> segs;
    std::shared_ptr<const BaseFn> base;
  };
  double eval_component(const Component& c, double x, bool left) const;

  std::vector<Component> comps_;
};

/// Grid check of the weight-function shape: phi >= 1, nonincreasing on
/// (-inf, 0] and nondecreasing on [0, inf), as phi_lambda is.
bool is_admissible_weight(const WeightFn& phi, double lo = -1e6,
                          double hi = 1e6, int points = 2001);

struct NormOptions {
  int grid_per_segment = 256;
  bool refine = true;
};

/// sup_x |v(x)| phi(x), evaluated per continuity piece at endpoints, jump
/// points and a dense sub-grid refined once by golden-section search.
double weighted_sup_norm(const Direction& v, const WeightFn& phi,
                         const NormOptions& opt = {});

struct Membership {
  bool member = true;
  std::vector<std::string> reasons;
  std::vector<double> offending;
};

/// v vanishes outside [F0^->(0), F0^<-(1)] (the space D_{phi,F0}).
Membership membership_D(const Direction& v, const Dist& F0);
/// Additionally every jump of v inside (F0^->(0), F0^<-(1)) is a
/// discontinuity point of F0 (the tangent space C_{phi,F0}).
Membership membership_C(const Direction& v, const Dist& F0);

struct EmpiricalDirection {
  Direction direction;
  /// Raised when the empirical law puts mass outside F0's support, so
  /// F_n - F0 does not vanish there; the direction is clipped regardless.
  bool mass_outside_support = false;
};

/// r_n (F_n - F0), with jumps at the sample points.
EmpiricalDirection empirical_direction(const EmpiricalDist& Fn, const Dist& F0,
                                       double r_n);

/// Kolmogorov-type statistic sup_x |F_n(x) - F0(x)| over order statistics
/// (F0 continuous). Independent of the Direction machinery.
double ks_statistic(std::span<const double> sorted_samples, const Dist& F0);

/// sup_x |F_n(x) - F0(x)| phi(x) from values and left limits at the order
/// statistics, plus a quantile ladder F0^<-(2^-k F0(x_(1))) (and its mirror)
/// beyond the sample range. Inside the gaps only the endpoints are used, which
/// is exact for phi == 1.
double weighted_ks_statistic(std::span<const double> sorted_samples, const Dist& F0,
                             const WeightFn& phi);

}  // namespace qhrisk
