#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace qhrisk::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  std::size_t max_refinements = 15;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
  bool converged = true;
};

/// Integrates f over [a, b]; either end may be infinite. The integrand is
/// never evaluated at a finite endpoint, so integrable endpoint
/// singularities are allowed (double-exponential substitution).
QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, const QuadOptions& opt = {});

/// Same, for integrands that want the exact gap b - x to the right end.
/// Used for quantile integrals up to level 1 where 1 - t loses digits.
QuadResult integrate_gap(const std::function<double(double, double)>& f,
                         double a, double b, const QuadOptions& opt = {});

/// Throws NumericError when r did not meet opt; returns r.value otherwise.
double require_converged(const QuadResult& r, const char* what);

/// Bisection for an increasing predicate: returns the smallest x in
/// (lo, hi] (up to tol) with pred(x) true. Requires !pred(lo), pred(hi).
double bisect_threshold(const std::function<bool(double)>& pred, double lo,
                        double hi, double tol, int max_iter = 400);

/// Root of a monotone (either direction) function with f(lo), f(hi) of
/// opposite sign. Throws NumericError after max_iter iterations.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double x_tol, int max_iter = 400);

struct MinResult {
  double x = 0.0;
  double value = 0.0;
};

/// Minimizes f on [lo, hi] by scanning a grid and refining the best cell
/// with golden-section search. Exact for convex f up to x_tol.
MinResult grid_golden_minimize(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points,
                               double x_tol, int max_iter = 300);

/// Same, maximizing.
MinResult grid_golden_maximize(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points,
                               double x_tol, int max_iter = 300);

struct TailStep {
  double end = 0.0;
  double increment = 0.0;
};

struct TailProbe {
  bool converged = false;
  /// Integral over the probed tail, including the geometric remainder
  /// estimate when convergence was declared from the decay ratio.
  double total = 0.0;
  std::vector<TailStep> trace;
};

/// Integrates a nonnegative f over [start, 2 start], [2 start, 4 start], ...
/// (start < 0 walks to -inf). Converged once an increment falls below tol,
/// or three consecutive increment ratios stay below 0.9 (geometric decay).
TailProbe doubling_tail_probe(const std::function<double(double)>& f,
                              double start, double tol,
                              int max_doublings = 60);

}  // namespace qhrisk::numerics
