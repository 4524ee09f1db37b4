#include "qhrisk/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <memory>
#include <string>

#include "qhrisk/errors.hpp"

namespace qhrisk::numerics {
namespace {

namespace bq = boost::math::quadrature;

bool acceptable(const QuadResult& r, const QuadOptions& opt) {
  if (!std::isfinite(r.value) || !std::isfinite(r.error)) return false;
  return r.error <= std::max(opt.abs_tol, 64.0 * opt.rel_tol * r.l1);
}

// Boost quadrature objects precompute abscissas; one per thread.
bq::tanh_sinh<double>& tanh_sinh_rule(std::size_t levels) {
  thread_local bq::tanh_sinh<double> rule(15);
  thread_local std::size_t custom_levels = 0;
  thread_local std::unique_ptr<bq::tanh_sinh<double>> custom;
  if (levels == 15) return rule;
  if (!custom || custom_levels != levels) {
    custom = std::make_unique<bq::tanh_sinh<double>>(levels);
    custom_levels = levels;
  }
  return *custom;
}

}  // namespace

QuadResult integrate_gap(const std::function<double(double, double)>& f,
                         double a, double b, const QuadOptions& opt) {
  QuadResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::size_t levels = 0;
  try {
    if (std::isfinite(a) && std::isfinite(b)) {
      // Work on [-1, 1]: Boost's error estimate scales with max |f| rather
      // than with the width, so narrow pieces would never pass.
      const double h = 0.5 * (b - a);
      const double m = a + h;
      auto g = [&](double s, double sc) {
        double t;
        double gap;
        if (sc < 0) {
          t = a + h * -sc;
          if (t <= a) t = std::nextafter(a, b);
          gap = b - t;
        } else if (sc > 0) {
          gap = h * sc;
          t = b - gap;
          if (t >= b) t = std::nextafter(b, a);
        } else {
          t = m + h * s;
          gap = b - t;
        }
        return h * f(t, gap);
      };
      out.value = tanh_sinh_rule(opt.max_refinements)
                      .integrate(g, -1.0, 1.0, opt.rel_tol, &out.error,
                                 &out.l1, &levels);
    } else if (std::isfinite(a) || std::isfinite(b)) {
      bq::exp_sinh<double> rule(opt.max_refinements);
      auto g = [&](double x) { return f(x, b - x); };
      out.value = rule.integrate(g, a, b, opt.rel_tol, &out.error, &out.l1,
                                 &levels);
    } else {
      bq::sinh_sinh<double> rule(opt.max_refinements);
      auto g = [&](double x) { return f(x, kInf); };
      out.value =
          rule.integrate(g, opt.rel_tol, &out.error, &out.l1, &levels);
    }
  } catch (const std::domain_error& e) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.error = kInf;
    out.converged = false;
    return out;
  } catch (const boost::math::evaluation_error&) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.error = kInf;
    out.converged = false;
    return out;
  } catch (const std::overflow_error&) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.error = kInf;
    out.converged = false;
    return out;
  }
  out.converged = acceptable(out, opt);
  out.value *= sign;
  return out;
}

QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, const QuadOptions& opt) {
  return integrate_gap([&](double x, double) { return f(x); }, a, b, opt);
}

double require_converged(const QuadResult& r, const char* what) {
  if (!r.converged) {
    throw NumericError(std::string(what) + ": quadrature did not converge",
                       r.value, r.error);
  }
  return r.value;
}

double bisect_threshold(const std::function<bool(double)>& pred, double lo,
                        double hi, double tol, int max_iter) {
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double x_tol, int max_iter) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) {
    throw NumericError("bisect_root: root not bracketed", lo, hi - lo);
  }
  for (int i = 0; i < max_iter; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (hi - lo <= x_tol || mid <= lo || mid >= hi) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw NumericError("bisect_root: no convergence", 0.5 * (lo + hi),
                     hi - lo);
}

MinResult grid_golden_minimize(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points,
                               double x_tol, int max_iter) {
  grid_points = std::max(grid_points, 3);
  const double step = (hi - lo) / (grid_points - 1);
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i < grid_points; ++i) {
    const double x = i == grid_points - 1 ? hi : lo + i * step;
    const double v = f(x);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = best == 0 ? lo : lo + (best - 1) * step;
  double b = best == grid_points - 1 ? hi : lo + (best + 1) * step;
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > x_tol; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  MinResult out{best == 0 ? lo : (best == grid_points - 1 ? hi : lo + best * step),
                best_val};
  for (double x : {a, b, c, d}) {
    const double v = (x == c) ? fc : (x == d) ? fd : f(x);
    if (v < out.value) out = {x, v};
  }
  return out;
}

MinResult grid_golden_maximize(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points,
                               double x_tol, int max_iter) {
  auto r = grid_golden_minimize([&](double x) { return -f(x); }, lo, hi,
                                grid_points, x_tol, max_iter);
  r.value = -r.value;
  return r;
}

TailProbe doubling_tail_probe(const std::function<double(double)>& f,
                              double start, double tol, int max_doublings) {
  TailProbe out;
  if (start == 0.0) start = 1.0;
  double a = start;
  int decaying = 0;
  double prev = 0.0;
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  opt.abs_tol = tol * 1e-3;
  for (int k = 0; k < max_doublings; ++k) {
    const double b = 2.0 * a;
    const auto r = integrate(f, std::min(a, b), std::max(a, b), opt);
    const double inc = std::abs(r.value);
    out.trace.push_back({b, inc});
    if (!std::isfinite(inc)) return out;
    out.total += inc;
    if (inc <= tol) {
      out.converged = true;
      return out;
    }
    if (k > 0 && prev > 0.0) {
      const double ratio = inc / prev;
      decaying = ratio < 0.9 ? decaying + 1 : 0;
      if (decaying >= 3) {
        out.converged = true;
        out.total += inc * ratio / (1.0 - ratio);
        return out;
      }
    }
    prev = inc;
    a = b;
  }
  return out;
}

}  // namespace qhrisk::numerics
