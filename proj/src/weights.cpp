#include "qhrisk/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qhrisk/errors.hpp"
#include "qhrisk/numerics.hpp"

namespace qhrisk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

double poly_eval(const std::array<double, 4>& c, double x) {
  return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

bool poly_nonconstant(const std::array<double, 4>& c) {
  return c[1] != 0.0 || c[2] != 0.0 || c[3] != 0.0;
}

// Coefficients in x of sum_k c_k u^k with u = q x + r.
std::array<double, 4> compose_affine(const std::array<double, 4>& c, double q,
                                     double r) {
  static constexpr double binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j <= k; ++j) {
      out[j] += c[k] * binom[k][j] * std::pow(q, j) * std::pow(r, k - j);
    }
  }
  return out;
}

// Maps u in (0,1) onto the piece (a, b), either end possibly infinite.
double map_unit(double a, double b, double u) {
  if (std::isfinite(a) && std::isfinite(b)) return a + u * (b - a);
  if (std::isfinite(a)) return a + u / (1.0 - u);
  if (std::isfinite(b)) return b - (1.0 - u) / u;
  return std::tan(M_PI * (u - 0.5));
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

// ---------------------------------------------------------------- WeightFn

WeightFn WeightFn::power(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("weight: lambda must be >= 0");
  }
  WeightFn w;
  w.lambda_ = lambda;
  w.name_ = lambda == 0.0 ? "one" : "phi(" + fmt(lambda) + ")";
  return w;
}

WeightFn WeightFn::custom(std::function<double(double)> f, std::string name) {
  if (!f) throw DomainError("weight: empty function");
  WeightFn w;
  w.f_ = std::move(f);
  w.name_ = std::move(name);
  return w;
}

double WeightFn::operator()(double x) const {
  if (lambda_) {
    if (*lambda_ == 0.0) return 1.0;
    return std::pow(1.0 + std::abs(x), *lambda_);
  }
  return f_(x);
}

bool is_admissible_weight(const WeightFn& phi, double lo, double hi,
                          int points) {
  // uniform grid plus geometric ladders towards 0, so features near the
  // origin are not stepped over
  std::vector<double> xs;
  for (int i = 0; i < points; ++i) xs.push_back(lo + (hi - lo) * i / (points - 1));
  for (double end : {lo, hi}) {
    if (end == 0.0) continue;
    const double r = std::pow(std::abs(end) / 1e-6, 1.0 / (points - 1));
    double x = 1e-6;
    for (int i = 0; i < points; ++i, x *= r) {
      if (x <= std::abs(end)) xs.push_back(std::copysign(x, end));
    }
  }
  xs.push_back(0.0);
  std::sort(xs.begin(), xs.end());
  double prev = kInf;
  for (double x : xs) {
    if (x < lo || x > hi) continue;
    const double v = phi(x);
    if (!(v >= 1.0)) return false;
    // nonincreasing up to 0, nondecreasing after
    if (x <= 0.0 ? v > prev : v < prev) return false;
    prev = v;
  }
  return true;
}

// --------------------------------------------------------------- Direction

Direction Direction::piecewise(std::vector<double> knots,
                               std::vector<std::array<double, 4>> polys) {
  if (knots.size() != polys.size() + 1) {
    throw DomainError("direction: need one more knot than pieces");
  }
  Component c;
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (!(knots[i] < knots[i + 1]) || std::isnan(knots[i])) {
      throw DomainError("direction: knots must be increasing");
    }
    c.segs.push_back({knots[i], knots[i + 1], polys[i], 0.0});
  }
  Direction d;
  if (!c.segs.empty()) d.comps_.push_back(std::move(c));
  return d;
}

Direction Direction::constant(double a, double b, double value) {
  return piecewise({a, b}, {{value, 0.0, 0.0, 0.0}});
}

Direction Direction::bump(double a, double b, double height) {
  if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
    throw DomainError("bump: need finite a < b");
  }
  const double m = 0.5 * (a + b);
  const double w = 0.5 * (b - a);
  // smoothstep s(u) = 3u^2 - 2u^3, rising on [a, m] and mirrored on [m, b]
  const std::array<double, 4> s{0.0, 0.0, 3.0 * height, -2.0 * height};
  return piecewise({a, m, b}, {compose_affine(s, 1.0 / w, -a / w),
                               compose_affine(s, -1.0 / w, b / w)});
}

Direction Direction::with_base(std::shared_ptr<const BaseFn> base,
                               std::vector<DirectionSegment> segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].left < segments[i].right)) {
      throw DomainError("direction: empty segment");
    }
    if (i > 0 && segments[i].left < segments[i - 1].right) {
      throw DomainError("direction: segments must be sorted and disjoint");
    }
  }
  bool uses_base = std::any_of(segments.begin(), segments.end(),
                               [](const auto& s) { return s.base_coef != 0.0; });
  if (uses_base && !base) throw DomainError("direction: missing base function");
  Direction d;
  if (!segments.empty()) d.comps_.push_back({std::move(segments), std::move(base)});
  return d;
}

namespace {

std::shared_ptr<const BaseFn> cdf_base(const Dist& F) {
  auto b = std::make_shared<BaseFn>();
  b->value = [F](double x) { return F.cdf(x); };
  b->left = [F](double x) { return F.cdf_left(x); };
  for (const auto& a : F.atoms()) b->jumps.push_back(a.x);
  b->kinks = F.nonsmooth_points();
  for (double e : {F.lower(), F.upper()}) {
    if (std::isfinite(e)) b->kinks.push_back(e);
  }
  return b;
}

}  // namespace

Direction Direction::difference(const Dist& G, const Dist& F0) {
  const double lo = std::min(G.lower(), F0.lower());
  const double hi = std::max(G.upper(), F0.upper());
  if (!(lo < hi)) return {};  // both point masses at the same location
  auto seg = [&](double coef) {
    DirectionSegment s;
    s.left = lo;
    s.right = hi;
    s.base_coef = coef;
    return s;
  };
  return with_base(cdf_base(G), {seg(1.0)}) - with_base(cdf_base(F0), {seg(1.0)});
}

double Direction::eval_component(const Component& c, double x,
                                 bool left) const {
  const auto& segs = c.segs;
  // first segment with right > x (value) or right >= x (left limit)
  auto it = left ? std::lower_bound(segs.begin(), segs.end(), x,
                                    [](const DirectionSegment& s, double v) {
                                      return s.right < v;
                                    })
                 : std::upper_bound(segs.begin(), segs.end(), x,
                                    [](double v, const DirectionSegment& s) {
                                      return v < s.right;
                                    });
  if (it == segs.end()) return 0.0;
  if (left ? !(it->left < x) : !(it->left <= x)) return 0.0;
  double v = poly_eval(it->poly, x);
  if (it->base_coef != 0.0) {
    v += it->base_coef * (left ? c.base->left(x) : c.base->value(x));
  }
  return v;
}

double Direction::operator()(double x) const {
  double s = 0.0;
  for (const auto& c : comps_) s += eval_component(c, x, false);
  return s;
}

double Direction::left_limit(double x) const {
  double s = 0.0;
  for (const auto& c : comps_) s += eval_component(c, x, true);
  return s;
}

Direction Direction::operator+(const Direction& other) const {
  Direction d = *this;
  d.comps_.insert(d.comps_.end(), other.comps_.begin(), other.comps_.end());
  return d;
}

Direction Direction::operator-(const Direction& other) const {
  return *this + other * -1.0;
}

Direction Direction::operator*(double c) const {
  if (c == 0.0) return {};
  Direction d = *this;
  for (auto& comp : d.comps_) {
    for (auto& s : comp.segs) {
      for (double& k : s.poly) k *= c;
      s.base_coef *= c;
    }
  }
  return d;
}

std::vector<double> Direction::breakpoints() const {
  std::vector<double> out;
  for (const auto& c : comps_) {
    for (const auto& s : c.segs) {
      if (std::isfinite(s.left)) out.push_back(s.left);
      if (std::isfinite(s.right)) out.push_back(s.right);
      if (!c.base || s.base_coef == 0.0) continue;
      for (const auto* pts : {&c.base->jumps, &c.base->kinks}) {
        for (double j : *pts) {
          if (j > s.left && j < s.right) out.push_back(j);
        }
      }
    }
  }
  sort_unique(out);
  return out;
}

std::pair<double, double> Direction::hull() const {
  if (comps_.empty()) return {0.0, 0.0};
  double lo = kInf;
  double hi = -kInf;
  for (const auto& c : comps_) {
    lo = std::min(lo, c.segs.front().left);
    hi = std::max(hi, c.segs.back().right);
  }
  return {lo, hi};
}

std::vector<std::pair<double, double>> Direction::pieces() const {
  std::vector<std::pair<double, double>> out;
  if (comps_.empty()) return out;
  auto [lo, hi] = hull();
  std::vector<double> pts{lo};
  for (double b : breakpoints()) {
    if (b > lo && b < hi) pts.push_back(b);
  }
  pts.push_back(hi);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    out.emplace_back(pts[i], pts[i + 1]);
  }
  return out;
}

std::vector<double> Direction::jumps(double tol) const {
  // cubics in global coordinates cancel near their roots; allow for the
  // rounding of sum |c_k| |x|^k on the segments meeting at b
  auto roundoff = [&](double b) {
    const double ax = std::abs(b);
    double m = 0.0;
    for (const auto& c : comps_) {
      for (const auto& s : c.segs) {
        if (b < s.left || b > s.right) continue;
        const auto& k = s.poly;
        m += ((std::abs(k[3]) * ax + std::abs(k[2])) * ax + std::abs(k[1])) * ax +
             std::abs(k[0]);
      }
    }
    return 16.0 * std::numeric_limits<double>::epsilon() * m;
  };
  std::vector<double> out;
  for (double b : breakpoints()) {
    if (std::abs((*this)(b) - left_limit(b)) > tol + roundoff(b)) out.push_back(b);
  }
  return out;
}

bool Direction::has_unbounded_polynomial() const {
  for (const auto& c : comps_) {
    for (const auto& s : c.segs) {
      if ((!std::isfinite(s.left) || !std::isfinite(s.right)) &&
          poly_nonconstant(s.poly)) {
        return true;
      }
    }
  }
  return false;
}

// ------------------------------------------------------------------- norms

double weighted_sup_norm(const Direction& v, const WeightFn& phi,
                         const NormOptions& opt) {
  if (v.empty()) return 0.0;
  if (v.has_unbounded_polynomial()) return kInf;
  double best = 0.0;
  auto consider = [&](double val) {
    if (std::isnan(val)) return;
    best = std::max(best, std::abs(val));
  };
  auto pieces = v.pieces();
  // phi is not smooth at 0; split there so refinement sees smooth pieces
  std::vector<std::pair<double, double>> split;
  for (auto [a, b] : pieces) {
    if (a < 0.0 && b > 0.0) {
      split.emplace_back(a, 0.0);
      split.emplace_back(0.0, b);
    } else {
      split.emplace_back(a, b);
    }
  }
  const int m = std::max(2, opt.grid_per_segment);
  for (auto [a, b] : split) {
    if (std::isfinite(a)) consider(v(a) * phi(a));
    if (std::isfinite(b)) consider(v.left_limit(b) * phi(b));
    auto g = [&](double u) {
      const double x = map_unit(a, b, u);
      return std::abs(v(x) * phi(x));
    };
    int arg = -1;
    double top = -1.0;
    for (int i = 1; i < m; ++i) {
      const double val = g(static_cast<double>(i) / m);
      if (val > top) {
        top = val;
        arg = i;
      }
    }
    consider(top);
    if (opt.refine && arg > 0) {
      const double ulo = static_cast<double>(arg - 1) / m;
      const double uhi = static_cast<double>(arg + 1) / m;
      const double lo = std::max(ulo, 1e-300);
      const double hi = std::min(uhi, 1.0 - 1e-16);
      auto r = numerics::grid_golden_maximize(g, lo, hi, 3, 1e-14 * (hi - lo) + 1e-300);
      consider(r.value);
    }
  }
  return best;
}

// -------------------------------------------------------------- membership

Membership membership_D(const Direction& v, const Dist& F0) {
  Membership m;
  if (v.empty()) return m;
  const double L = F0.lower();
  const double U = F0.upper();
  const double tol = 1e-14;
  auto check_outside = [&](double a, double b, bool closed_right) {
    if (!(a < b)) return;
    std::vector<double> xs;
    for (int i = 1; i < 64; ++i) xs.push_back(map_unit(a, b, i / 64.0));
    if (std::isfinite(a)) xs.push_back(a);
    for (double p : v.breakpoints()) {
      if (p > a && p < b) xs.push_back(p);
    }
    if (closed_right && std::isfinite(b)) xs.push_back(b);
    for (double x : xs) {
      if (std::abs(v(x)) > tol) {
        m.member = false;
        m.offending.push_back(x);
        m.reasons.push_back("v(" + fmt(x) + ") = " + fmt(v(x)) +
                            " outside the support [" + fmt(L) + ", " + fmt(U) +
                            "]");
        return;
      }
    }
  };
  auto [lo, hi] = v.hull();
  check_outside(lo, std::min(hi, L), false);
  if (lo < L && std::isfinite(L) && std::abs(v.left_limit(L)) > tol) {
    m.member = false;
    m.offending.push_back(L);
    m.reasons.push_back("v does not vanish to the left of " + fmt(L));
  }
  if (std::isfinite(U) && hi > U) {
    check_outside(std::nextafter(U, kInf), hi, false);
    if (m.member && std::abs(v(U)) > tol) {
      // v(U) itself is allowed; its right neighbourhood is not
      const double x = std::nextafter(U, kInf);
      if (std::abs(v(x)) > tol) {
        m.member = false;
        m.offending.push_back(U);
        m.reasons.push_back("v does not vanish to the right of " + fmt(U));
      }
    }
  }
  return m;
}

Membership membership_C(const Direction& v, const Dist& F0) {
  Membership m = membership_D(v, F0);
  const double L = F0.lower();
  const double U = F0.upper();
  // pieces evaluated in global coordinates leave roundoff at their ends, so
  // the jump tolerance scales with the size of v
  double scale = 1.0;
  for (double x : v.breakpoints()) {
    scale = std::max({scale, std::abs(v(x)), std::abs(v.left_limit(x))});
  }
  for (double x : v.jumps(1e-12 * scale)) {
    if (!(x > L && x < U)) continue;
    if (F0.cdf(x) - F0.cdf_left(x) > 0.0) continue;
    m.member = false;
    m.offending.push_back(x);
    m.reasons.push_back("v jumps at " + fmt(x) +
                        " where F0 is continuous");
  }
  return m;
}

EmpiricalDirection empirical_direction(const EmpiricalDist& Fn, const Dist& F0,
                                       double r_n) {
  EmpiricalDirection out;
  const double L = F0.lower();
  const double U = F0.upper();
  auto xs = Fn.sorted_samples();
  const std::size_t n = xs.size();
  if (xs.front() < L || xs.back() > U) out.mass_outside_support = true;

  std::vector<DirectionSegment> steps;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && xs[j + 1] == xs[i]) ++j;
    const double level = static_cast<double>(j + 1) / static_cast<double>(n);
    double a = xs[i];
    double b = j + 1 < n ? xs[j + 1] : kInf;
    a = std::max(a, L);
    b = std::min(b, U);
    if (a < b) {
      DirectionSegment s;
      s.left = a;
      s.right = b;
      s.poly = {r_n * level, 0.0, 0.0, 0.0};
      steps.push_back(s);
    }
    i = j + 1;
  }
  Direction fn = Direction::with_base(nullptr, std::move(steps));

  auto base = std::make_shared<BaseFn>();
  base->value = [F0](double x) { return F0.cdf(x); };
  base->left = [F0](double x) { return F0.cdf_left(x); };
  for (const auto& a : F0.atoms()) base->jumps.push_back(a.x);
  base->kinks = F0.nonsmooth_points();
  DirectionSegment s;
  s.left = L;
  s.right = U;
  s.base_coef = -r_n;
  Direction f0;
  if (L < U) f0 = Direction::with_base(base, {s});
  out.direction = fn + f0;
  return out;
}

double ks_statistic(std::span<const double> sorted, const Dist& F0) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = sorted[i];
    d = std::max(d, static_cast<double>(i + 1) / n - F0.cdf(x));
    d = std::max(d, F0.cdf_left(x) - static_cast<double>(i) / n);
  }
  return d;
}

double weighted_ks_statistic(std::span<const double> sorted, const Dist& F0,
                             const WeightFn& phi) {
  if (phi.exponent() && *phi.exponent() == 0.0) return ks_statistic(sorted, F0);
  if (sorted.empty()) throw DomainError("weighted_ks_statistic: empty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = sorted[i];
    const double w = phi(x);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F0.cdf(x)) * w);
    d = std::max(d, std::abs(F0.cdf_left(x) - static_cast<double>(i) / n) * w);
  }
  const double p_lo = F0.cdf_left(sorted.front());
  const double p_hi = F0.sf(sorted.back());
  for (int k = 0; k <= 60; ++k) {
    const double scale = std::ldexp(1.0, -k);
    if (p_lo > 0.0) {
      const double x = F0.left_inv(p_lo * scale);
      if (x < sorted.front()) d = std::max(d, F0.cdf(x) * phi(x));
    }
    if (p_hi > 0.0) {
      const double x = F0.upper_quantile(p_hi * scale);
      if (x > sorted.back()) d = std::max(d, F0.sf(x) * phi(x));
    }
  }
  return d;
}

}  // namespace qhrisk
