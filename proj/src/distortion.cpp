#include "qhrisk/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qhrisk/errors.hpp"

namespace qhrisk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

void check_t(double t) {
  require(t >= 0.0 && t <= 1.0, "distortion argument t must lie in [0,1]");
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::string to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::avatr: return "avatr";
    case DistortionKind::identity: return "identity";
    case DistortionKind::one_sided_moment: return "one_sided_moment";
    case DistortionKind::expectile: return "expectile";
    case DistortionKind::proportional_hazard: return "proportional_hazard";
    case DistortionKind::tabulated: return "tabulated";
  }
  return "unknown";
}

Distortion Distortion::avatr(double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "avatr: alpha must lie in (0,1]");
  return Distortion(DistortionKind::avatr, {alpha});
}

Distortion Distortion::identity() {
  return Distortion(DistortionKind::identity, {});
}

Distortion Distortion::one_sided_moment(double a, double p) {
  require(a > 0.0 && a <= 1.0, "one_sided_moment: a must lie in (0,1]");
  require(p >= 1.0 && std::isfinite(p),
          "one_sided_moment: p must lie in [1,inf)");
  return Distortion(DistortionKind::one_sided_moment, {a, p});
}

Distortion Distortion::expectile(double alpha) {
  require(alpha >= 0.5 && alpha < 1.0,
          "expectile: alpha must lie in [1/2,1)");
  return Distortion(DistortionKind::expectile, {alpha});
}

Distortion Distortion::proportional_hazard(double beta) {
  require(beta > 0.0 && beta <= 1.0,
          "proportional_hazard: beta must lie in (0,1]");
  return Distortion(DistortionKind::proportional_hazard, {beta});
}

Distortion Distortion::tabulated(std::vector<double> t, std::vector<double> g) {
  require(t.size() == g.size() && t.size() >= 2,
          "tabulated: need at least two (t, g) breakpoints of equal count");
  require(t.front() == 0.0 && t.back() == 1.0,
          "tabulated: breakpoints must start at t=0 and end at t=1");
  require(g.front() == 0.0 && g.back() == 1.0,
          "tabulated: g must satisfy g(0)=0 and g(1)=1");
  double prev_slope = kInf;
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(t[i] > t[i - 1], "tabulated: t must be strictly increasing");
    require(g[i] >= g[i - 1], "tabulated: g must be nondecreasing");
    const double slope = (g[i] - g[i - 1]) / (t[i] - t[i - 1]);
    require(slope <= prev_slope * (1.0 + 1e-12) + 1e-12,
            "tabulated: g must be concave (slopes nonincreasing)");
    prev_slope = slope;
  }
  Distortion d(DistortionKind::tabulated, {});
  d.knots_t_ = std::move(t);
  d.knots_g_ = std::move(g);
  return d;
}

Distortion Distortion::make_builtin(DistortionKind kind,
                                    std::span<const double> params) {
  auto need = [&](std::size_t n) {
    require(params.size() == n, to_string(kind) + ": expected " +
                                    std::to_string(n) + " parameter(s)");
  };
  switch (kind) {
    case DistortionKind::avatr: need(1); return avatr(params[0]);
    case DistortionKind::identity: need(0); return identity();
    case DistortionKind::one_sided_moment:
      need(2);
      return one_sided_moment(params[0], params[1]);
    case DistortionKind::expectile: need(1); return expectile(params[0]);
    case DistortionKind::proportional_hazard:
      need(1);
      return proportional_hazard(params[0]);
    case DistortionKind::tabulated:
      throw DomainError("tabulated: use Distortion::tabulated(t, g)");
  }
  throw DomainError("unknown distortion kind");
}

double Distortion::eval(double t) const {
  check_t(t);
  switch (kind_) {
    case DistortionKind::avatr: return std::min(t / params_[0], 1.0);
    case DistortionKind::identity: return t;
    case DistortionKind::one_sided_moment: {
      const double a = params_[0];
      const double p = params_[1];
      return t + a * (1.0 - t) * std::pow(t, 1.0 / p);
    }
    case DistortionKind::expectile: {
      const double al = params_[0];
      return al * t / (1.0 - al + t * (2.0 * al - 1.0));
    }
    case DistortionKind::proportional_hazard: return std::pow(t, params_[0]);
    case DistortionKind::tabulated: {
      auto it = std::upper_bound(knots_t_.begin(), knots_t_.end(), t);
      if (it == knots_t_.end()) return 1.0;
      const std::size_t i = static_cast<std::size_t>(it - knots_t_.begin());
      const double w = (t - knots_t_[i - 1]) / (knots_t_[i] - knots_t_[i - 1]);
      return knots_g_[i - 1] + w * (knots_g_[i] - knots_g_[i - 1]);
    }
  }
  return 0.0;
}

double Distortion::codistort(double s) const {
  check_t(s);
  switch (kind_) {
    case DistortionKind::avatr: {
      const double al = params_[0];
      return s <= 1.0 - al ? 0.0 : (s - (1.0 - al)) / al;
    }
    case DistortionKind::identity: return s;
    case DistortionKind::one_sided_moment: {
      const double a = params_[0];
      const double p = params_[1];
      return s * (1.0 - a * std::pow(1.0 - s, 1.0 / p));
    }
    case DistortionKind::expectile: {
      const double al = params_[0];
      return s * (1.0 - al) / (al - s * (2.0 * al - 1.0));
    }
    case DistortionKind::proportional_hazard:
      return -std::expm1(params_[0] * std::log1p(-s));
    case DistortionKind::tabulated: return 1.0 - eval(1.0 - s);
  }
  return 0.0;
}

double Distortion::rderiv(double t) const {
  require(t >= 0.0 && t < 1.0,
          "rderiv: t must lie in [0,1) (right derivative undefined at 1)");
  switch (kind_) {
    case DistortionKind::avatr: return t < params_[0] ? 1.0 / params_[0] : 0.0;
    case DistortionKind::identity: return 1.0;
    case DistortionKind::one_sided_moment: {
      const double a = params_[0];
      const double p = params_[1];
      if (t == 0.0) return p == 1.0 ? 1.0 + a : kInf;
      const double r = std::pow(t, 1.0 / p);
      return 1.0 - a * r + a * (1.0 - t) * r / (p * t);
    }
    case DistortionKind::expectile: {
      const double al = params_[0];
      const double den = 1.0 - al + t * (2.0 * al - 1.0);
      return al * (1.0 - al) / (den * den);
    }
    case DistortionKind::proportional_hazard: {
      const double b = params_[0];
      if (b == 1.0) return 1.0;
      if (t == 0.0) return kInf;
      return b * std::pow(t, b - 1.0);
    }
    case DistortionKind::tabulated: {
      // Forward difference quotients with shrinking step; exact once the
      // step no longer crosses the next breakpoint.
      double h = 0.5 * (1.0 - t);
      double prev = (eval(t + h) - eval(t)) / h;
      for (int k = 0; k < 80; ++k) {
        h *= 0.5;
        const double q = (eval(t + h) - eval(t)) / h;
        if (std::abs(q - prev) <= 1e-12 * std::max(1.0, std::abs(q))) {
          return q;
        }
        prev = q;
      }
      return prev;
    }
  }
  return 0.0;
}

double Distortion::rderiv_clamped(double t) const {
  constexpr double kBelowOne = 1.0 - 0x1p-53;
  return rderiv(std::clamp(t, 0.0, kBelowOne));
}

std::vector<double> Distortion::kinks() const {
  switch (kind_) {
    case DistortionKind::avatr:
      if (params_[0] < 1.0) return {params_[0]};
      return {};
    case DistortionKind::tabulated:
      return {knots_t_.begin() + 1, knots_t_.end() - 1};
    default: return {};
  }
}

double Distortion::small_t_exponent() const {
  switch (kind_) {
    case DistortionKind::one_sided_moment: return 1.0 / params_[1];
    case DistortionKind::proportional_hazard: return params_[0];
    default: return 1.0;
  }
}

double Distortion::active_upper() const {
  switch (kind_) {
    case DistortionKind::avatr: return params_[0];
    case DistortionKind::tabulated: {
      for (std::size_t i = knots_t_.size() - 1; i > 0; --i) {
        if (knots_g_[i] > knots_g_[i - 1]) return knots_t_[i];
      }
      return 1.0;
    }
    default: return 1.0;
  }
}

std::string Distortion::name() const {
  switch (kind_) {
    case DistortionKind::avatr: return "avatr(" + fmt(params_[0]) + ")";
    case DistortionKind::identity: return "identity";
    case DistortionKind::one_sided_moment:
      return "one_sided_moment(" + fmt(params_[0]) + "," + fmt(params_[1]) +
             ")";
    case DistortionKind::expectile:
      return "expectile(" + fmt(params_[0]) + ")";
    case DistortionKind::proportional_hazard:
      return "proportional_hazard(" + fmt(params_[0]) + ")";
    case DistortionKind::tabulated:
      return "tabulated(" + std::to_string(knots_t_.size()) + " knots)";
  }
  return "?";
}

DistortionBoundReport check_distortion_bound(std::span<const Distortion> family,
                                             const Distortion& g_rho,
                                             double gamma,
                                             std::span<const double> grid) {
  require(!family.empty(), "check_distortion_bound: empty family");
  require(gamma > 0.0 && gamma < 1.0,
          "check_distortion_bound: gamma must lie in (0,1)");
  DistortionBoundReport rep;
  rep.max_derivative_violation = -kInf;
  for (double t : grid) {
    require(t > 0.0 && t < 1.0, "check_distortion_bound: grid must lie in (0,1)");
    double sup_d = -kInf;
    double sup_g = -kInf;
    for (const auto& g : family) {
      sup_d = std::max(sup_d, g.rderiv(t));
      sup_g = std::max(sup_g, g.eval(t));
    }
    const double bound = g_rho.eval(gamma * t) / (gamma * t);
    const double viol = sup_d - bound;
    if (viol > rep.max_derivative_violation) {
      rep.max_derivative_violation = viol;
      rep.worst_t = t;
    }
    rep.max_sup_gap = std::max(rep.max_sup_gap, std::abs(sup_g - g_rho.eval(t)));
  }
  return rep;
}

std::vector<double> unit_grid(int m) {
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[i] = static_cast<double>(i + 1) / (m + 1);
  return out;
}

}  // namespace qhrisk
