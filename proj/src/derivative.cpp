#include "qhrisk/derivative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "qhrisk/errors.hpp"
#include "qhrisk/processes.hpp"

namespace qhrisk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// Points inside (lo, hi) where g'(F0(.)) or F0 is not smooth.
std::vector<double> split_points(const Distortion& g, const Dist& F0,
                                 double lo, double hi,
                                 const std::vector<double>& extra = {}) {
  std::vector<double> pts = extra;
  for (double x : F0.nonsmooth_points()) pts.push_back(x);
  for (const auto& a : F0.atoms()) pts.push_back(a.x);
  for (double t : g.kinks()) pts.push_back(F0.left_inv(t));
  std::vector<double> out{lo};
  std::sort(pts.begin(), pts.end());
  for (double p : pts) {
    if (p > lo && p < hi && p > out.back()) out.push_back(p);
  }
  out.push_back(hi);
  return out;
}

// Right end of the region where g'(F0(x)) can be nonzero.
double active_right(const Distortion& g, const Dist& F0) {
  const double a = g.active_upper();
  if (a >= 1.0) return F0.upper();
  return std::min(F0.upper(), F0.left_inv(a));
}

// g'(t) for t = F0(x) with x left of active_right; rounding in F0 must not
// push t onto the flat part.
double deriv_at(const Distortion& g, double t) {
  const double a = g.active_upper();
  if (t >= a && a < 1.0) t = std::nextafter(a, 0.0);
  return g.rderiv_clamped(t);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

}  // namespace

void DerivativeConfig::validate() const {
  if (!(eps_active > 0.0)) throw DomainError("derivative config: eps_active must be > 0");
  if (!(tolerance > 0.0)) throw DomainError("derivative config: tolerance must be > 0");
  if (!(quad.rel_tol > 0.0 && quad.abs_tol > 0.0)) {
    throw DomainError("derivative config: quadrature tolerances must be > 0");
  }
  for (const auto* s : {&eps_schedule, &h_schedule}) {
    if (s->empty()) throw DomainError("derivative config: empty schedule");
    if (!(s->front() > 0.0) || !strictly_decreasing(*s) || !(s->back() > 0.0)) {
      throw DomainError(
          "derivative config: schedules must be positive and strictly decreasing");
    }
  }
}

double qh_derivative_single(const Distortion& g, const Dist& F0,
                            const Direction& v, const DerivativeConfig& cfg) {
  cfg.validate();
  if (v.empty()) return 0.0;
  if (!cfg.override_checks) {
    const auto m = membership_C(v, F0);
    if (!m.member) {
      throw PreconditionError("direction is not in the tangent space: " +
                              m.reasons.front());
    }
  }
  auto [a, b] = v.hull();
  const double lo = std::max(a, F0.lower());
  const double hi = std::min(b, active_right(g, F0));
  if (!(lo < hi)) return 0.0;
  const auto pts = split_points(g, F0, lo, hi, v.breakpoints());
  double total = 0.0;
  double err = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto r = numerics::integrate(
        [&](double x) {
          const double vx = v(x);
          return vx == 0.0 ? 0.0 : deriv_at(g, F0.cdf(x)) * vx;
        },
        pts[i], pts[i + 1], cfg.quad);
    total += r.value;
    err += r.error;
    ok = ok && r.converged;
  }
  if (!ok) {
    throw NumericError("derivative quadrature did not converge", total, err);
  }
  return total;
}

FamilyDerivative qh_derivative_family(std::span<const Distortion> family,
                                      const Dist& F0, const Direction& v,
                                      const DerivativeConfig& cfg) {
  cfg.validate();
  if (family.empty()) throw DomainError("qh_derivative_family: empty family");
  FamilyDerivative out;
  double best = -kInf;
  for (const auto& g : family) {
    out.member_risks.push_back(eval_distortion_risk(g, F0));
    best = std::max(best, out.member_risks.back());
  }
  std::vector<double> deriv(family.size(), std::numeric_limits<double>::quiet_NaN());
  auto derivative_of = [&](std::size_t k) {
    if (std::isnan(deriv[k])) deriv[k] = qh_derivative_single(family[k], F0, v, cfg);
    return deriv[k];
  };
  auto active_at = [&](double eps) {
    std::vector<std::size_t> act;
    for (std::size_t k = 0; k < family.size(); ++k) {
      if (out.member_risks[k] >= best - eps) act.push_back(k);
    }
    return act;
  };
  for (double eps : cfg.eps_schedule) {
    EpsStep step;
    step.eps = eps;
    step.active = active_at(eps);
    if (step.active.empty()) {
      throw std::logic_error("empty active set at eps = " + fmt(eps));
    }
    step.sup = -kInf;
    for (std::size_t k : step.active) step.sup = std::max(step.sup, derivative_of(k));
    out.sweep.push_back(std::move(step));
  }
  const auto& last = out.sweep.back();
  out.value = last.sup;
  out.active = last.active;
  out.stabilized = out.sweep.size() >= 2 &&
                   out.sweep[out.sweep.size() - 2].active == last.active;
  out.maximizers = active_at(cfg.eps_active);
  out.maximizer_value = -kInf;
  for (std::size_t k : out.maximizers) {
    out.maximizer_value = std::max(out.maximizer_value, derivative_of(k));
  }
  for (std::size_t k = 0; k < family.size(); ++k) {
    out.member_derivatives.push_back(deriv[k]);
  }
  return out;
}

double qh_derivative(const RiskEvaluator& ev, const Dist& F0,
                     const Direction& v, const DerivativeConfig& cfg) {
  switch (ev.kind()) {
    case RiskKind::distortion:
      return qh_derivative_single(ev.family()[0], F0, v, cfg);
    case RiskKind::kusuoka_sup:
      return qh_derivative_family(ev.family(), F0, v, cfg).value;
    default:
      throw DomainError("derivative needs a distortion or a finite family; " +
                        ev.name() + " has no supplied family");
  }
}

QuotientReport difference_quotient_check(const RiskEvaluator& ev, const Dist& F0,
                                         const Direction& v, double claimed,
                                         const DerivativeConfig& cfg) {
  cfg.validate();
  QuotientReport rep;
  rep.claimed = claimed;
  const double r0 = ev.eval(F0);
  std::vector<double> errs;
  for (double h : cfg.h_schedule) {
    QuotientRow row;
    row.h = h;
    const auto df = is_distribution_function(F0, v, h);
    if (!df.ok) {
      row.admissible = false;
      row.note = df.reason;
      rep.rows.push_back(row);
      continue;
    }
    row.quotient = (ev.eval(perturb(F0, v, h)) - r0) / h;
    row.error = std::abs(row.quotient - claimed);
    errs.push_back(row.error);
    rep.rows.push_back(row);
  }
  if (errs.empty()) {
    throw DomainError(
        "F0 + h v is not a distribution function for any h in the schedule; "
        "use a smaller direction");
  }
  rep.final_error = errs.back();
  // R carries quadrature noise of about 1e-10 |R|, amplified by 1/h in the
  // quotient; increases below that floor do not count against the trend
  const double noise = 1e-10 * std::max(1.0, std::abs(r0));
  rep.decreasing = true;
  std::size_t prev = rep.rows.size();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (!rep.rows[i].admissible) continue;
    if (prev < rep.rows.size() &&
        rep.rows[i].error > rep.rows[prev].error + 2.0 * noise / rep.rows[i].h) {
      rep.decreasing = false;
    }
    prev = i;
  }
  rep.converging = rep.final_error < cfg.tolerance &&
                   (rep.decreasing || rep.final_error <= 1e-9);
  return rep;
}

LipschitzReport quasi_lipschitz_check(const RiskEvaluator& ev, const Dist& F0,
                                      std::span<const Direction> directions,
                                      std::span<const double> scales,
                                      const WeightFn& phi) {
  LipschitzReport rep;
  const double r0 = ev.eval(F0);
  rep.bounded = true;
  bool any = false;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const double norm = weighted_sup_norm(directions[d], phi);
    if (!(norm > 0.0)) {
      throw DomainError("quasi_lipschitz_check: direction " + std::to_string(d) +
                        " has zero norm");
    }
    // ratios may drift at coarse scales; only growth that persists down to the
    // finest admissible scale counts against boundedness
    double prev = -1.0;
    bool growing = false;
    for (double s : scales) {
      LipschitzRow row;
      row.direction = d;
      row.scale = s;
      if (!is_distribution_function(F0, directions[d], s).ok) {
        row.admissible = false;
        rep.rows.push_back(row);
        continue;
      }
      any = true;
      row.ratio = std::abs(ev.eval(perturb(F0, directions[d], s)) - r0) / (s * norm);
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      growing = prev >= 0.0 && row.ratio > 1.05 * prev + 1e-9;
      prev = row.ratio;
      rep.rows.push_back(row);
    }
    if (growing) rep.bounded = false;
  }
  if (!any) {
    throw DomainError("quasi_lipschitz_check: no admissible (scale, direction) pair");
  }
  return rep;
}

double asymptotic_variance_iid(const Distortion& g, const Dist& F0,
                               const DerivativeConfig& cfg) {
  const double lo = F0.lower();
  const double hi = active_right(g, F0);
  if (!(lo < hi)) return 0.0;
  const auto pts = split_points(g, F0, lo, hi);
  numerics::QuadOptions inner_opt = cfg.quad;
  inner_opt.rel_tol = std::max(cfg.quad.rel_tol, 1e-11);

  // I(x) = int_x^hi g'(F0(y)) (1 - F0(y)) dy
  auto inner = [&](double x) {
    double acc = 0.0;
    double from = x;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i] <= from) continue;
      auto r = numerics::integrate(
          [&](double y) { return deriv_at(g, F0.cdf(y)) * F0.sf(y); }, from,
          pts[i], inner_opt);
      if (!r.converged) {
        throw NumericError("asymptotic variance: inner quadrature did not converge at x = " + fmt(x), r.value, r.error);
      }
      acc += r.value;
      from = pts[i];
    }
    return acc;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto r = numerics::integrate(
        [&](double x) {
          const double Fx = F0.cdf(x);
          if (Fx == 0.0) return 0.0;
          return 2.0 * deriv_at(g, Fx) * Fx * inner(x);
        },
        pts[i], pts[i + 1], cfg.quad);
    total += numerics::require_converged(r, "asymptotic variance");
  }
  return total;
}

// ------------------------------------------------------ bridge functionals

double BridgeFunctional::apply(std::size_t member,
                               std::span<const double> bridge) const {
  const auto& w = weights.at(member);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * bridge[i];
  return acc;
}

double BridgeFunctional::variance(std::size_t member) const {
  // w' S w with S_ij = u_min (1 - u_max); O(m) via prefix sums
  const auto& w = weights.at(member);
  const std::size_t m = w.size();
  std::vector<double> suffix(m + 1, 0.0);  // sum_{j>=i} w_j (1 - u_j)
  for (std::size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] + w[i] * (1.0 - levels[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    // diagonal once, j > i twice
    acc += w[i] * levels[i] * (w[i] * (1.0 - levels[i]) + 2.0 * suffix[i + 1]);
  }
  return acc;
}

BridgeFunctional bridge_functional(std::span<const Distortion> family,
                                   const Dist& F0, std::size_t cells) {
  if (family.empty()) throw DomainError("bridge_functional: empty family");
  if (cells < 4) throw DomainError("bridge_functional: need at least 4 cells");
  double top = 0.0;
  std::set<double> kinks;
  for (const auto& g : family) {
    top = std::max(top, g.active_upper());
    for (double k : g.kinks()) kinks.insert(k);
  }
  // cell boundaries: quadratic clustering at 0, cosine clustering at both
  // ends when the active range reaches 1
  std::vector<double> edges;
  for (std::size_t i = 0; i <= cells; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(cells);
    edges.push_back(top < 1.0 ? top * s * s : 0.5 * (1.0 - std::cos(M_PI * s)));
  }
  for (double k : kinks) {
    if (k > 0.0 && k < top) edges.push_back(k);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  BridgeFunctional out;
  const std::size_t m = edges.size() - 1;
  out.levels.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.levels[i] = 0.5 * (edges[i] + edges[i + 1]);
  // quantile at the cell edges; infinite ends are cut back to the midpoint
  std::vector<double> q(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double u = edges[i];
    double x = u <= 0.0 ? F0.lower() : (u >= 1.0 ? F0.upper() : F0.left_inv(u));
    if (!std::isfinite(x)) x = F0.left_inv(i == 0 ? out.levels.front() : out.levels.back());
    q[i] = x;
  }
  for (const auto& g : family) {
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = g.rderiv(out.levels[i]) * (q[i + 1] - q[i]);
    }
    out.weights.push_back(std::move(w));
  }
  return out;
}

BridgeVarianceMC variance_mc_bridge(const Distortion& g, const Dist& F0,
                                    std::size_t draws, std::uint64_t seed,
                                    std::size_t cells) {
  if (draws < 2) throw DomainError("variance_mc_bridge: need at least 2 draws");
  const Distortion fam[] = {g};
  const auto fine = bridge_functional(fam, F0, cells);
  // coarse control: blocks of consecutive cells collapsed onto their middle
  // level
  const std::size_t m = fine.levels.size();
  const std::size_t block = std::max<std::size_t>(1, m / 40);
  BridgeFunctional coarse;
  std::vector<std::size_t> pick;
  for (std::size_t start = 0; start < m; start += block) {
    const std::size_t end = std::min(m, start + block);
    const std::size_t mid = start + (end - start) / 2;
    double w = 0.0;
    for (std::size_t i = start; i < end; ++i) w += fine.weights[0][i];
    coarse.levels.push_back(fine.levels[mid]);
    pick.push_back(mid);
    if (coarse.weights.empty()) coarse.weights.emplace_back();
    coarse.weights[0].push_back(w);
  }
  const double ez2 = coarse.variance(0);

  Rng rng(seed);
  std::vector<double> y2(draws), z2(draws);
  std::vector<double> sub(pick.size());
  for (std::size_t d = 0; d < draws; ++d) {
    const auto W = sample_standard_bridge(fine.levels, rng);
    const double y = fine.apply(0, W);
    for (std::size_t j = 0; j < pick.size(); ++j) sub[j] = W[pick[j]];
    const double z = coarse.apply(0, sub);
    y2[d] = y * y;
    z2[d] = z * z;
  }
  const double N = static_cast<double>(draws);
  double my = 0.0, mz = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    my += y2[d];
    mz += z2[d];
  }
  my /= N;
  mz /= N;
  double cyz = 0.0, czz = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    cyz += (y2[d] - my) * (z2[d] - mz);
    czz += (z2[d] - mz) * (z2[d] - mz);
  }
  const double b = czz > 0.0 ? cyz / czz : 0.0;
  BridgeVarianceMC out;
  out.draws = draws;
  out.raw_variance = my;
  out.variance = my - b * (mz - ez2);
  double res = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const double e = (y2[d] - my) - b * (z2[d] - mz);
    res += e * e;
  }
  out.std_error = std::sqrt(res / (N - 1.0) / N);
  return out;
}

}  // namespace qhrisk
