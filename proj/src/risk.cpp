#include "qhrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qhrisk/errors.hpp"

namespace qhrisk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// Atoms of a finite law, ascending, with unnormalised positive weights.
struct Weighted {
  std::vector<double> x;
  std::vector<double> w;
  double total = 0.0;
};

Weighted from_samples(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("empty sample");
  Weighted out;
  out.x.assign(samples.begin(), samples.end());
  for (double v : out.x) {
    if (!std::isfinite(v)) throw DomainError("non-finite sample value");
  }
  std::sort(out.x.begin(), out.x.end());
  out.w.assign(out.x.size(), 1.0);
  out.total = static_cast<double>(out.x.size());
  return out;
}

Weighted from_discrete(const Dist& F) {
  Weighted out;
  for (const auto& a : F.atoms()) {
    out.x.push_back(a.x);
    out.w.push_back(a.p);
    out.total += a.p;
  }
  return out;
}

// Law of -X from the law of X.
Weighted negate(Weighted s) {
  std::reverse(s.x.begin(), s.x.end());
  std::reverse(s.w.begin(), s.w.end());
  for (double& v : s.x) v = -v;
  return s;
}

double mean(const Weighted& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) acc += s.w[i] * s.x[i];
  return acc / s.total;
}

// ------------------------------------------------------- quantile quadrature

std::vector<double> levels_with(const Dist& F, std::vector<double> extra) {
  std::vector<double> lv{0.0, 1.0};
  for (double t : F.quantile_breaks()) lv.push_back(t);
  for (double t : extra) {
    if (t > 0.0 && t < 1.0) lv.push_back(t);
  }
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  return lv;
}

// int_0^1 f(F^<-(t), t) dt split at the given levels.
numerics::QuadResult quantile_quad(
    const Dist& F, const std::function<double(double, double)>& f,
    const std::vector<double>& levels, const numerics::QuadOptions& opt) {
  numerics::QuadResult total;
  total.l1 = 0.0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const double a = levels[i];
    const double b = levels[i + 1];
    const bool top = b == 1.0;
    auto r = numerics::integrate_gap(
        [&](double t, double gap) {
          const double q =
              (top && t > 0.5) ? F.upper_quantile(gap) : F.left_inv(t);
          return f(q, t);
        },
        a, b, opt);
    total.value += r.value;
    total.error += r.error;
    total.l1 += r.l1;
    total.converged = total.converged && r.converged;
  }
  return total;
}

// Level breaks of F itself may sit exactly where x-kinks map; F(k) is the
// right level to split at for the kink k.
std::vector<double> kink_levels(const Dist& F, std::span<const double> kinks) {
  std::vector<double> out;
  for (double k : kinks) {
    out.push_back(F.cdf_left(k));
    out.push_back(F.cdf(k));
  }
  return out;
}

void probe_tails(const Distortion& g, const Dist& F) {
  const double med = F.left_inv(0.5);
  const double iqr = F.left_inv(0.75) - F.left_inv(0.25);
  const double scale = std::max({1.0, std::abs(med), iqr});
  const double tol = 1e-10 * scale;
  if (!std::isfinite(F.lower())) {
    auto p = numerics::doubling_tail_probe(
        [&](double x) { return g(F.cdf(x)); }, std::min(0.0, med) - scale, tol);
    if (!p.converged) {
      throw IntegrabilityError("risk of " + F.describe() + " under " +
                               g.name() + ": left tail integral diverges");
    }
  }
  if (!std::isfinite(F.upper())) {
    auto p = numerics::doubling_tail_probe(
        [&](double x) { return g.codistort(F.sf(x)); }, std::max(0.0, med) + scale,
        tol);
    if (!p.converged) {
      throw IntegrabilityError("risk of " + F.describe() + " under " +
                               g.name() + ": right tail integral diverges");
    }
  }
}

double discrete_distortion(const Distortion& g, const Weighted& s) {
  double acc = 0.0;
  double cum = 0.0;
  double prev_g = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    cum += s.w[i];
    const double gi = i + 1 == s.x.size() ? 1.0 : g(cum / s.total);
    acc -= s.x[i] * (gi - prev_g);
    prev_g = gi;
  }
  return acc;
}

// ----------------------------------------------------------------- expectile

// Root of alpha E[(Y - x)^+] = (1 - alpha) E[(x - Y)^+] for a finite law of
// Y; the first-order condition is piecewise linear in x, solved per piece.
double expectile_of(double alpha, const Weighted& y) {
  const std::size_t n = y.x.size();
  double hi_w = y.total;
  double hi_wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) hi_wy += y.w[i] * y.x[i];
  double lo_w = 0.0;
  double lo_wy = 0.0;
  if (alpha == 0.5) return hi_wy / hi_w;
  for (std::size_t k = 0; k < n; ++k) {
    // x in [y_k, y_{k+1}): atoms 0..k lie at or below x
    lo_w += y.w[k];
    lo_wy += y.w[k] * y.x[k];
    hi_w -= y.w[k];
    hi_wy -= y.w[k] * y.x[k];
    const double A = alpha * hi_wy + (1.0 - alpha) * lo_wy;
    const double B = alpha * hi_w + (1.0 - alpha) * lo_w;
    const double x = A / B;
    const double right = k + 1 < n ? y.x[k + 1] : kInf;
    if (x <= right || k + 1 == n) return std::clamp(x, y.x[0], y.x[n - 1]);
  }
  return y.x[n - 1];
}

// ---------------------------------------------------------------- one-sided

double one_sided_of(double a, double p, const Weighted& s) {
  const double m = mean(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double d = m - s.x[i];
    if (d > 0.0) acc += s.w[i] * std::pow(d, p);
  }
  return -m + a * std::pow(acc / s.total, 1.0 / p);
}

void check_osm(double a, double p) {
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("one_sided_moment: a must lie in (0,1]");
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("one_sided_moment: p must be >= 1");
}

void check_expectile(double alpha) {
  if (!(alpha >= 0.5 && alpha < 1.0)) {
    throw DomainError("expectile: alpha must lie in [1/2,1)");
  }
}

void check_hg(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw DomainError("haezendonck: alpha must lie in [0,1)");
  }
}

// ------------------------------------------------------- Haezendonck-Goovaerts

// d > 0 with E[psi((Y - x)^+ / d)] = 1 - alpha, given the expectation map.
double orlicz_gap(const YoungFn& psi, double alpha,
                  const std::function<double(const std::function<double(double)>&)>& expect_y,
                  double x) {
  const double target = 1.0 - alpha;
  if (auto q = psi.exponent()) {
    const double m = expect_y([&](double y) {
      return y > x ? std::pow(y - x, *q) : 0.0;
    });
    return std::pow(m / target, 1.0 / *q);
  }
  auto k = [&](double log_d) {
    const double d = std::exp(log_d);
    return expect_y([&](double y) { return y > x ? psi((y - x) / d) : 0.0; }) -
           target;
  };
  double lo = -1.0;
  double hi = 1.0;
  int guard = 0;
  while (k(lo) < 0.0) {
    lo -= 2.0 * (hi - lo);
    if (++guard > 60) throw NumericError("haezendonck: inner root not bracketed", x, 0);
  }
  guard = 0;
  while (k(hi) > 0.0) {
    hi += 2.0 * (hi - lo);
    if (++guard > 60) throw NumericError("haezendonck: inner root not bracketed", x, 0);
  }
  return std::exp(numerics::bisect_root(k, lo, hi, 1e-15));
}

HgResult hg_minimize(const std::function<double(double)>& premium, double y_min,
                     double y_max) {
  double range = y_max - y_min;
  if (range <= 0.0) range = std::max(1.0, std::abs(y_max));
  const double lo = y_min - range;
  // pi(x) -> y_max as x -> y_max, so the continuous extension closes the
  // bracket there
  auto f = [&](double x) { return x >= y_max ? y_max : premium(x); };
  const double tol = 1e-14 * std::max({1.0, std::abs(lo), std::abs(y_max)});
  auto r = numerics::grid_golden_minimize(f, lo, y_max, 64, tol);
  HgResult out{r.value, r.x};
  if (y_max <= out.value) out = {y_max, y_max};
  return out;
}

}  // namespace

// ------------------------------------------------------------- expectation

double expectation(const Dist& F, const std::function<double(double)>& h,
                   std::span<const double> x_kinks, const EvalOptions& opt) {
  if (F.is_discrete()) {
    double acc = 0.0;
    for (const auto& a : F.atoms()) acc += a.p * h(a.x);
    return acc;
  }
  std::vector<double> kinks(x_kinks.begin(), x_kinks.end());
  auto r = quantile_quad(
      F, [&](double q, double) { return h(q); },
      levels_with(F, kink_levels(F, kinks)), opt.quad);
  if (!r.converged) {
    throw IntegrabilityError("expectation under " + F.describe() +
                             " did not converge (estimate " + fmt(r.value) +
                             ", error " + fmt(r.error) + ")");
  }
  return r.value;
}

// -------------------------------------------------------- distortion risks

double eval_distortion_risk(const Distortion& g, const Dist& F,
                            const EvalOptions& opt) {
  if (opt.probe_tails) probe_tails(g, F);
  auto r = quantile_quad(
      F,
      [&](double q, double t) {
        const double w = g.rderiv(t);
        return w == 0.0 ? 0.0 : q * w;
      },
      levels_with(F, g.kinks()), opt.quad);
  if (!r.converged) {
    throw IntegrabilityError("risk of " + F.describe() + " under " + g.name() +
                             ": quantile integral did not converge (estimate " +
                             fmt(-r.value) + ", error " + fmt(r.error) + ")");
  }
  return -r.value;
}

double eval_distortion_risk_xdomain(const Distortion& g, const Dist& F,
                                    const EvalOptions& opt) {
  if (opt.probe_tails) probe_tails(g, F);
  std::vector<double> pts{0.0};
  for (double e : {F.lower(), F.upper()}) {
    if (std::isfinite(e)) pts.push_back(e);
  }
  for (const auto& a : F.atoms()) pts.push_back(a.x);
  for (double x : F.nonsmooth_points()) pts.push_back(x);
  for (double t : g.kinks()) pts.push_back(F.left_inv(t));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  auto f = [&](double x) {
    const double u = g(F.cdf(x));
    return x < 0.0 ? u : -(1.0 - u);
  };
  double total = 0.0;
  auto piece = [&](double a, double b) {
    // midpoint decides the side of 0; pieces never straddle it
    auto r = numerics::integrate(f, a, b, opt.quad);
    if (!r.converged) {
      throw IntegrabilityError("x-domain risk of " + F.describe() +
                               " did not converge");
    }
    total += r.value;
  };
  if (!std::isfinite(F.lower())) piece(-kInf, pts.front());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) piece(pts[i], pts[i + 1]);
  if (!std::isfinite(F.upper())) piece(pts.back(), kInf);
  return total;
}

double eval_empirical_L_sorted(const Distortion& g,
                               std::span<const double> sorted) {
  if (sorted.empty()) throw DomainError("eval_empirical_L: empty sample");
  const double n = static_cast<double>(sorted.size());
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double gi =
        i + 1 == sorted.size() ? 1.0 : g(static_cast<double>(i + 1) / n);
    acc -= sorted[i] * (gi - prev);
    prev = gi;
  }
  return acc;
}

double eval_empirical_L(const Distortion& g, std::span<const double> samples) {
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  return eval_empirical_L_sorted(g, s);
}

double avatr(double alpha, const Dist& F, const EvalOptions& opt) {
  return eval_distortion_risk(Distortion::avatr(alpha), F, opt);
}

SupResult kusuoka_sup(std::span<const Distortion> family, const Dist& F,
                      double eps_active, const EvalOptions& opt) {
  if (family.empty()) throw DomainError("kusuoka_sup: empty family");
  SupResult out;
  out.value = -kInf;
  for (const auto& g : family) {
    double v;
    try {
      v = eval_distortion_risk(g, F, opt);
    } catch (const IntegrabilityError& e) {
      throw IntegrabilityError("member " + g.name() + ": " + e.what());
    }
    out.member_values.push_back(v);
    out.value = std::max(out.value, v);
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (out.member_values[i] >= out.value - eps_active) out.argmax.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------- examples

double expectile_risk(double alpha, std::span<const double> samples) {
  check_expectile(alpha);
  return expectile_of(alpha, negate(from_samples(samples)));
}

double expectile_risk(double alpha, const Dist& F, const EvalOptions& opt) {
  check_expectile(alpha);
  if (F.is_discrete()) return expectile_of(alpha, negate(from_discrete(F)));
  // Y = -X; foc(x) = alpha E(Y - x)^+ - (1 - alpha) E(x - Y)^+, decreasing
  auto foc = [&](double x) {
    const double kink = -x;
    return expectation(
        F,
        [&](double X) {
          const double d = -X - x;
          return d > 0.0 ? alpha * d : (1.0 - alpha) * d;
        },
        std::span<const double>(&kink, 1), opt);
  };
  const double ey = -expectation(F, [](double X) { return X; }, {}, opt);
  if (alpha == 0.5) return ey;
  const double scale = std::max(
      1.0, F.left_inv(0.75) - F.left_inv(0.25));
  double hi = ey + scale;
  int guard = 0;
  while (foc(hi) > 0.0) {
    hi = ey + 2.0 * (hi - ey);
    if (++guard > 200) throw NumericError("expectile: root not bracketed", hi, 0);
  }
  return numerics::bisect_root(foc, ey, hi,
                               1e-14 * std::max(1.0, std::abs(hi)));
}

double one_sided_moment_risk(double a, double p,
                             std::span<const double> samples) {
  check_osm(a, p);
  return one_sided_of(a, p, from_samples(samples));
}

double one_sided_moment_risk(double a, double p, const Dist& F,
                             const EvalOptions& opt) {
  check_osm(a, p);
  if (F.is_discrete()) return one_sided_of(a, p, from_discrete(F));
  const double m = expectation(F, [](double x) { return x; }, {}, opt);
  const double pen = expectation(
      F, [&](double x) { return x < m ? std::pow(m - x, p) : 0.0; },
      std::span<const double>(&m, 1), opt);
  return -m + a * std::pow(pen, 1.0 / p);
}

YoungFn YoungFn::power(double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw DomainError("young: q must be >= 1");
  YoungFn y;
  y.q_ = q;
  y.name_ = q == 1.0 ? "u" : "u^" + fmt(q);
  return y;
}

YoungFn YoungFn::custom(std::function<double(double)> f, std::string name) {
  if (!f) throw DomainError("young: empty function");
  if (std::abs(f(1.0) - 1.0) > 1e-12 || f(0.0) != 0.0) {
    throw DomainError("young: need psi(0) = 0 and psi(1) = 1");
  }
  YoungFn y;
  y.f_ = std::move(f);
  y.name_ = std::move(name);
  return y;
}

double YoungFn::operator()(double u) const {
  if (q_) return *q_ == 1.0 ? u : std::pow(u, *q_);
  return f_(u);
}

double haezendonck_premium(const YoungFn& psi, double alpha, const Dist& F,
                           double x, const EvalOptions& opt) {
  check_hg(alpha);
  if (!(F.cdf_left(-x) > 0.0)) {
    throw DomainError("haezendonck: P[-X > x] = 0 at x = " + fmt(x));
  }
  const double kink = -x;
  auto expect_y = [&](const std::function<double(double)>& h) {
    return expectation(F, [&](double X) { return h(-X); },
                       std::span<const double>(&kink, 1), opt);
  };
  return x + orlicz_gap(psi, alpha, expect_y, x);
}

HgResult haezendonck_risk(const YoungFn& psi, double alpha,
                          std::span<const double> samples) {
  check_hg(alpha);
  const Weighted y = negate(from_samples(samples));
  auto expect_y = [&](const std::function<double(double)>& h) {
    double acc = 0.0;
    // atoms at or below x contribute h = 0; y is ascending
    for (std::size_t i = y.x.size(); i-- > 0;) {
      const double v = h(y.x[i]);
      if (v == 0.0) break;
      acc += y.w[i] * v;
    }
    return acc / y.total;
  };
  return hg_minimize(
      [&](double x) { return x + orlicz_gap(psi, alpha, expect_y, x); },
      y.x.front(), y.x.back());
}

HgResult haezendonck_risk(const YoungFn& psi, double alpha, const Dist& F,
                          const EvalOptions& opt) {
  check_hg(alpha);
  if (F.is_discrete()) {
    const Weighted y = negate(from_discrete(F));
    auto expect_y = [&](const std::function<double(double)>& h) {
      double acc = 0.0;
      for (std::size_t i = 0; i < y.x.size(); ++i) acc += y.w[i] * h(y.x[i]);
      return acc / y.total;
    };
    return hg_minimize(
        [&](double x) { return x + orlicz_gap(psi, alpha, expect_y, x); },
        y.x.front(), y.x.back());
  }
  const double y_lo = -F.left_inv(1.0 - 1e-3);
  const double y_hi = std::isfinite(F.lower()) ? -F.lower() : -F.left_inv(1e-9);
  return hg_minimize(
      [&](double x) { return haezendonck_premium(psi, alpha, F, x, opt); }, y_lo,
      y_hi);
}

// ------------------------------------------------------------- evaluator

std::string to_string(RiskKind kind) {
  switch (kind) {
    case RiskKind::distortion: return "distortion";
    case RiskKind::kusuoka_sup: return "kusuoka_sup";
    case RiskKind::one_sided_moment: return "one_sided_moment";
    case RiskKind::expectile: return "expectile";
    case RiskKind::haezendonck: return "haezendonck";
  }
  return "unknown";
}

RiskEvaluator RiskEvaluator::distortion(Distortion g) {
  RiskEvaluator ev(RiskKind::distortion);
  ev.family_.push_back(std::move(g));
  return ev;
}

RiskEvaluator RiskEvaluator::kusuoka_sup(std::vector<Distortion> family,
                                         double eps_active) {
  if (family.empty()) throw DomainError("kusuoka_sup: empty family");
  if (!(eps_active >= 0.0)) throw DomainError("kusuoka_sup: eps_active must be >= 0");
  RiskEvaluator ev(RiskKind::kusuoka_sup);
  ev.family_ = std::move(family);
  ev.params_ = {eps_active};
  return ev;
}

RiskEvaluator RiskEvaluator::one_sided_moment(double a, double p) {
  check_osm(a, p);
  RiskEvaluator ev(RiskKind::one_sided_moment);
  ev.params_ = {a, p};
  return ev;
}

RiskEvaluator RiskEvaluator::expectile(double alpha) {
  check_expectile(alpha);
  RiskEvaluator ev(RiskKind::expectile);
  ev.params_ = {alpha};
  return ev;
}

RiskEvaluator RiskEvaluator::haezendonck(YoungFn psi, double alpha) {
  check_hg(alpha);
  RiskEvaluator ev(RiskKind::haezendonck);
  ev.params_ = {alpha};
  ev.psi_ = std::move(psi);
  return ev;
}

double RiskEvaluator::eval(const Dist& F, const EvalOptions& opt) const {
  switch (kind_) {
    case RiskKind::distortion:
      if (F.is_discrete()) return discrete_distortion(family_[0], from_discrete(F));
      return eval_distortion_risk(family_[0], F, opt);
    case RiskKind::kusuoka_sup: {
      if (F.is_discrete()) {
        const Weighted s = from_discrete(F);
        double best = -kInf;
        for (const auto& g : family_) best = std::max(best, discrete_distortion(g, s));
        return best;
      }
      return qhrisk::kusuoka_sup(family_, F, params_[0], opt).value;
    }
    case RiskKind::one_sided_moment:
      return one_sided_moment_risk(params_[0], params_[1], F, opt);
    case RiskKind::expectile:
      return expectile_risk(params_[0], F, opt);
    case RiskKind::haezendonck:
      return haezendonck_risk(*psi_, params_[0], F, opt).value;
  }
  throw DomainError("unknown risk kind");
}

double RiskEvaluator::eval_samples(std::span<const double> samples) const {
  switch (kind_) {
    case RiskKind::distortion:
      return eval_empirical_L(family_[0], samples);
    case RiskKind::kusuoka_sup: {
      std::vector<double> s(samples.begin(), samples.end());
      if (s.empty()) throw DomainError("empty sample");
      std::sort(s.begin(), s.end());
      double best = -kInf;
      for (const auto& g : family_) best = std::max(best, eval_empirical_L_sorted(g, s));
      return best;
    }
    case RiskKind::one_sided_moment:
      return one_sided_moment_risk(params_[0], params_[1], samples);
    case RiskKind::expectile:
      return expectile_risk(params_[0], samples);
    case RiskKind::haezendonck:
      return haezendonck_risk(*psi_, params_[0], samples).value;
  }
  throw DomainError("unknown risk kind");
}

std::string RiskEvaluator::name() const {
  switch (kind_) {
    case RiskKind::distortion: return family_[0].name();
    case RiskKind::kusuoka_sup: {
      std::string s = "sup{";
      for (std::size_t i = 0; i < family_.size(); ++i) {
        if (i) s += ";";
        s += family_[i].name();
      }
      return s + "}";
    }
    case RiskKind::one_sided_moment:
      return "one_sided_moment(" + fmt(params_[0]) + "," + fmt(params_[1]) + ")";
    case RiskKind::expectile: return "expectile(" + fmt(params_[0]) + ")";
    case RiskKind::haezendonck:
      return "hg(" + psi_->name() + "," + fmt(params_[0]) + ")";
  }
  return "unknown";
}

std::optional<Distortion> RiskEvaluator::g_rho_closed_form() const {
  switch (kind_) {
    case RiskKind::distortion: return family_[0];
    case RiskKind::kusuoka_sup:
      if (family_.size() == 1) return family_[0];
      return std::nullopt;
    case RiskKind::one_sided_moment:
      return Distortion::one_sided_moment(params_[0], params_[1]);
    case RiskKind::expectile: return Distortion::expectile(params_[0]);
    case RiskKind::haezendonck: return std::nullopt;
  }
  return std::nullopt;
}

double g_rho_from_measure(const RiskEvaluator& ev, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("g_rho: t must lie in [0,1]");
  return ev.eval(make_two_point(t));
}

}  // namespace qhrisk
