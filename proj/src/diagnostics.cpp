#include "qhrisk/diagnostics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "qhrisk/errors.hpp"

namespace qhrisk {
namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

bool is_one(double beta) { return std::abs(beta - 1.0) <= 1e-12; }

std::string kind_name(TailBehavior::Kind k) {
  switch (k) {
    case TailBehavior::Kind::bounded: return "bounded";
    case TailBehavior::Kind::power: return "power";
    case TailBehavior::Kind::exponential: return "exponential";
    case TailBehavior::Kind::unknown: return "unknown";
  }
  return "unknown";
}

enum class Side { ok, bad, unknown };

Side left_condition(const TailBehavior& t, double beta, double lambda,
                    std::string& why) {
  switch (t.kind) {
    case TailBehavior::Kind::bounded:
      why += "left tail bounded";
      return Side::ok;
    case TailBehavior::Kind::power: {
      const double lhs = t.exponent * (1.0 - beta);
      const bool ok = lhs < lambda - 1.0;
      why += "left power tail: kappa(1-beta) = " + fmt(lhs) + (ok ? " < " : " >= ") +
             "lambda-1 = " + fmt(lambda - 1.0);
      return ok ? Side::ok : Side::bad;
    }
    case TailBehavior::Kind::exponential:
      if (!is_one(beta)) {
        why += "left exponential tail with beta = " + fmt(beta) + " < 1";
        return Side::bad;
      }
      why += lambda > 1.0 ? "left exponential tail, beta = 1, lambda>1"
                          : "left exponential tail, beta = 1, lambda<=1";
      return lambda > 1.0 ? Side::ok : Side::bad;
    case TailBehavior::Kind::unknown:
      why += "left tail class unknown";
      return Side::unknown;
  }
  return Side::unknown;
}

Side right_condition(const TailBehavior& t, double lambda, std::string& why) {
  switch (t.kind) {
    case TailBehavior::Kind::bounded:
      why += "right tail bounded";
      return Side::ok;
    case TailBehavior::Kind::power:
    case TailBehavior::Kind::exponential:
      why += lambda > 1.0 ? "right tail unbounded, lambda>1"
                          : "right tail unbounded, lambda<=1";
      return lambda > 1.0 ? Side::ok : Side::bad;
    case TailBehavior::Kind::unknown:
      why += "right tail class unknown";
      return Side::unknown;
  }
  return Side::unknown;
}

// Split [a, b] at the given points and integrate piece by piece.
numerics::QuadResult integrate_split(const std::function<double(double)>& f,
                                     double a, double b,
                                     std::vector<double> cuts,
                                     const numerics::QuadOptions& opt) {
  std::vector<double> pts{a};
  std::sort(cuts.begin(), cuts.end());
  for (double c : cuts) {
    if (c > pts.back() && c < b) pts.push_back(c);
  }
  pts.push_back(b);
  numerics::QuadResult total;
  total.converged = true;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto r = numerics::integrate(f, pts[i], pts[i + 1], opt);
    total.value += r.value;
    total.error += r.error;
    total.l1 += r.l1;
    total.converged = total.converged && r.converged && std::isfinite(r.value);
  }
  return total;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undecidable: return "undecidable";
    case Verdict::converging: return "converging";
    case Verdict::diverging_or_slow: return "diverging-or-slow";
    case Verdict::sufficient_condition_only: return "sufficient-condition-only";
  }
  return "undecidable";
}

void TailClass::validate() const {
  for (const auto* t : {&left, &right}) {
    if ((t->kind == TailBehavior::Kind::power ||
         t->kind == TailBehavior::Kind::exponential) &&
        !(t->exponent > 0.0)) {
      throw DomainError("tail class: declared exponents must be > 0");
    }
  }
}

double g_rho_exponent(const RiskEvaluator& ev) {
  switch (ev.kind()) {
    case RiskKind::distortion: return ev.family().front().small_t_exponent();
    case RiskKind::kusuoka_sup: {
      // the sup is dominated near 0 by the member with the smallest exponent
      double b = 1.0;
      for (const auto& g : ev.family()) b = std::min(b, g.small_t_exponent());
      return b;
    }
    case RiskKind::one_sided_moment: return 1.0 / ev.params()[1];
    case RiskKind::expectile: return 1.0;
    case RiskKind::haezendonck: {
      // limsup psi(x)/x^{1/beta} < inf for psi(u) = u^q with beta = 1/q
      const auto q = ev.young()->exponent();
      return q ? 1.0 / *q : std::nan("");
    }
  }
  return std::nan("");
}

TailClass tail_class(const Dist& F0, double beta) {
  TailClass t;
  t.left = F0.left_tail();
  t.right = F0.right_tail();
  t.beta = beta;
  return t;
}

TailClass tail_class(const Dist& F0, const RiskEvaluator& ev) {
  TailClass t = tail_class(F0, g_rho_exponent(ev));
  t.sufficient_only = ev.kind() == RiskKind::haezendonck;
  return t;
}

SymbolicVerdict check_A22b_symbolic(const TailClass& tails, double lambda) {
  SymbolicVerdict out;
  if (!std::isfinite(tails.beta) || !(tails.beta > 0.0) || tails.beta > 1.0) {
    out.reason = "exponent beta of g_rho not available";
    return out;
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    out.reason = "weight is not of the form (1+|x|)^lambda";
    return out;
  }
  std::string why;
  const Side l = left_condition(tails.left, tails.beta, lambda, why);
  why += "; ";
  const Side r = right_condition(tails.right, lambda, why);
  out.reason = why;
  if (l == Side::bad || r == Side::bad) {
    out.verdict = Verdict::fails;
  } else if (l == Side::unknown || r == Side::unknown) {
    out.verdict = Verdict::undecidable;
  } else {
    out.verdict = Verdict::holds;
  }
  if (tails.sufficient_only) {
    if (out.verdict == Verdict::holds) {
      out.verdict = Verdict::sufficient_condition_only;
    } else if (out.verdict == Verdict::fails) {
      out.verdict = Verdict::undecidable;
      out.reason += " (sufficient test only; failure is not conclusive)";
    }
  }
  return out;
}

IntegrabilityProbe probe_integrability(const std::function<double(double)>& g_rho,
                                       const Dist& F0, const WeightFn& phi,
                                       double gamma, double tol,
                                       std::span<const double> g_kinks) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError("probe_integrability: gamma must lie in (0,1)");
  }
  IntegrabilityProbe out;
  out.gamma = gamma;
  // Where F0 underflows the ratio is replaced by its limit at 0+, or by
  // +inf when the ratio is still growing there (beta < 1).
  const double r_min = g_rho(gamma * DBL_MIN) / DBL_MIN;
  const double r_ref = g_rho(gamma * 1e-150) / 1e-150;
  const double r_zero = r_min > 1.01 * r_ref ? numerics::kInf : r_min;
  auto f = [&](double x) {
    const double F = F0.cdf(x);
    if (F <= 0.0) return r_zero / phi(x);
    return g_rho(gamma * F) / (F * phi(x));
  };
  const double lo = F0.lower();
  const double hi = F0.upper();
  const double med = F0.left_inv(0.5);
  const double a = std::isfinite(lo) ? lo : std::min(med, 0.0) - 1.0;
  const double b = std::isfinite(hi) ? hi : std::max(med, 0.0) + 1.0;

  std::vector<double> cuts = F0.nonsmooth_points();
  for (const auto& at : F0.atoms()) cuts.push_back(at.x);
  cuts.push_back(0.0);
  cuts.push_back(med);
  for (double k : g_kinks) {
    if (k / gamma < 1.0) cuts.push_back(F0.left_inv(k / gamma));
  }
  numerics::QuadOptions opt;
  opt.rel_tol = 1e-9;
  opt.abs_tol = tol * 1e-3;
  const auto body = integrate_split(f, a, b, cuts, opt);
  out.body = body.value;
  bool ok = body.converged;
  if (!ok) out.note = "quadrature over [" + fmt(a) + "," + fmt(b) + "] did not settle";

  if (!std::isfinite(lo)) {
    out.left_probed = true;
    out.left = numerics::doubling_tail_probe(f, a, tol);
    ok = ok && out.left.converged;
    out.body += out.left.total;
  }
  if (!std::isfinite(hi)) {
    out.right_probed = true;
    out.right = numerics::doubling_tail_probe(f, b, tol);
    ok = ok && out.right.converged;
    out.body += out.right.total;
  }
  out.verdict = ok ? Verdict::converging : Verdict::diverging_or_slow;
  return out;
}

IntegrabilityProbe probe_integrability(const Distortion& g_rho, const Dist& F0,
                                       const WeightFn& phi, double gamma,
                                       double tol) {
  const auto kinks = g_rho.kinks();
  return probe_integrability([&](double t) { return g_rho(t); }, F0, phi, gamma,
                             tol, kinks);
}

MomentCheck check_weight_moment(const Dist& F0, const WeightFn& phi, double q) {
  if (!(q > 0.0)) throw DomainError("weight moment: power must be > 0");
  MomentCheck out;
  const auto lambda = phi.exponent();
  if (lambda && *lambda == 0.0) {
    out.verdict = Verdict::holds;
    out.method = "closed_form";
    out.value = 1.0;
    out.reason = "phi == 1";
    return out;
  }
  auto h = [&](double x) { return std::pow(phi(x), q); };
  auto by_quadrature = [&]() {
    try {
      out.value = expectation(F0, h, std::vector<double>{0.0});
      out.verdict = Verdict::holds;
    } catch (const IntegrabilityError& e) {
      out.verdict = Verdict::diverging_or_slow;
      out.value = numerics::kInf;
      out.reason += e.what();
    } catch (const NumericError& e) {
      out.verdict = Verdict::diverging_or_slow;
      out.value = numerics::kInf;
      out.reason += e.what();
    }
  };
  if (!lambda) {
    out.method = "quadrature";
    by_quadrature();
    return out;
  }
  // E (1+|X|)^e is finite iff e < kappa on every power tail
  const double e = *lambda * q;
  bool unknown = false;
  bool finite = true;
  std::string why;
  for (const auto& [side, t] : {std::pair{"left", F0.left_tail()},
                                std::pair{"right", F0.right_tail()}}) {
    if (!why.empty()) why += "; ";
    why += std::string(side) + " " + kind_name(t.kind);
    if (t.kind == TailBehavior::Kind::unknown) {
      unknown = true;
    } else if (t.kind == TailBehavior::Kind::power) {
      const bool ok = e < t.exponent;
      why += ": moment order " + fmt(e) + (ok ? " < " : " >= ") + "kappa = " +
             fmt(t.exponent);
      finite = finite && ok;
    }
  }
  out.reason = why;
  if (!finite) {
    out.verdict = Verdict::fails;
    out.method = "tail_exponent";
    out.value = numerics::kInf;
    return out;
  }
  if (unknown) {
    out.method = "quadrature";
    out.reason += "; ";
    by_quadrature();
    return out;
  }
  out.method = "tail_exponent";
  out.verdict = Verdict::holds;
  try {
    out.value = expectation(F0, h, std::vector<double>{0.0});
  } catch (const std::runtime_error&) {
    out.value = std::nan("");
  }
  return out;
}

MomentCheck check_clt_weight(const Dist& F0, const WeightFn& phi) {
  return check_weight_moment(F0, phi, 2.0);
}

MomentCheck check_strong_law_weight(const Dist& F0, const WeightFn& phi, double r) {
  if (!(r >= 0.0 && r < 0.5)) {
    throw DomainError("strong law weight: r must lie in [0, 1/2), got " + fmt(r));
  }
  return check_weight_moment(F0, phi, 1.0 / (1.0 - r));
}

SmoothnessCheck check_A22a(const Dist& F0) {
  SmoothnessCheck out;
  if (F0.is_discrete() || !F0.atoms().empty()) {
    out.verdict = Verdict::fails;
    out.reason = "F0 has atoms (step function)";
    return out;
  }
  switch (F0.family()) {
    case DistFamily::uniform:
    case DistFamily::exponential:
    case DistFamily::pareto:
    case DistFamily::normal:
    case DistFamily::piecewise_linear:
      out.verdict = Verdict::holds;
      out.exceptional = F0.nonsmooth_points();
      out.reason = "declared smooth family";
      return out;
    case DistFamily::perturbed:
      out.reason = "perturbed distribution functions carry no smoothness metadata";
      return out;
    default: break;
  }
  if (!F0.has_density()) {
    out.reason = "no density available";
    return out;
  }
  // positivity of the density between consecutive quantiles catches flat
  // stretches inside the support
  const int n = 400;
  double prev = F0.left_inv(1.0 / (n + 1));
  for (int k = 2; k <= n; ++k) {
    const double x = F0.left_inv(static_cast<double>(k) / (n + 1));
    for (double y : {x, 0.5 * (prev + x)}) {
      const auto d = F0.density(y);
      if (!d || !(*d > 0.0)) {
        out.verdict = Verdict::fails;
        out.reason = "density vanishes at x = " + fmt(y) + " inside the support";
        return out;
      }
    }
    prev = x;
  }
  out.verdict = Verdict::holds;
  out.exceptional = F0.nonsmooth_points();
  out.reason = "density positive on a quantile grid";
  return out;
}

nlohmann::json to_json(const numerics::TailProbe& p) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : p.trace) trace.push_back({{"end", s.end}, {"increment", s.increment}});
  return {{"converged", p.converged}, {"total", p.total}, {"trace", trace}};
}

nlohmann::json to_json(const IntegrabilityProbe& p) {
  nlohmann::json j{{"verdict", to_string(p.verdict)},
                   {"gamma", p.gamma},
                   {"integral", p.body}};
  if (p.left_probed) j["left_tail"] = to_json(p.left);
  if (p.right_probed) j["right_tail"] = to_json(p.right);
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

nlohmann::json to_json(const SymbolicVerdict& v) {
  return {{"verdict", to_string(v.verdict)}, {"reason", v.reason}};
}

nlohmann::json to_json(const MomentCheck& m) {
  nlohmann::json j{{"verdict", to_string(m.verdict)},
                   {"method", m.method},
                   {"reason", m.reason}};
  if (std::isfinite(m.value)) {
    j["value"] = m.value;
  } else {
    j["value"] = std::isnan(m.value) ? "nan" : "inf";
  }
  return j;
}

nlohmann::json to_json(const SmoothnessCheck& s) {
  return {{"verdict", to_string(s.verdict)},
          {"exceptional_points", s.exceptional},
          {"reason", s.reason}};
}

}  // namespace qhrisk
