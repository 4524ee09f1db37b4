#include "qhrisk/distribution.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "qhrisk/errors.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

double canonical_open(Rng& rng) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0 && u < 1.0) return u;
  }
}

bool converged(double lo, double hi) {
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  const double mid = lo + 0.5 * (hi - lo);
  return hi - lo <= 1e-12 * scale || mid <= lo || mid >= hi;
}

// ---------------------------------------------------------------- uniform

class UniformModel final : public DistModel {
 public:
  UniformModel(double a, double b) : a_(a), b_(b) {}
  double cdf(double x) const override {
    if (x < a_) return 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
  }
  double sf(double x) const override {
    if (x < a_) return 1.0;
    if (x >= b_) return 0.0;
    return (b_ - x) / (b_ - a_);
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    return a_ + std::min(s, 1.0) * (b_ - a_);
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    return a_ + std::max(s, 0.0) * (b_ - a_);
  }
  double upper_quantile(double q) const override { return b_ - q * (b_ - a_); }
  double lower() const override { return a_; }
  double upper() const override { return b_; }
  std::optional<double> density(double x) const override {
    return (x >= a_ && x < b_) ? 1.0 / (b_ - a_) : 0.0;
  }
  bool has_density() const override { return true; }
  double sample(Rng& rng) const override {
    return a_ + canonical_open(rng) * (b_ - a_);
  }
  DistFamily family() const override { return DistFamily::uniform; }
  std::vector<double> params() const override { return {a_, b_}; }
  TailBehavior left_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  TailBehavior right_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  std::string describe() const override {
    return "uniform(" + fmt(a_) + "," + fmt(b_) + ")";
  }

 private:
  double a_, b_;
};

// ------------------------------------------------------------ exponential

class ExponentialModel final : public DistModel {
 public:
  explicit ExponentialModel(double rate) : rate_(rate) {}
  double cdf(double x) const override {
    return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x);
  }
  double sf(double x) const override {
    return x <= 0.0 ? 1.0 : std::exp(-rate_ * x);
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    if (s >= 1.0) return kInf;
    return -std::log1p(-s) / rate_;
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    if (s <= 0.0) return 0.0;
    return -std::log1p(-s) / rate_;
  }
  double upper_quantile(double q) const override {
    if (q <= 0.0) return kInf;
    return -std::log(q) / rate_;
  }
  double lower() const override { return 0.0; }
  double upper() const override { return kInf; }
  std::optional<double> density(double x) const override {
    return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x);
  }
  bool has_density() const override { return true; }
  double sample(Rng& rng) const override {
    return -std::log(canonical_open(rng)) / rate_;
  }
  DistFamily family() const override { return DistFamily::exponential; }
  std::vector<double> params() const override { return {rate_}; }
  TailBehavior left_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  TailBehavior right_tail() const override {
    return {TailBehavior::Kind::exponential, rate_};
  }
  std::string describe() const override {
    return "exponential(" + fmt(rate_) + ")";
  }

 private:
  double rate_;
};

// ----------------------------------------------------------------- pareto

class ParetoModel final : public DistModel {
 public:
  ParetoModel(double shape, double scale) : k_(shape), xm_(scale) {}
  double cdf(double x) const override {
    return x <= xm_ ? 0.0 : -std::expm1(k_ * std::log(xm_ / x));
  }
  double sf(double x) const override {
    return x <= xm_ ? 1.0 : std::pow(xm_ / x, k_);
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    if (s >= 1.0) return kInf;
    return xm_ * std::exp(-std::log1p(-s) / k_);
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    if (s <= 0.0) return xm_;
    return left_inv(s);
  }
  double upper_quantile(double q) const override {
    if (q <= 0.0) return kInf;
    return xm_ * std::pow(q, -1.0 / k_);
  }
  double lower() const override { return xm_; }
  double upper() const override { return kInf; }
  std::optional<double> density(double x) const override {
    return x < xm_ ? 0.0 : k_ * std::pow(xm_, k_) / std::pow(x, k_ + 1.0);
  }
  bool has_density() const override { return true; }
  double sample(Rng& rng) const override {
    return xm_ * std::pow(canonical_open(rng), -1.0 / k_);
  }
  DistFamily family() const override { return DistFamily::pareto; }
  std::vector<double> params() const override { return {k_, xm_}; }
  TailBehavior left_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  TailBehavior right_tail() const override {
    return {TailBehavior::Kind::power, k_};
  }
  std::string describe() const override {
    return "pareto(" + fmt(k_) + "," + fmt(xm_) + ")";
  }

 private:
  double k_, xm_;
};

// ----------------------------------------------------------------- normal

class NormalModel final : public DistModel {
 public:
  NormalModel(double mean, double sd) : law_(mean, sd) {}
  double cdf(double x) const override {
    if (x == -kInf) return 0.0;
    if (x == kInf) return 1.0;
    return boost::math::cdf(law_, x);
  }
  double sf(double x) const override {
    if (x == -kInf) return 1.0;
    if (x == kInf) return 0.0;
    return boost::math::cdf(boost::math::complement(law_, x));
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    if (s >= 1.0) return kInf;
    return boost::math::quantile(law_, s);
  }
  double right_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    if (s >= 1.0) return kInf;
    return boost::math::quantile(law_, s);
  }
  double upper_quantile(double q) const override {
    if (q <= 0.0) return kInf;
    if (q >= 1.0) return -kInf;
    return boost::math::quantile(boost::math::complement(law_, q));
  }
  double lower() const override { return -kInf; }
  double upper() const override { return kInf; }
  std::optional<double> density(double x) const override {
    return boost::math::pdf(law_, x);
  }
  bool has_density() const override { return true; }
  DistFamily family() const override { return DistFamily::normal; }
  std::vector<double> params() const override {
    return {law_.mean(), law_.standard_deviation()};
  }
  // Gaussian tails decay faster than any exponential; for the integrability
  // checks they behave like the exponential class.
  TailBehavior left_tail() const override {
    return {TailBehavior::Kind::exponential, kInf};
  }
  TailBehavior right_tail() const override {
    return {TailBehavior::Kind::exponential, kInf};
  }
  std::string describe() const override {
    return "normal(" + fmt(law_.mean()) + "," + fmt(law_.standard_deviation()) +
           ")";
  }

 private:
  boost::math::normal_distribution<double> law_;
};

// --------------------------------------------------------------- discrete

class DiscreteModel final : public DistModel {
 public:
  // xs strictly increasing; cum strictly increasing with cum.back() == 1.
  DiscreteModel(std::vector<double> xs, std::vector<double> cum)
      : xs_(std::move(xs)), cum_(std::move(cum)) {}

  double cdf(double x) const override {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }
  double cdf_left(double x) const override {
    auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    auto it = std::lower_bound(cum_.begin(), cum_.end(), s);
    if (it == cum_.end()) return xs_.back();
    return xs_[static_cast<std::size_t>(it - cum_.begin())];
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    if (it == cum_.end()) return kInf;
    return xs_[static_cast<std::size_t>(it - cum_.begin())];
  }
  double upper_quantile(double q) const override { return left_inv(1.0 - q); }
  double lower() const override { return xs_.front(); }
  double upper() const override { return xs_.back(); }
  std::vector<Atom> atoms() const override {
    std::vector<Atom> out(xs_.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      out[i] = {xs_[i], cum_[i] - prev};
      prev = cum_[i];
    }
    return out;
  }
  bool is_discrete() const override { return true; }
  std::vector<double> quantile_breaks() const override {
    return {cum_.begin(), cum_.end() - 1};
  }
  double sample(Rng& rng) const override { return left_inv(canonical_open(rng)); }
  DistFamily family() const override { return DistFamily::discrete; }
  TailBehavior left_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  TailBehavior right_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  std::string describe() const override {
    if (xs_.size() == 1) return "point(" + fmt(xs_[0]) + ")";
    return "discrete(" + std::to_string(xs_.size()) + " atoms)";
  }

 private:
  std::vector<double> xs_;
  std::vector<double> cum_;
};

// ------------------------------------------------------- piecewise linear

class PiecewiseLinearModel final : public DistModel {
 public:
  PiecewiseLinearModel(std::vector<double> x, std::vector<double> F)
      : x_(std::move(x)), F_(std::move(F)) {}
  double cdf(double x) const override {
    if (x < x_.front()) return 0.0;
    if (x >= x_.back()) return 1.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    const double w = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return F_[i - 1] + w * (F_[i] - F_[i - 1]);
  }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    return invert(std::min(s, 1.0));
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    return invert(std::max(s, 0.0));
  }
  double lower() const override { return x_.front(); }
  double upper() const override { return x_.back(); }
  std::optional<double> density(double x) const override {
    if (x < x_.front() || x >= x_.back()) return 0.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    return (F_[i] - F_[i - 1]) / (x_[i] - x_[i - 1]);
  }
  bool has_density() const override { return true; }
  std::vector<double> nonsmooth_points() const override {
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
      const double s0 = (F_[i] - F_[i - 1]) / (x_[i] - x_[i - 1]);
      const double s1 = (F_[i + 1] - F_[i]) / (x_[i + 1] - x_[i]);
      if (s0 != s1) out.push_back(x_[i]);
    }
    return out;
  }
  DistFamily family() const override { return DistFamily::piecewise_linear; }
  TailBehavior left_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  TailBehavior right_tail() const override { return {TailBehavior::Kind::bounded, 0}; }
  std::string describe() const override {
    return "piecewise_linear(" + std::to_string(x_.size()) + " knots)";
  }

 private:
  double invert(double s) const {
    auto it = std::lower_bound(F_.begin(), F_.end(), s);
    if (it == F_.begin()) return x_.front();
    const std::size_t i = static_cast<std::size_t>(it - F_.begin());
    const double w = (s - F_[i - 1]) / (F_[i] - F_[i - 1]);
    return x_[i - 1] + w * (x_[i] - x_[i - 1]);
  }
  std::vector<double> x_, F_;
};

// ---------------------------------------------------------------- mixture

TailBehavior heavier(const TailBehavior& a, const TailBehavior& b) {
  using K = TailBehavior::Kind;
  auto rank = [](const TailBehavior& t) {
    switch (t.kind) {
      case K::bounded: return 0;
      case K::exponential: return 1;
      case K::power: return 2;
      case K::unknown: return 3;
    }
    return 3;
  };
  if (rank(a) != rank(b)) return rank(a) > rank(b) ? a : b;
  if (a.kind == K::power) return a.exponent <= b.exponent ? a : b;
  if (a.kind == K::exponential) return a.exponent <= b.exponent ? a : b;
  return a;
}

class MixtureModel final : public DistModel {
 public:
  MixtureModel(Dist F0, Dist G, double h)
      : F0_(std::move(F0)), G_(std::move(G)), h_(h) {}
  double cdf(double x) const override {
    return (1.0 - h_) * F0_.cdf(x) + h_ * G_.cdf(x);
  }
  double cdf_left(double x) const override {
    return (1.0 - h_) * F0_.cdf_left(x) + h_ * G_.cdf_left(x);
  }
  double sf(double x) const override {
    return (1.0 - h_) * F0_.sf(x) + h_ * G_.sf(x);
  }
  double left_inv(double s) const override { return bisect_left_inv(s); }
  double right_inv(double s) const override { return bisect_right_inv(s); }
  double lower() const override { return std::min(F0_.lower(), G_.lower()); }
  double upper() const override { return std::max(F0_.upper(), G_.upper()); }
  std::optional<double> density(double x) const override {
    auto a = F0_.density(x);
    auto b = G_.density(x);
    if (!a || !b) return std::nullopt;
    return (1.0 - h_) * *a + h_ * *b;
  }
  bool has_density() const override {
    return F0_.has_density() && G_.has_density();
  }
  std::vector<double> nonsmooth_points() const override {
    auto out = F0_.nonsmooth_points();
    auto g = G_.nonsmooth_points();
    out.insert(out.end(), g.begin(), g.end());
    // Where one continuous component starts or stops the mixture density
    // jumps.
    for (const Dist* d : {&F0_, &G_}) {
      if (d->is_discrete()) continue;
      for (double e : {d->lower(), d->upper()}) {
        if (std::isfinite(e)) out.push_back(e);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  std::vector<Atom> atoms() const override {
    std::map<double, double> m;
    for (const auto& a : F0_.atoms()) m[a.x] += (1.0 - h_) * a.p;
    for (const auto& a : G_.atoms()) m[a.x] += h_ * a.p;
    std::vector<Atom> out;
    for (const auto& [x, p] : m) out.push_back({x, p});
    return out;
  }
  bool is_discrete() const override {
    return F0_.is_discrete() && G_.is_discrete();
  }
  double sample(Rng& rng) const override {
    const double u = canonical_open(rng);
    return u < h_ ? G_.sample(rng) : F0_.sample(rng);
  }
  DistFamily family() const override { return DistFamily::mixture; }
  std::vector<double> params() const override { return {h_}; }
  TailBehavior left_tail() const override {
    return heavier(F0_.left_tail(), G_.left_tail());
  }
  TailBehavior right_tail() const override {
    return heavier(F0_.right_tail(), G_.right_tail());
  }
  std::string describe() const override {
    return "mixture(" + F0_.describe() + "," + G_.describe() + ",h=" + fmt(h_) +
           ")";
  }

 private:
  Dist F0_, G_;
  double h_;
};

// -------------------------------------------------------------- reflected

class ReflectedModel final : public DistModel {
 public:
  explicit ReflectedModel(Dist F) : F_(std::move(F)) {}
  double cdf(double x) const override {
    if (F_.atoms().empty()) return F_.sf(-x);
    return 1.0 - F_.cdf_left(-x);
  }
  double cdf_left(double x) const override {
    return F_.atoms().empty() ? F_.sf(-x) : 1.0 - F_.cdf(-x);
  }
  double sf(double x) const override { return F_.cdf_left(-x); }
  double left_inv(double s) const override {
    if (s <= 0.0) return -kInf;
    // without atoms F^-> and F^<- agree off a null set of levels, and the
    // upper quantile keeps digits for small s
    if (!F_.is_discrete() && F_.atoms().empty()) return -F_.upper_quantile(s);
    return -F_.right_inv(1.0 - s);
  }
  double right_inv(double s) const override {
    if (s >= 1.0) return kInf;
    return -F_.left_inv(1.0 - s);
  }
  double upper_quantile(double q) const override { return -F_.right_inv(q); }
  double lower() const override { return -F_.upper(); }
  double upper() const override { return -F_.lower(); }
  std::optional<double> density(double x) const override {
    return F_.density(-x);
  }
  bool has_density() const override { return F_.has_density(); }
  std::vector<double> nonsmooth_points() const override {
    auto p = F_.nonsmooth_points();
    for (double& x : p) x = -x;
    std::reverse(p.begin(), p.end());
    return p;
  }
  std::vector<Atom> atoms() const override {
    auto a = F_.atoms();
    for (auto& at : a) at.x = -at.x;
    std::reverse(a.begin(), a.end());
    return a;
  }
  bool is_discrete() const override { return F_.is_discrete(); }
  std::vector<double> quantile_breaks() const override {
    auto b = F_.quantile_breaks();
    for (double& t : b) t = 1.0 - t;
    std::reverse(b.begin(), b.end());
    return b;
  }
  double sample(Rng& rng) const override { return -F_.sample(rng); }
  DistFamily family() const override { return DistFamily::reflected; }
  TailBehavior left_tail() const override { return F_.right_tail(); }
  TailBehavior right_tail() const override { return F_.left_tail(); }
  std::string describe() const override {
    return "reflected(" + F_.describe() + ")";
  }

 private:
  Dist F_;
};

// -------------------------------------------------------------- perturbed

class PerturbedModel final : public DistModel {
 public:
  PerturbedModel(Dist F0, Direction v, double h)
      : F0_(std::move(F0)), v_(std::move(v)), h_(h) {}
  double cdf(double x) const override {
    return std::clamp(F0_.cdf(x) + h_ * v_(x), 0.0, 1.0);
  }
  double cdf_left(double x) const override {
    return std::clamp(F0_.cdf_left(x) + h_ * v_.left_limit(x), 0.0, 1.0);
  }
  double left_inv(double s) const override { return bisect_left_inv(s); }
  double right_inv(double s) const override { return bisect_right_inv(s); }
  double lower() const override { return F0_.lower(); }
  double upper() const override { return F0_.upper(); }
  std::vector<double> nonsmooth_points() const override {
    auto out = F0_.nonsmooth_points();
    for (double b : v_.breakpoints()) out.push_back(b);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  std::vector<Atom> atoms() const override {
    std::vector<double> xs;
    for (const auto& a : F0_.atoms()) xs.push_back(a.x);
    for (double j : v_.jumps()) xs.push_back(j);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<Atom> out;
    for (double x : xs) {
      const double p = cdf(x) - cdf_left(x);
      if (p > 0.0) out.push_back({x, p});
    }
    return out;
  }
  DistFamily family() const override { return DistFamily::perturbed; }
  std::vector<double> params() const override { return {h_}; }
  TailBehavior left_tail() const override { return F0_.left_tail(); }
  TailBehavior right_tail() const override { return F0_.right_tail(); }
  std::string describe() const override {
    return "perturbed(" + F0_.describe() + ",h=" + fmt(h_) + ")";
  }

 private:
  Dist F0_;
  Direction v_;
  double h_;
};

std::pair<double, double> bracket(const DistModel& m, double s, bool strict) {
  auto hit = [&](double x) { return strict ? m.cdf(x) > s : m.cdf(x) >= s; };
  double lo = m.lower();
  double hi = m.upper();
  if (!std::isfinite(hi)) {
    hi = std::isfinite(lo) ? std::max(lo, 0.0) + 1.0 : 1.0;
    while (!hit(hi)) {
      hi = 2.0 * hi + 1.0;
      if (!std::isfinite(hi)) break;
    }
  }
  if (!std::isfinite(lo)) {
    lo = std::min(hi, 0.0) - 1.0;
    while (hit(lo)) {
      lo = 2.0 * lo - 1.0;
      if (!std::isfinite(lo)) break;
    }
  }
  return {lo, hi};
}

}  // namespace

// ------------------------------------------------------------- DistModel

double DistModel::left_inv(double s) const { return bisect_left_inv(s); }
double DistModel::right_inv(double s) const { return bisect_right_inv(s); }

double DistModel::bisect_left_inv(double s) const {
  if (s <= 0.0) return -kInf;
  s = std::min(s, 1.0);
  for (const auto& a : atoms()) {
    if (cdf_left(a.x) < s && s <= cdf(a.x)) return a.x;
  }
  auto [lo, hi] = bracket(*this, s, false);
  if (cdf(lo) >= s) return lo;
  while (!converged(lo, hi)) {
    const double mid = lo + 0.5 * (hi - lo);
    if (cdf(mid) >= s) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double DistModel::bisect_right_inv(double s) const {
  if (s >= 1.0) return kInf;
  s = std::max(s, 0.0);
  for (const auto& a : atoms()) {
    if (cdf_left(a.x) <= s && s < cdf(a.x)) return a.x;
  }
  auto [lo, hi] = bracket(*this, s, true);
  if (cdf(lo) > s) return lo;
  while (!converged(lo, hi)) {
    const double mid = lo + 0.5 * (hi - lo);
    if (cdf(mid) > s) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<double> DistModel::quantile_breaks() const {
  std::vector<double> out;
  auto add = [&](double t) {
    if (t > 0.0 && t < 1.0) out.push_back(t);
  };
  for (const auto& a : atoms()) {
    add(cdf_left(a.x));
    add(cdf(a.x));
  }
  for (double p : nonsmooth_points()) add(cdf(p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double DistModel::sample(Rng& rng) const {
  return left_inv(canonical_open(rng));
}

TailBehavior DistModel::left_tail() const {
  if (std::isfinite(lower())) return {TailBehavior::Kind::bounded, 0.0};
  return {};
}

TailBehavior DistModel::right_tail() const {
  if (std::isfinite(upper())) return {TailBehavior::Kind::bounded, 0.0};
  return {};
}

// ------------------------------------------------------------------ Dist

Dist::Dist(std::shared_ptr<const DistModel> model) : m_(std::move(model)) {
  if (!m_) throw DomainError("Dist: null model");
}

double Dist::left_inv(double s) const {
  require(s >= 0.0 && s <= 1.0, "left_inv: level must lie in [0,1]");
  return m_->left_inv(s);
}

double Dist::right_inv(double s) const {
  require(s >= 0.0 && s <= 1.0, "right_inv: level must lie in [0,1]");
  return m_->right_inv(s);
}

std::vector<double> Dist::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& x : out) x = m_->sample(rng);
  return out;
}

// --------------------------------------------------------- EmpiricalDist

namespace {

Dist empirical_model(const std::vector<double>& sorted) {
  std::vector<double> xs;
  std::vector<double> cum;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    xs.push_back(sorted[i]);
    cum.push_back(static_cast<double>(i + 1) / n);
  }
  cum.back() = 1.0;
  return Dist(std::make_shared<DiscreteModel>(std::move(xs), std::move(cum)));
}

std::vector<double> sorted_finite(std::vector<double> s) {
  require(!s.empty(), "make_empirical: empty sample");
  for (double x : s) {
    require(std::isfinite(x), "make_empirical: non-finite sample value");
  }
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

EmpiricalDist::EmpiricalDist(std::vector<double> samples)
    : sorted_(sorted_finite(std::move(samples))),
      dist_(empirical_model(sorted_)) {}

// -------------------------------------------------------------- factories

Dist make_uniform(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a < b,
          "uniform: need finite a < b");
  return Dist(std::make_shared<UniformModel>(a, b));
}

Dist make_exponential(double rate) {
  require(rate > 0.0 && std::isfinite(rate), "exponential: rate must be > 0");
  return Dist(std::make_shared<ExponentialModel>(rate));
}

Dist make_pareto(double shape, double scale) {
  require(shape > 0.0 && std::isfinite(shape), "pareto: shape must be > 0");
  require(scale > 0.0 && std::isfinite(scale), "pareto: scale must be > 0");
  return Dist(std::make_shared<ParetoModel>(shape, scale));
}

Dist make_normal(double mean, double sd) {
  require(std::isfinite(mean), "normal: mean must be finite");
  require(sd > 0.0 && std::isfinite(sd), "normal: sd must be > 0");
  return Dist(std::make_shared<NormalModel>(mean, sd));
}

Dist make_parametric(ParametricFamily family, std::span<const double> p) {
  auto need = [&](std::size_t n, const char* name) {
    require(p.size() == n, std::string(name) + ": expected " +
                               std::to_string(n) + " parameter(s)");
  };
  switch (family) {
    case ParametricFamily::uniform: need(2, "uniform"); return make_uniform(p[0], p[1]);
    case ParametricFamily::exponential: need(1, "exponential"); return make_exponential(p[0]);
    case ParametricFamily::pareto: need(2, "pareto"); return make_pareto(p[0], p[1]);
    case ParametricFamily::normal: need(2, "normal"); return make_normal(p[0], p[1]);
  }
  throw DomainError("unknown parametric family");
}

EmpiricalDist make_empirical(std::vector<double> samples) {
  return EmpiricalDist(std::move(samples));
}

std::vector<double> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples file: " + path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comma = line.find(',');
    std::string field = line.substr(0, comma);
    field.erase(0, field.find_first_not_of(" \t\r"));
    field.erase(field.find_last_not_of(" \t\r") + 1);
    if (field.empty() || field[0] == '#') continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
      out.push_back(v);
    } catch (const std::exception&) {
      if (lineno == 1 && out.empty()) continue;  // header
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": not a number: '" + field + "'");
    }
  }
  return out;
}

Dist make_discrete(std::vector<Atom> atoms) {
  require(!atoms.empty(), "discrete: need at least one atom");
  std::map<double, double> m;
  double total = 0.0;
  for (const auto& a : atoms) {
    require(std::isfinite(a.x), "discrete: atom location must be finite");
    require(a.p >= 0.0 && std::isfinite(a.p), "discrete: weights must be >= 0");
    if (a.p == 0.0) continue;
    m[a.x] += a.p;
    total += a.p;
  }
  require(total > 0.0, "discrete: total weight must be positive");
  std::vector<double> xs;
  std::vector<double> cum;
  double acc = 0.0;
  for (const auto& [x, p] : m) {
    acc += p;
    xs.push_back(x);
    cum.push_back(acc / total);
  }
  cum.back() = 1.0;
  return Dist(std::make_shared<DiscreteModel>(std::move(xs), std::move(cum)));
}

Dist make_two_point(double t) {
  require(t >= 0.0 && t <= 1.0, "two_point: t must lie in [0,1]");
  return make_discrete({{-1.0, t}, {0.0, 1.0 - t}});
}

Dist make_point_mass(double m) { return make_discrete({{m, 1.0}}); }

Dist make_piecewise_linear(std::vector<double> x, std::vector<double> F) {
  require(x.size() == F.size() && x.size() >= 2,
          "piecewise_linear: need matching knots, at least two");
  require(F.front() == 0.0 && F.back() == 1.0,
          "piecewise_linear: F must run from 0 to 1");
  for (std::size_t i = 1; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && x[i] > x[i - 1],
            "piecewise_linear: knots must be finite and increasing");
    require(F[i] > F[i - 1], "piecewise_linear: F must be strictly increasing");
  }
  return Dist(std::make_shared<PiecewiseLinearModel>(std::move(x), std::move(F)));
}

Dist contaminate(const Dist& F0, const Dist& G, double h) {
  require(h >= 0.0 && h <= 1.0, "contaminate: h must lie in [0,1]");
  if (h == 0.0) return F0;
  if (h == 1.0) return G;
  return Dist(std::make_shared<MixtureModel>(F0, G, h));
}

Dist reflect(const Dist& F) {
  return Dist(std::make_shared<ReflectedModel>(F));
}

Dist perturb(const Dist& F0, const Direction& v, double h) {
  if (h == 0.0 || v.empty()) return F0;
  return Dist(std::make_shared<PerturbedModel>(F0, v, h));
}

DfCheck is_distribution_function(const Dist& F0, const Direction& v, double h,
                                 int grid_per_segment) {
  constexpr double kSlack = 1e-14;
  DfCheck out;
  if (v.empty() || h == 0.0) return out;
  if (v.has_unbounded_polynomial()) {
    return {false, "direction is an unbounded polynomial on an infinite piece"};
  }
  double prev = 0.0;
  double prev_x = -kInf;
  auto visit = [&](double x, double val) {
    if (val < -kSlack || val > 1.0 + kSlack) {
      out = {false, "F0 + h v leaves [0,1] at x = " + fmt(x)};
      return false;
    }
    if (val < prev - kSlack) {
      out = {false, "F0 + h v decreases between x = " + fmt(prev_x) +
                        " and x = " + fmt(x)};
      return false;
    }
    prev = val;
    prev_x = x;
    return true;
  };
  for (const auto& [a, b] : v.pieces()) {
    auto at = [&](double x) { return F0.cdf(x) + h * v(x); };
    auto left_at = [&](double x) { return F0.cdf_left(x) + h * v.left_limit(x); };
    if (std::isfinite(a)) {
      if (!visit(a, left_at(a)) || !visit(a, at(a))) return out;
    }
    for (int i = 1; i < grid_per_segment; ++i) {
      const double u = static_cast<double>(i) / grid_per_segment;
      double x;
      if (std::isfinite(a) && std::isfinite(b)) {
        x = a + u * (b - a);
      } else if (std::isfinite(a)) {
        x = a + u / (1.0 - u);
      } else if (std::isfinite(b)) {
        x = b - (1.0 - u) / u;
      } else {
        x = std::tan(M_PI * (u - 0.5));
      }
      if (!visit(x, at(x))) return out;
    }
    if (std::isfinite(b)) {
      if (!visit(b, left_at(b))) return out;
    }
  }
  return out;
}

}  // namespace qhrisk
