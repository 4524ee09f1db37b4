#include "qhrisk/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "qhrisk/errors.hpp"

namespace qhrisk::stats {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0,1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> data, double p) {
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

double median(std::span<const double> data) { return quantile(data, 0.5); }

Summary summarize(std::span<const double> data) {
  if (data.empty()) throw DomainError("summary of an empty sample");
  Summary s;
  s.count = data.size();
  double sum = 0.0;
  for (double x : data) sum += x;
  s.mean = sum / static_cast<double>(data.size());
  if (data.size() > 1) {
    double ss = 0.0;
    for (double x : data) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(data.size() - 1));
  }
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < kSummaryLevels.size(); ++k) {
    s.quantiles[k] = quantile_sorted(sorted, kSummaryLevels[k]);
  }
  return s;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic of an empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_one_sample(std::span<const double> data,
                     const std::function<double(double)>& cdf) {
  if (data.empty()) throw DomainError("KS statistic of an empty sample");
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) /
                    static_cast<double>(n + m);
  const double s = std::sqrt(ne);
  // Stephens' finite-sample adjustment of the Kolmogorov argument
  const double lam = (s + 0.12 + 0.11 / s) * d;
  if (lam < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

AndersonDarling anderson_darling_normal(std::span<const double> data) {
  if (data.size() < 8) throw DomainError("Anderson-Darling needs at least 8 values");
  const Summary s = summarize(data);
  if (!(s.sd > 0.0)) throw DomainError("Anderson-Darling: zero variance");
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> law(s.mean, s.sd);
  const std::size_t n = x.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::log(boost::math::cdf(law, x[i]));
    const double hi = std::log(boost::math::cdf(boost::math::complement(law, x[n - 1 - i])));
    acc += static_cast<double>(2 * i + 1) * (lo + hi);
  }
  const double nn = static_cast<double>(n);
  AndersonDarling out;
  out.a2 = -nn - acc / nn;
  out.a2_star = out.a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  // D'Agostino and Stephens (1986), case of estimated mean and variance
  const double z = out.a2_star;
  double p;
  if (z >= 0.6) {
    p = std::exp(1.2937 - 5.709 * z + 0.0186 * z * z);
  } else if (z >= 0.34) {
    p = std::exp(0.9177 - 4.279 * z - 1.38 * z * z);
  } else if (z >= 0.2) {
    p = 1.0 - std::exp(-8.318 + 42.796 * z - 59.938 * z * z);
  } else {
    p = 1.0 - std::exp(-13.436 + 101.14 * z - 223.73 * z * z);
  }
  out.p_value = std::clamp(p, 0.0, 1.0);
  return out;
}

double dkw_epsilon(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("dkw_epsilon: need n >= 1 and alpha in (0,1)");
  }
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

}  // namespace qhrisk::stats
