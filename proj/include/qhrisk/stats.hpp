#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace qhrisk::stats {

/// Linear-interpolation quantile (type 7) of ascending data.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> data, double p);
double median(std::span<const double> data);

inline constexpr std::array<double, 5> kSummaryLevels{0.05, 0.25, 0.5, 0.75, 0.95};

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double sd = 0.0;
  /// At kSummaryLevels.
  std::array<double, 5> quantiles{};
  bool operator==(const Summary&) const = default;
};

/// Sums in index order, so the result depends only on the data.
Summary summarize(std::span<const double> data);

/// sup |F_a - F_b| between two empirical distribution functions.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
/// sup |F_n - F| for a continuous F.
double ks_one_sample(std::span<const double> data,
                     const std::function<double(double)>& cdf);
/// Asymptotic p-value of a two-sample statistic d for sizes n and m.
double ks_pvalue(double d, std::size_t n, std::size_t m);

struct AndersonDarling {
  double a2 = 0.0;
  /// Small-sample corrected statistic A2 (1 + 0.75/n + 2.25/n^2).
  double a2_star = 0.0;
  double p_value = 0.0;
};

/// Normality test with estimated mean and variance.
AndersonDarling anderson_darling_normal(std::span<const double> data);

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band at confidence 1 - alpha.
double dkw_epsilon(std::size_t n, double alpha);

}  // namespace qhrisk::stats
