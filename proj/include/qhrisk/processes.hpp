#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhrisk/distribution.hpp"

namespace qhrisk {

enum class Regime { iid, ar1, garch11, long_memory };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// Data-generating process. `innovation` is the marginal law for iid data
/// and the innovation law otherwise (standard normal when unset).
struct ProcessSpec {
  Regime regime = Regime::iid;
  std::optional<Dist> innovation;
  double ar_coef = 0.0;
  double garch_omega = 0.1;
  double garch_a = 0.1;
  double garch_b = 0.8;
  double lm_beta = 0.75;
  std::size_t lm_truncation = 10000;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  /// Throws DomainError on |coef| >= 1, a + b >= 1, beta outside (1/2,1),
  /// truncation 0 or n = 0.
  void validate() const;
  std::string to_json() const;
};

/// Burn-in used by ar1 and garch11.
inline constexpr std::size_t kBurnIn = 1000;

std::vector<double> sample_process(const ProcessSpec& spec);

/// Seed of replication `index` under `root`: splitmix64 of
/// root + (index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index);

/// Writes one value per line below a comment line holding the spec JSON.
void export_path_csv(const std::string& path, const ProcessSpec& spec,
                     std::span<const double> values);

/// int_0^inf (x + x^2)^(-beta) dx by quadrature, beta in (1/2, 1).
double lm_integral(double beta);
/// c_{1,beta} = sqrt(var (1 - (beta - 1/2)) (1 - (2 beta - 1)) / lm_integral).
double c1_beta(double beta, double var_eps);

/// lim Var(n^(beta-1/2) mean(X_1..X_n)) = var lm_integral / ((1-beta)(3-2 beta))
/// for the untruncated moving average with a_s = s^-beta. At unit innovation
/// variance this is 1 / c1_beta^2.
double lm_long_run_variance(double beta, double var_eps);

/// Standard Brownian bridge at ascending levels u in [0,1], from Gaussian
/// increments of W tied down by W(u) - u W(1).
std::vector<double> sample_standard_bridge(std::span<const double> u, Rng& rng);

struct BridgeSpec {
  Dist F0;
  std::vector<double> grid;
  std::uint64_t seed = 0;
};

/// One path of the F0-Brownian bridge B(x) = W(F0(x)) on spec.grid.
std::vector<double> sample_bridge(const BridgeSpec& spec);

/// Sampler of the rank-one limit c_{1,beta} f0(.) Z on a fixed grid.
class DegenerateLimit {
 public:
  DegenerateLimit(const Dist& F0, double beta, double var_eps,
                  std::vector<double> grid);

  std::vector<double> draw(Rng& rng) const;
  /// f0 on the grid.
  const std::vector<double>& shape() const { return shape_; }
  const std::vector<double>& grid() const { return grid_; }
  double c1() const { return c1_; }

 private:
  std::vector<double> grid_;
  std::vector<double> shape_;
  double c1_;
};

DegenerateLimit degenerate_limit(const Dist& F0, double beta, double var_eps,
                                 std::vector<double> grid);

/// Marginal variance sum_s a_s^2 of the truncated long-memory process with
/// unit innovation variance.
double lm_marginal_variance(double beta, std::size_t truncation);

}  // namespace qhrisk
