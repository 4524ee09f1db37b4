#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhrisk/distribution.hpp"
#include "qhrisk/processes.hpp"
#include "qhrisk/risk.hpp"
#include "qhrisk/stats.hpp"

namespace qhrisk {

inline constexpr int kSchemaVersion = 1;
/// Root seed used when a config does not set one.
inline constexpr std::uint64_t kDefaultSeed = 20240617;

enum class RateRule { sqrt, power, custom };

/// r_n = sqrt(n), n^r, or one explicit value per sample size.
struct RateSpec {
  RateRule rule = RateRule::sqrt;
  double r = 0.5;
  std::vector<double> values;

  double at(std::size_t index, std::size_t n) const;
  /// The exponent r of n^r (0.5 for sqrt); nullopt for custom rates.
  std::optional<double> exponent() const;
  bool operator==(const RateSpec&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  /// clt | stronglaw | sensitivity
  std::string experiment = "clt";
  std::string risk = "identity";
  std::string dist = "uniform:0,1";
  std::string weight = "one";

  /// Data regime; n and seed of the process are set per replication.
  std::string regime = "iid";
  /// Innovation law for the dependent regimes (standard normal when empty).
  std::string innovation;
  double ar_coef = 0.5;
  double garch_omega = 0.1;
  double garch_a = 0.1;
  double garch_b = 0.8;
  double lm_beta = 0.75;
  std::size_t lm_truncation = 10000;

  std::vector<std::size_t> n_values{1000};
  std::size_t replications = 100;
  RateSpec rate;
  std::uint64_t seed = kDefaultSeed;
  /// Report path; empty keeps the report in memory only.
  std::string output;

  double ks_tolerance = 0.035;
  /// Size of the reference sample for the two-sample KS distance.
  std::size_t reference_draws = 100000;
  /// Bridge draws for the cross-check of the two reference-law paths
  /// (0 skips it).
  std::size_t consistency_draws = 10000;
  std::size_t threads = 1;
  bool override_checks = false;

  /// Contaminating law and mixing weights for sensitivity runs.
  std::string contamination;
  std::vector<double> h_grid;

  /// Throws DomainError on an inconsistent config.
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys and a schema version other than kSchemaVersion are errors.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  bool operator==(const ExperimentConfig&) const = default;
};

struct SampleSizeRow {
  std::size_t n = 0;
  double rate = 0.0;
  stats::Summary summary;
  /// Two-sample KS distance to the reference law, when there is one and at
  /// least two replications.
  std::optional<double> ks;
  /// pass | fail | insufficient | no_reference
  std::string ks_status;
  /// Strong-law medians of r_n |R(F_n) - R(F0)| and r_n ||F_n - F0||_phi.
  std::optional<double> median_scaled_abs_error;
  std::optional<double> median_scaled_norm;
  std::vector<double> scaled_errors;
  std::vector<double> scaled_norms;
  bool operator==(const SampleSizeRow&) const = default;
};

struct SensitivityRow {
  double h = 0.0;
  std::optional<double> value;
  std::optional<double> slope;
  std::string error;
  bool operator==(const SensitivityRow&) const = default;
};

struct SensitivityCurve {
  double risk_at_F0 = 0.0;
  std::vector<SensitivityRow> rows;
  /// The derivative in the direction G - F0 when it is defined.
  std::optional<double> derivative;
  std::string derivative_note;
};

struct ExperimentReport {
  int schema_version = kSchemaVersion;
  std::string experiment;
  nlohmann::json config;
  std::uint64_t seed = 0;
  /// How replication seeds derive from the root seed.
  std::string seed_rule;
  double risk_at_F0 = 0.0;
  /// normal | simulated | none
  std::string reference_law = "none";
  std::optional<double> reference_variance;
  /// One-sample KS between simulated derivative-of-bridge draws and the
  /// closed-form normal law.
  std::optional<double> reference_consistency_ks;
  std::vector<SampleSizeRow> rows;
  std::vector<SensitivityRow> sensitivity;
  std::optional<double> derivative_prediction;
  std::string verdict;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;

  /// Equality of everything except the wall time.
  bool same_statistics(const ExperimentReport& other) const;
  bool operator==(const ExperimentReport&) const = default;
};

class SchemaVersionError : public std::runtime_error {
 public:
  SchemaVersionError(int found, int expected);
  int found() const noexcept { return found_; }

 private:
  int found_;
};

ExperimentReport run_clt(const ExperimentConfig& cfg);
ExperimentReport run_strong_law(const ExperimentConfig& cfg);
ExperimentReport run_sensitivity(const ExperimentConfig& cfg);
/// Dispatches on cfg.experiment.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Table h -> R((1 - h) F0 + h G) with secant slopes; a failing h is
/// recorded on its row and the curve continues.
SensitivityCurve run_sensitivity(const RiskEvaluator& ev, const Dist& F0,
                                 const Dist& G, const std::vector<double>& h_grid);

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);
void persist_report(const ExperimentReport& r, const std::string& path);
ExperimentReport load_report(const std::string& path);
/// Columns n, replication, scaled_error[, scaled_norm] at full precision.
void export_scaled_errors_csv(const ExperimentReport& r, const std::string& path);

}  // namespace qhrisk
