#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qhrisk/derivative.hpp"
#include "qhrisk/errors.hpp"
#include "qhrisk/harness.hpp"
#include "qhrisk/specs.hpp"

using namespace qhrisk;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qhrisk_test_" + name);
}

ExperimentConfig small_clt() {
  ExperimentConfig c;
  c.risk = "avatr:0.2";
  c.dist = "uniform:0,1";
  c.n_values = {200, 400};
  c.replications = 60;
  c.reference_draws = 2000;
  c.consistency_draws = 500;
  return c;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  auto c = small_clt();
  c.regime = "ar1";
  c.ar_coef = 0.3;
  c.rate = {RateRule::power, 0.25, {}};
  c.h_grid = {0, 0.1};
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back, c);
}

TEST(Config, RejectsUnknownKeysAndVersions) {
  auto j = small_clt().to_json();
  j["replicatons"] = 5;
  EXPECT_THROW(ExperimentConfig::from_json(j), DomainError);
  j = small_clt().to_json();
  j["schema_version"] = 99;
  try {
    ExperimentConfig::from_json(j);
    FAIL();
  } catch (const SchemaVersionError& e) {
    EXPECT_EQ(e.found(), 99);
  }
}

TEST(Config, Validation) {
  auto c = small_clt();
  c.n_values = {400, 200};
  EXPECT_THROW(c.validate(), DomainError);
  c = small_clt();
  c.replications = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = small_clt();
  c.experiment = "sensitivity";
  EXPECT_THROW(c.validate(), DomainError);
  c = small_clt();
  c.rate = {RateRule::custom, 0, {1.0}};
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Config, LoadMissingFile) {
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/cfg.json"), std::runtime_error);
}

TEST(Rate, Rules) {
  EXPECT_DOUBLE_EQ((RateSpec{RateRule::sqrt, 0.5, {}}).at(0, 100), 10.0);
  EXPECT_NEAR((RateSpec{RateRule::power, 0.25, {}}).at(0, 10000), 10.0, 1e-12);
  EXPECT_DOUBLE_EQ((RateSpec{RateRule::custom, 0, {3.0, 4.0}}).at(1, 7), 4.0);
  EXPECT_EQ((RateSpec{RateRule::custom, 0, {3.0}}).exponent(), std::nullopt);
}

TEST(Clt, MeanOfUniformMatchesNormalLimit) {
  ExperimentConfig c;
  c.risk = "identity";
  c.dist = "uniform:0,1";
  c.n_values = {2000};
  c.replications = 4000;
  c.threads = 4;
  const auto rep = run_clt(c);
  ASSERT_TRUE(rep.reference_variance);
  EXPECT_NEAR(*rep.reference_variance, 1.0 / 12, 1e-10);
  EXPECT_EQ(rep.reference_law, "normal");
  ASSERT_EQ(rep.rows.size(), 1u);
  ASSERT_TRUE(rep.rows[0].ks);
  EXPECT_LE(*rep.rows[0].ks, 0.035);
  EXPECT_EQ(rep.verdict, "pass");
  ASSERT_TRUE(rep.reference_consistency_ks);
  EXPECT_LT(*rep.reference_consistency_ks, 0.02);
}

TEST(Clt, SingleReplicationIsInsufficient) {
  auto c = small_clt();
  c.n_values = {100};
  c.replications = 1;
  const auto rep = run_clt(c);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].scaled_errors.size(), 1u);
  EXPECT_EQ(rep.rows[0].ks_status, "insufficient");
  EXPECT_FALSE(rep.rows[0].ks);
  EXPECT_EQ(rep.verdict, "insufficient");
}

TEST(Clt, PreconditionGate) {
  auto c = small_clt();
  c.dist = "exponential:1";
  c.weight = "one";
  EXPECT_THROW(run_clt(c), PreconditionError);
  c.override_checks = true;
  EXPECT_NO_THROW(run_clt(c));
  c.override_checks = false;
  c.weight = "phi:2";
  EXPECT_NO_THROW(run_clt(c));
}

TEST(Clt, ScaledErrorsUseTheRate) {
  auto c = small_clt();
  c.n_values = {100};
  c.replications = 3;
  const auto rep = run_clt(c);
  // replication k draws from substream (n index << 32 | k)
  const auto F0 = parse_dist(c.dist);
  const auto ev = parse_risk(c.risk);
  ProcessSpec ps;
  ps.innovation = F0;
  ps.n = 100;
  for (std::size_t k = 0; k < 3; ++k) {
    ps.seed = substream_seed(c.seed, k);
    const auto xs = sample_process(ps);
    EXPECT_NEAR(rep.rows[0].scaled_errors[k], 10.0 * (ev.eval_samples(xs) - rep.risk_at_F0), 1e-12);
  }
}

TEST(Clt, ThreadCountDoesNotChangeStatistics) {
  auto c = small_clt();
  c.threads = 1;
  const auto a = run_clt(c);
  c.threads = 8;
  const auto b = run_clt(c);
  EXPECT_TRUE(a.same_statistics(b));
}

TEST(Clt, LongMemoryReference) {
  ExperimentConfig c;
  c.risk = "identity";
  c.dist = "normal:0,1";
  c.regime = "long_memory";
  c.lm_beta = 0.75;
  c.lm_truncation = 2000;
  c.weight = "phi:2";
  c.n_values = {500};
  c.replications = 20;
  c.rate = {RateRule::power, 0.25, {}};
  const auto rep = run_clt(c);
  EXPECT_EQ(rep.reference_law, "normal");
  ASSERT_TRUE(rep.reference_variance);
  EXPECT_NEAR(*rep.reference_variance, lm_long_run_variance(0.75, 1.0), 1e-12);
}

TEST(StrongLaw, RateOutsideRangeIsRejected) {
  ExperimentConfig c;
  c.experiment = "stronglaw";
  c.rate = {RateRule::power, 0.6, {}};
  try {
    run_strong_law(c);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("[0, 1/2)"), std::string::npos);
  }
  c.rate = {RateRule::sqrt, 0.5, {}};
  EXPECT_THROW(run_strong_law(c), PreconditionError);
}

TEST(StrongLaw, MediansShrink) {
  ExperimentConfig c;
  c.experiment = "stronglaw";
  c.risk = "avatr:0.1";
  c.dist = "uniform:0,1";
  c.n_values = {1000, 10000, 100000};
  c.replications = 30;
  c.rate = {RateRule::power, 0.25, {}};
  c.threads = 4;
  const auto rep = run_strong_law(c);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LE(*rep.rows[i].median_scaled_abs_error, *rep.rows[i - 1].median_scaled_abs_error);
    EXPECT_LE(*rep.rows[i].median_scaled_norm, *rep.rows[i - 1].median_scaled_norm);
  }
  EXPECT_EQ(rep.verdict, "consistent-with-strong-law");
}

TEST(Sensitivity, ZeroMixIsExact) {
  const auto ev = parse_risk("avatr:0.05");
  const auto F0 = make_normal(0, 1);
  const auto curve = run_sensitivity(ev, F0, make_point_mass(-3), {0.0, 0.01, 0.02});
  ASSERT_TRUE(curve.rows[0].value);
  EXPECT_EQ(*curve.rows[0].value, ev.eval(F0));
  EXPECT_EQ(curve.risk_at_F0, ev.eval(F0));
}

TEST(Sensitivity, IdentityIsLinear) {
  const auto ev = parse_risk("identity");
  const auto F0 = make_uniform(0, 1);
  const auto curve = run_sensitivity(ev, F0, make_point_mass(2), {0.0, 0.1, 0.2, 0.5});
  for (const auto& r : curve.rows) {
    // -(1 - h) / 2 - 2 h
    EXPECT_NEAR(*r.value, -(1 - r.h) / 2 - 2 * r.h, 1e-10);
    if (r.slope) EXPECT_NEAR(*r.slope, -1.5, 1e-8);
  }
}

TEST(Sensitivity, FartherAtomMeansSteeperSlope) {
  const auto ev = parse_risk("avatr:0.05");
  const auto F0 = make_normal(0, 1);
  const std::vector<double> h{0.0, 0.005, 0.01};
  const auto near = run_sensitivity(ev, F0, make_point_mass(-3), h);
  const auto far = run_sensitivity(ev, F0, make_point_mass(-6), h);
  for (std::size_t i = 1; i < h.size(); ++i) {
    EXPECT_GT(*far.rows[i].slope, *near.rows[i].slope);
  }
}

TEST(Sensitivity, ConfigRun) {
  ExperimentConfig c;
  c.experiment = "sensitivity";
  c.risk = "identity";
  c.dist = "uniform:0,1";
  c.contamination = "uniform:0.2,0.6";
  c.h_grid = {0, 0.25};
  const auto rep = run_experiment(c);
  EXPECT_EQ(rep.verdict, "complete");
  // -mean moves from -0.5 towards -0.4
  ASSERT_TRUE(rep.derivative_prediction);
  EXPECT_NEAR(*rep.derivative_prediction, 0.1, 1e-9);
}

TEST(Sensitivity, AtomOutsideSupportHasNoPrediction) {
  ExperimentConfig c;
  c.experiment = "sensitivity";
  c.risk = "identity";
  c.dist = "uniform:0,1";
  c.contamination = "point:2";
  c.h_grid = {0, 0.25};
  const auto rep = run_experiment(c);
  EXPECT_EQ(rep.verdict, "complete");
  EXPECT_FALSE(rep.derivative_prediction);
  ASSERT_FALSE(rep.warnings.empty());
  EXPECT_NE(rep.warnings[0].find("tangent space"), std::string::npos);
}

TEST(Reports, RoundTrip) {
  auto c = small_clt();
  c.n_values = {100};
  c.replications = 5;
  const auto rep = run_clt(c);
  const auto path = temp_file("report.json");
  persist_report(rep, path.string());
  const auto back = load_report(path.string());
  EXPECT_EQ(back, rep);
  std::filesystem::remove(path);
}

TEST(Reports, MissingFile) {
  try {
    load_report("/nonexistent/qhrisk_report.json");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("qhrisk_report.json"), std::string::npos);
  }
}

TEST(Reports, SchemaMismatch) {
  ExperimentReport r;
  r.experiment = "clt";
  auto j = to_json(r);
  j["schema_version"] = kSchemaVersion + 1;
  const auto path = temp_file("old_report.json");
  {
    std::ofstream out(path);
    out << j.dump();
  }
  EXPECT_THROW(load_report(path.string()), SchemaVersionError);
  std::filesystem::remove(path);
}

TEST(Reports, CsvExport) {
  auto c = small_clt();
  c.n_values = {100};
  c.replications = 4;
  const auto rep = run_clt(c);
  const auto path = temp_file("errors.csv");
  export_scaled_errors_csv(rep, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("n,replication,scaled_error", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
  std::filesystem::remove(path);
}
