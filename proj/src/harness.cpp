#include "qhrisk/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "qhrisk/derivative.hpp"
#include "qhrisk/diagnostics.hpp"
#include "qhrisk/errors.hpp"
#include "qhrisk/specs.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk {
namespace {

using nlohmann::json;

// Substream indices outside the replication range.
constexpr std::uint64_t kReferenceStream = 0xFFFF'FFFF'0000'0001ULL;
constexpr std::uint64_t kConsistencyStream = 0xFFFF'FFFF'0000'0002ULL;
constexpr std::uint64_t kPilotStream = 0xFFFF'FFFF'0000'0003ULL;
constexpr std::size_t kPilotLength = 2'000'000;
constexpr std::size_t kBridgeChunk = 1000;

const char* kSeedRule =
    "replication seed = splitmix64(root + (((n_index << 32) | replication) + 1) * "
    "0x9E3779B97F4A7C15)";

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

std::uint64_t replication_seed(std::uint64_t root, std::size_t n_index,
                               std::size_t rep) {
  return substream_seed(root, (static_cast<std::uint64_t>(n_index) << 32) | rep);
}

// Runs fn(i) for i < count on up to `threads` workers. Each index writes its
// own slot, so results do not depend on the schedule.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Setup {
  RiskEvaluator ev;
  Dist F0;
  WeightFn phi;
  ProcessSpec process;
  double risk_at_F0 = 0.0;
  /// Innovation standard deviation when the innovations are centred normal.
  std::optional<double> normal_innovation_sd;
  std::vector<std::string> warnings;
};

std::optional<double> centred_normal_sd(const Dist& d) {
  if (d.family() != DistFamily::normal) return std::nullopt;
  const auto p = d.params();
  if (p.size() != 2 || p[0] != 0.0) return std::nullopt;
  return p[1];
}

Setup make_setup(const ExperimentConfig& cfg) {
  Setup s{parse_risk(cfg.risk), parse_dist(cfg.dist), parse_weight(cfg.weight), {}, 0.0,
          std::nullopt, {}};
  ProcessSpec& p = s.process;
  p.regime = regime_from_string(cfg.regime);
  p.ar_coef = cfg.ar_coef;
  p.garch_omega = cfg.garch_omega;
  p.garch_a = cfg.garch_a;
  p.garch_b = cfg.garch_b;
  p.lm_beta = cfg.lm_beta;
  p.lm_truncation = cfg.lm_truncation;
  p.n = 1;
  if (p.regime == Regime::iid) {
    p.innovation = s.F0;
  } else {
    const Dist eps = cfg.innovation.empty() ? make_normal(0.0, 1.0)
                                            : parse_dist(cfg.innovation);
    p.innovation = eps;
    s.normal_innovation_sd = centred_normal_sd(eps);
  }
  p.validate();

  const auto& sd = s.normal_innovation_sd;
  if (p.regime == Regime::ar1 && sd) {
    s.F0 = make_normal(0.0, *sd / std::sqrt(1.0 - p.ar_coef * p.ar_coef));
    s.warnings.push_back("F0 set to the stationary marginal " + s.F0.describe());
  } else if (p.regime == Regime::long_memory && sd) {
    s.F0 = make_normal(0.0, *sd * std::sqrt(lm_marginal_variance(p.lm_beta,
                                                                 p.lm_truncation)));
    s.warnings.push_back("F0 set to the marginal " + s.F0.describe() +
                         " of the truncated moving average");
  } else if (p.regime != Regime::iid) {
    s.warnings.push_back("marginal law of the " + to_string(p.regime) +
                         " regime is not known in closed form; F0 = " +
                         s.F0.describe() + " is used for the diagnostics only");
  }

  if (p.regime == Regime::iid || (p.regime != Regime::garch11 && sd)) {
    s.risk_at_F0 = s.ev.eval(s.F0);
  } else {
    ProcessSpec pilot = p;
    pilot.n = kPilotLength;
    pilot.seed = substream_seed(cfg.seed, kPilotStream);
    s.risk_at_F0 = s.ev.eval_samples(sample_process(pilot));
    s.warnings.push_back("R(F0) estimated from a pilot path of length " +
                         std::to_string(kPilotLength));
  }
  return s;
}

bool is_failure(Verdict v) {
  return v == Verdict::fails || v == Verdict::diverging_or_slow;
}

// Turns a failed diagnostic into a PreconditionError unless overridden.
void gate(const ExperimentConfig& cfg, std::vector<std::string>& warnings,
          const std::string& what, Verdict v, const std::string& reason) {
  if (is_failure(v)) {
    const std::string msg = what + ": " + to_string(v) + " (" + reason + ")";
    if (!cfg.override_checks) {
      throw PreconditionError("precondition failed: " + msg +
                              "; set override_checks to run anyway");
    }
    warnings.push_back("override: " + msg);
  } else if (v == Verdict::undecidable || v == Verdict::sufficient_condition_only) {
    warnings.push_back(what + ": " + to_string(v) + " (" + reason + ")");
  }
}

void common_checks(const ExperimentConfig& cfg, Setup& s) {
  const auto a = check_A22a(s.F0);
  gate(cfg, s.warnings, "smoothness of F0", a.verdict, a.reason);
  const auto lambda = s.phi.exponent();
  if (lambda) {
    const auto b = check_A22b_symbolic(tail_class(s.F0, s.ev), *lambda);
    gate(cfg, s.warnings, "tail integrability", b.verdict, b.reason);
  } else {
    s.warnings.push_back("tail integrability: undecidable for a custom weight");
  }
}

std::vector<std::size_t> active_members(const RiskEvaluator& ev, const Dist& F0) {
  std::vector<double> r;
  for (const auto& g : ev.family()) r.push_back(eval_distortion_risk(g, F0));
  const double top = *std::max_element(r.begin(), r.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] >= top - DerivativeConfig{}.eps_active) out.push_back(k);
  }
  return out;
}

// Draws of the derivative applied to F0-Brownian bridges: the max over the
// active members of the discretised linear functionals.
std::vector<double> simulate_bridge_derivative(const RiskEvaluator& ev,
                                               const Dist& F0,
                                               const std::vector<std::size_t>& active,
                                               std::size_t draws, std::uint64_t seed,
                                               std::size_t threads) {
  const auto bf = bridge_functional(ev.family(), F0);
  std::vector<double> out(draws);
  const std::size_t chunks = (draws + kBridgeChunk - 1) / kBridgeChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng(substream_seed(seed, c));
    const std::size_t end = std::min(draws, (c + 1) * kBridgeChunk);
    for (std::size_t i = c * kBridgeChunk; i < end; ++i) {
      const auto w = sample_standard_bridge(bf.levels, rng);
      double best = -numerics::kInf;
      for (std::size_t k : active) best = std::max(best, bf.apply(k, w));
      out[i] = best;
    }
  });
  return out;
}

std::vector<double> normal_sample(double variance, std::size_t draws,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, std::sqrt(variance));
  std::vector<double> out(draws);
  for (auto& x : out) x = z(rng);
  return out;
}

ExperimentReport new_report(const ExperimentConfig& cfg, const Setup& s) {
  ExperimentReport r;
  r.experiment = cfg.experiment;
  r.config = cfg.to_json();
  r.seed = cfg.seed;
  r.seed_rule = kSeedRule;
  r.risk_at_F0 = s.risk_at_F0;
  r.warnings = s.warnings;
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json summary_json(const stats::Summary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"sd", s.sd}, {"quantiles", s.quantiles}};
}

stats::Summary summary_from(const json& j) {
  stats::Summary s;
  s.count = j.at("count").get<std::size_t>();
  s.mean = j.at("mean").get<double>();
  s.sd = j.at("sd").get<double>();
  s.quantiles = j.at("quantiles").get<std::array<double, 5>>();
  return s;
}

}  // namespace

// ------------------------------------------------------------------ config

double RateSpec::at(std::size_t index, std::size_t n) const {
  switch (rule) {
    case RateRule::sqrt: return std::sqrt(static_cast<double>(n));
    case RateRule::power: return std::pow(static_cast<double>(n), r);
    case RateRule::custom: return values.at(index);
  }
  return 0.0;
}

std::optional<double> RateSpec::exponent() const {
  switch (rule) {
    case RateRule::sqrt: return 0.5;
    case RateRule::power: return r;
    case RateRule::custom: return std::nullopt;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) throw SchemaVersionError(schema_version, kSchemaVersion);
  if (experiment != "clt" && experiment != "stronglaw" && experiment != "sensitivity") {
    throw DomainError("config: experiment must be clt, stronglaw or sensitivity");
  }
  if (experiment == "sensitivity") {
    if (contamination.empty()) throw DomainError("config: sensitivity needs contamination");
    if (h_grid.empty()) throw DomainError("config: sensitivity needs h_grid");
    for (double h : h_grid) {
      if (!(h >= 0.0 && h <= 1.0)) throw DomainError("config: h_grid values must lie in [0,1]");
    }
    return;
  }
  if (n_values.empty()) throw DomainError("config: n_values is empty");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] == 0) throw DomainError("config: n_values must be >= 1");
    if (i > 0 && !(n_values[i] > n_values[i - 1])) {
      throw DomainError("config: n_values must be increasing");
    }
  }
  if (replications < 1) throw DomainError("config: replications must be >= 1");
  if (rate.rule == RateRule::custom && rate.values.size() != n_values.size()) {
    throw DomainError("config: custom rate needs one value per sample size");
  }
  if (!(ks_tolerance > 0.0)) throw DomainError("config: ks_tolerance must be > 0");
  if (threads < 1) throw DomainError("config: threads must be >= 1");
}

json ExperimentConfig::to_json() const {
  json rate_j;
  switch (rate.rule) {
    case RateRule::sqrt: rate_j = {{"rule", "sqrt"}}; break;
    case RateRule::power: rate_j = {{"rule", "power"}, {"r", rate.r}}; break;
    case RateRule::custom: rate_j = {{"rule", "custom"}, {"values", rate.values}}; break;
  }
  return {{"schema_version", schema_version},
          {"experiment", experiment},
          {"risk", risk},
          {"dist", dist},
          {"weight", weight},
          {"regime",
           {{"type", regime},
            {"innovation", innovation},
            {"coef", ar_coef},
            {"omega", garch_omega},
            {"a", garch_a},
            {"b", garch_b},
            {"beta", lm_beta},
            {"truncation", lm_truncation}}},
          {"n_values", n_values},
          {"replications", replications},
          {"rate", rate_j},
          {"seed", seed},
          {"output", output},
          {"ks_tolerance", ks_tolerance},
          {"reference_draws", reference_draws},
          {"consistency_draws", consistency_draws},
          {"threads", threads},
          {"override_checks", override_checks},
          {"contamination", contamination},
          {"h_grid", h_grid}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw DomainError("config: top level must be an object");
  static const std::set<std::string> known{
      "schema_version", "experiment", "risk", "dist", "weight", "regime",
      "n_values", "replications", "rate", "seed", "output", "ks_tolerance",
      "reference_draws", "consistency_draws", "threads", "override_checks",
      "contamination", "h_grid"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw DomainError("config: unknown key '" + k + "'");
  }
  ExperimentConfig c;
  try {
    c.schema_version = j.value("schema_version", kSchemaVersion);
    if (c.schema_version != kSchemaVersion) {
      throw SchemaVersionError(c.schema_version, kSchemaVersion);
    }
    c.experiment = j.value("experiment", c.experiment);
    c.risk = j.value("risk", c.risk);
    c.dist = j.value("dist", c.dist);
    c.weight = j.value("weight", c.weight);
    if (j.contains("regime")) {
      const auto& r = j.at("regime");
      if (r.is_string()) {
        c.regime = r.get<std::string>();
      } else {
        static const std::set<std::string> rk{"type", "innovation", "coef", "omega",
                                              "a", "b", "beta", "truncation"};
        for (const auto& [k, v] : r.items()) {
          if (!rk.count(k)) throw DomainError("config: unknown regime key '" + k + "'");
        }
        c.regime = r.value("type", c.regime);
        c.innovation = r.value("innovation", c.innovation);
        c.ar_coef = r.value("coef", c.ar_coef);
        c.garch_omega = r.value("omega", c.garch_omega);
        c.garch_a = r.value("a", c.garch_a);
        c.garch_b = r.value("b", c.garch_b);
        c.lm_beta = r.value("beta", c.lm_beta);
        c.lm_truncation = r.value("truncation", c.lm_truncation);
      }
    }
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    c.replications = j.value("replications", c.replications);
    if (j.contains("rate")) {
      const auto& r = j.at("rate");
      const std::string rule = r.value("rule", std::string("sqrt"));
      if (rule == "sqrt") {
        c.rate = {RateRule::sqrt, 0.5, {}};
      } else if (rule == "power") {
        c.rate = {RateRule::power, r.at("r").get<double>(), {}};
      } else if (rule == "custom") {
        c.rate = {RateRule::custom, 0.0, r.at("values").get<std::vector<double>>()};
      } else {
        throw DomainError("config: unknown rate rule '" + rule + "'");
      }
    }
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.ks_tolerance = j.value("ks_tolerance", c.ks_tolerance);
    c.reference_draws = j.value("reference_draws", c.reference_draws);
    c.consistency_draws = j.value("consistency_draws", c.consistency_draws);
    c.threads = j.value("threads", c.threads);
    c.override_checks = j.value("override_checks", c.override_checks);
    c.contamination = j.value("contamination", c.contamination);
    if (j.contains("h_grid")) c.h_grid = j.at("h_grid").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DomainError("config '" + path + "': " + e.what());
  }
  return from_json(j);
}

SchemaVersionError::SchemaVersionError(int found, int expected)
    : std::runtime_error("unsupported schema_version " + std::to_string(found) +
                         " (this build reads version " + std::to_string(expected) + ")"),
      found_(found) {}

// -------------------------------------------------------------- experiments

ExperimentReport run_clt(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  Setup s = make_setup(cfg);
  const auto w = check_clt_weight(s.F0, s.phi);
  gate(cfg, s.warnings, "weight moment int phi^2 dF0", w.verdict, w.reason);
  common_checks(cfg, s);
  ExperimentReport rep = new_report(cfg, s);

  // reference law of the limit
  const RiskKind kind = s.ev.kind();
  const bool derivative_form = kind == RiskKind::distortion || kind == RiskKind::kusuoka_sup;
  std::vector<double> reference;
  if (!derivative_form) {
    rep.warnings.push_back("no reference law for " + to_string(kind) + " measures");
  } else if (s.process.regime == Regime::iid) {
    const auto active = active_members(s.ev, s.F0);
    if (active.size() == 1) {
      rep.reference_law = "normal";
      rep.reference_variance = asymptotic_variance_iid(s.ev.family()[active[0]], s.F0);
      reference = normal_sample(*rep.reference_variance, cfg.reference_draws,
                                substream_seed(cfg.seed, kReferenceStream));
      if (cfg.consistency_draws > 0) {
        const auto sim = simulate_bridge_derivative(
            s.ev, s.F0, active, cfg.consistency_draws,
            substream_seed(cfg.seed, kConsistencyStream), cfg.threads);
        const boost::math::normal_distribution<double> law(
            0.0, std::sqrt(*rep.reference_variance));
        rep.reference_consistency_ks =
            stats::ks_one_sample(sim, [&](double x) { return boost::math::cdf(law, x); });
      }
    } else {
      rep.reference_law = "simulated";
      reference = simulate_bridge_derivative(s.ev, s.F0, active, cfg.reference_draws,
                                             substream_seed(cfg.seed, kReferenceStream),
                                             cfg.threads);
    }
  } else if (s.process.regime == Regime::long_memory && s.normal_innovation_sd) {
    // The limit of the scaled empirical process is s f0 Z; the derivative maps
    // it to s Z because int g'(F0) f0 dx = 1. The scale s^2 is the long-run
    // variance of the mean, which the sampler reproduces (the stated c1
    // constant is its reciprocal at unit innovation variance).
    const double sd = *s.normal_innovation_sd;
    const double v = lm_long_run_variance(s.process.lm_beta, sd * sd);
    rep.reference_law = "normal";
    rep.reference_variance = v;
    reference = normal_sample(v, cfg.reference_draws,
                              substream_seed(cfg.seed, kReferenceStream));
    const auto r = cfg.rate.exponent();
    if (!r || std::abs(*r - (s.process.lm_beta - 0.5)) > 1e-12) {
      rep.warnings.push_back("long-memory scaling is n^(beta-1/2) = n^" +
                             fmt(s.process.lm_beta - 0.5));
    }
  } else {
    rep.warnings.push_back("no reference law for the " + to_string(s.process.regime) +
                           " regime (long-run covariance not computed)");
  }
  if (reference.empty() && rep.reference_law != "none") {
    rep.warnings.push_back("reference_draws = 0; KS distance skipped");
  }

  bool any_fail = false, any_pass = false;
  for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
    SampleSizeRow row;
    row.n = cfg.n_values[ni];
    row.rate = cfg.rate.at(ni, row.n);
    row.scaled_errors.resize(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t k) {
      ProcessSpec p = s.process;
      p.n = row.n;
      p.seed = replication_seed(cfg.seed, ni, k);
      const auto path = sample_process(p);
      row.scaled_errors[k] = row.rate * (s.ev.eval_samples(path) - s.risk_at_F0);
    });
    row.summary = stats::summarize(row.scaled_errors);
    if (cfg.replications < 2) {
      row.ks_status = "insufficient";
    } else if (reference.empty()) {
      row.ks_status = "no_reference";
    } else {
      row.ks = stats::ks_two_sample(row.scaled_errors, reference);
      row.ks_status = *row.ks <= cfg.ks_tolerance ? "pass" : "fail";
      (*row.ks <= cfg.ks_tolerance ? any_pass : any_fail) = true;
    }
    rep.rows.push_back(std::move(row));
  }
  if (any_fail) {
    rep.verdict = "fail";
  } else if (any_pass) {
    rep.verdict = "pass";
  } else {
    rep.verdict = cfg.replications < 2 ? "insufficient" : "no_reference";
  }
  rep.wall_time_s = seconds_since(t0);
  return rep;
}

ExperimentReport run_strong_law(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const auto r = cfg.rate.exponent();
  if (!r) throw PreconditionError("strong law needs a rate of the form n^r");
  if (!(*r >= 0.0 && *r < 0.5)) {
    throw PreconditionError("strong law needs r_n = n^r with r in [0, 1/2), got r = " +
                            fmt(*r));
  }
  Setup s = make_setup(cfg);
  const auto w = check_strong_law_weight(s.F0, s.phi, *r);
  gate(cfg, s.warnings, "weight moment int phi^(1/(1-r)) dF0", w.verdict, w.reason);
  common_checks(cfg, s);
  ExperimentReport rep = new_report(cfg, s);

  std::vector<double> med_err, med_norm;
  for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
    SampleSizeRow row;
    row.n = cfg.n_values[ni];
    row.rate = cfg.rate.at(ni, row.n);
    row.scaled_errors.resize(cfg.replications);
    row.scaled_norms.resize(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t k) {
      ProcessSpec p = s.process;
      p.n = row.n;
      p.seed = replication_seed(cfg.seed, ni, k);
      auto path = sample_process(p);
      std::sort(path.begin(), path.end());
      row.scaled_errors[k] = row.rate * (s.ev.eval_samples(path) - s.risk_at_F0);
      row.scaled_norms[k] = row.rate * weighted_ks_statistic(path, s.F0, s.phi);
    });
    row.summary = stats::summarize(row.scaled_errors);
    std::vector<double> abs_err(row.scaled_errors);
    for (auto& x : abs_err) x = std::abs(x);
    row.median_scaled_abs_error = stats::median(abs_err);
    row.median_scaled_norm = stats::median(row.scaled_norms);
    row.ks_status = "not_applicable";
    med_err.push_back(*row.median_scaled_abs_error);
    med_norm.push_back(*row.median_scaled_norm);
    rep.rows.push_back(std::move(row));
  }
  if (med_err.size() < 3) {
    rep.verdict = "insufficient";
  } else {
    const std::size_t m = med_err.size();
    bool ok = true;
    for (std::size_t i = m - 2; i < m; ++i) {
      ok = ok && med_err[i] <= med_err[i - 1] && med_norm[i] <= med_norm[i - 1];
    }
    rep.verdict = ok ? "consistent-with-strong-law" : "not-consistent";
  }
  rep.wall_time_s = seconds_since(t0);
  return rep;
}

SensitivityCurve run_sensitivity(const RiskEvaluator& ev, const Dist& F0,
                                 const Dist& G, const std::vector<double>& h_grid) {
  SensitivityCurve c;
  c.risk_at_F0 = ev.eval(F0);
  for (double h : h_grid) {
    SensitivityRow row;
    row.h = h;
    if (h == 0.0) {
      row.value = c.risk_at_F0;
    } else {
      try {
        row.value = ev.eval(contaminate(F0, G, h));
        row.slope = (*row.value - c.risk_at_F0) / h;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
    c.rows.push_back(row);
  }
  if (ev.kind() == RiskKind::distortion || ev.kind() == RiskKind::kusuoka_sup) {
    try {
      const auto v = Direction::difference(G, F0);
      const auto m = membership_C(v, F0);
      if (m.member) {
        c.derivative = qh_derivative(ev, F0, v);
      } else {
        c.derivative_note = "G - F0 is not in the tangent space";
        for (const auto& why : m.reasons) c.derivative_note += "; " + why;
      }
    } catch (const std::exception& e) {
      c.derivative_note = e.what();
    }
  } else {
    c.derivative_note = "no derivative formula for " + to_string(ev.kind()) + " measures";
  }
  return c;
}

ExperimentReport run_sensitivity(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const auto ev = parse_risk(cfg.risk);
  const auto F0 = parse_dist(cfg.dist);
  const auto G = parse_dist(cfg.contamination);
  const auto curve = run_sensitivity(ev, F0, G, cfg.h_grid);
  ExperimentReport rep;
  rep.experiment = cfg.experiment;
  rep.config = cfg.to_json();
  rep.seed = cfg.seed;
  rep.risk_at_F0 = curve.risk_at_F0;
  rep.sensitivity = curve.rows;
  rep.derivative_prediction = curve.derivative;
  if (!curve.derivative_note.empty()) rep.warnings.push_back(curve.derivative_note);
  const bool failed = std::any_of(curve.rows.begin(), curve.rows.end(),
                                  [](const auto& r) { return !r.error.empty(); });
  rep.verdict = failed ? "partial" : "complete";
  rep.wall_time_s = seconds_since(t0);
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "clt") return run_clt(cfg);
  if (cfg.experiment == "stronglaw") return run_strong_law(cfg);
  if (cfg.experiment == "sensitivity") return run_sensitivity(cfg);
  throw DomainError("unknown experiment '" + cfg.experiment + "'");
}

// ---------------------------------------------------------------- reports

bool ExperimentReport::same_statistics(const ExperimentReport& o) const {
  ExperimentReport a = *this, b = o;
  a.wall_time_s = b.wall_time_s = 0.0;
  // the thread count is an execution detail, not part of the statistics
  a.config.erase("threads");
  b.config.erase("threads");
  a.config.erase("output");
  b.config.erase("output");
  return a == b;
}

json to_json(const ExperimentReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"n", row.n},
                    {"rate", row.rate},
                    {"summary", summary_json(row.summary)},
                    {"ks", opt(row.ks)},
                    {"ks_status", row.ks_status},
                    {"median_scaled_abs_error", opt(row.median_scaled_abs_error)},
                    {"median_scaled_norm", opt(row.median_scaled_norm)},
                    {"scaled_errors", row.scaled_errors},
                    {"scaled_norms", row.scaled_norms}});
  }
  json sens = json::array();
  for (const auto& s : r.sensitivity) {
    sens.push_back({{"h", s.h}, {"value", opt(s.value)}, {"slope", opt(s.slope)},
                    {"error", s.error}});
  }
  return {{"schema_version", r.schema_version},
          {"experiment", r.experiment},
          {"config", r.config},
          {"seed", r.seed},
          {"seed_rule", r.seed_rule},
          {"risk_at_F0", r.risk_at_F0},
          {"reference_law", r.reference_law},
          {"reference_variance", opt(r.reference_variance)},
          {"reference_consistency_ks", opt(r.reference_consistency_ks)},
          {"rows", rows},
          {"sensitivity", sens},
          {"derivative_prediction", opt(r.derivative_prediction)},
          {"verdict", r.verdict},
          {"warnings", r.warnings},
          {"wall_time_s", r.wall_time_s}};
}

ExperimentReport report_from_json(const json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) throw SchemaVersionError(version, kSchemaVersion);
  ExperimentReport r;
  r.schema_version = version;
  r.experiment = j.at("experiment").get<std::string>();
  r.config = j.at("config");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.seed_rule = j.at("seed_rule").get<std::string>();
  r.risk_at_F0 = j.at("risk_at_F0").get<double>();
  r.reference_law = j.at("reference_law").get<std::string>();
  r.reference_variance = opt_from(j, "reference_variance");
  r.reference_consistency_ks = opt_from(j, "reference_consistency_ks");
  for (const auto& rj : j.at("rows")) {
    SampleSizeRow row;
    row.n = rj.at("n").get<std::size_t>();
    row.rate = rj.at("rate").get<double>();
    row.summary = summary_from(rj.at("summary"));
    row.ks = opt_from(rj, "ks");
    row.ks_status = rj.at("ks_status").get<std::string>();
    row.median_scaled_abs_error = opt_from(rj, "median_scaled_abs_error");
    row.median_scaled_norm = opt_from(rj, "median_scaled_norm");
    row.scaled_errors = rj.at("scaled_errors").get<std::vector<double>>();
    row.scaled_norms = rj.at("scaled_norms").get<std::vector<double>>();
    r.rows.push_back(std::move(row));
  }
  for (const auto& sj : j.at("sensitivity")) {
    r.sensitivity.push_back({sj.at("h").get<double>(), opt_from(sj, "value"),
                             opt_from(sj, "slope"), sj.at("error").get<std::string>()});
  }
  r.derivative_prediction = opt_from(j, "derivative_prediction");
  r.verdict = j.at("verdict").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

void persist_report(const ExperimentReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  out << to_json(r).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for report '" + path + "'");
}

ExperimentReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report '" + path + "'");
  json j;
  try {
    in >> j;
    return report_from_json(j);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed report '" + path + "': " + e.what());
  }
}

void export_scaled_errors_csv(const ExperimentReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const bool norms = std::any_of(r.rows.begin(), r.rows.end(),
                                 [](const auto& row) { return !row.scaled_norms.empty(); });
  out << "n,replication,scaled_error" << (norms ? ",scaled_norm" : "") << "\n";
  out.precision(17);
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < row.scaled_errors.size(); ++k) {
      out << row.n << "," << k << "," << row.scaled_errors[k];
      if (norms) out << "," << (k < row.scaled_norms.size() ? row.scaled_norms[k] : 0.0);
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace qhrisk
