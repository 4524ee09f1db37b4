#include "qhrisk/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "qhrisk/derivative.hpp"
#include "qhrisk/diagnostics.hpp"
#include "qhrisk/errors.hpp"
#include "qhrisk/harness.hpp"
#include "qhrisk/risk.hpp"
#include "qhrisk/specs.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk::cli {
namespace {

using nlohmann::json;

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

struct Common {
  std::string risk;
  std::string dist;
  std::string weight;
  std::string samples;
  std::string out;
  std::string config;
  std::string direction;
  std::string contamination;
  std::string t_grid;
  std::vector<std::size_t> n;
  std::vector<double> h;
  std::size_t replications = 0;
  std::size_t threads = 1;
  double rate = -1.0;
  double gamma = 0.5;
  std::uint64_t seed = kDefaultSeed;
  bool check = false;
  bool override_checks = false;
  int verbose = 0;
};

std::filesystem::path out_file(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return std::filesystem::path(c.out) / name;
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << j.dump(2) << "\n";
}

void print_warnings(const std::vector<std::string>& w, std::ostream& out) {
  for (const auto& s : w) out << "warning: " << s << "\n";
}

// ------------------------------------------------------------------ eval

int cmd_eval(const Common& c, std::ostream& out) {
  const auto ev = parse_risk(c.risk);
  if (c.dist.empty() == c.samples.empty()) {
    throw SpecError("eval needs exactly one of --dist and --samples", "--dist");
  }
  if (!c.samples.empty()) {
    const auto xs = read_samples_csv(c.samples);
    if (xs.empty()) throw SpecError("no samples in '" + c.samples + "'", c.samples);
    const bool lstat = ev.kind() == RiskKind::distortion || ev.kind() == RiskKind::kusuoka_sup;
    out << "risk: " << ev.name() << "\n";
    out << "value: " << num(ev.eval_samples(xs)) << "\n";
    out << "path: " << (lstat ? "L-statistic" : "empirical law") << " (n = " << xs.size()
        << ")\n";
    return kOk;
  }
  const auto F = parse_dist(c.dist);
  const double v = ev.eval(F);
  out << "risk: " << ev.name() << "\n";
  out << "value: " << num(v) << "\n";
  out << "path: " << (F.is_discrete() ? "exact (discrete law)" : "quadrature") << "\n";
  const auto a = check_A22a(F);
  out << "diagnostics: smoothness of F0: " << to_string(a.verdict) << "\n";
  const auto phi = parse_weight(c.weight.empty() ? "one" : c.weight);
  if (phi.exponent()) {
    const auto b = check_A22b_symbolic(tail_class(F, ev), *phi.exponent());
    out << "diagnostics: tail integrability (" << phi.name() << "): "
        << to_string(b.verdict) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- gtable

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> t;
  if (s.empty()) {
    for (int i = 0; i <= 10; ++i) t.push_back(i / 10.0);
    return t;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const double x = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      if (!(x >= 0.0 && x <= 1.0)) throw SpecError("t outside [0,1]: '" + tok + "'", tok);
      t.push_back(x);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception&) {
      throw SpecError("not a number '" + tok + "' in --t", tok);
    }
  }
  return t;
}

int cmd_gtable(const Common& c, std::ostream& out) {
  const auto ev = parse_risk(c.risk);
  const auto t = parse_grid(c.t_grid);
  std::ostringstream csv;
  csv.precision(17);
  csv << "t,g_rho\n";
  for (double x : t) csv << x << "," << g_rho_from_measure(ev, x) << "\n";
  out << csv.str();
  if (!c.out.empty()) {
    std::ofstream f(out_file(c, "gtable.csv"));
    f << csv.str();
  }
  return kOk;
}

// ------------------------------------------------------------ derivative

int cmd_derivative(const Common& c, std::ostream& out) {
  const auto ev = parse_risk(c.risk);
  const auto F0 = parse_dist(c.dist);
  if (c.direction.empty()) throw SpecError("derivative needs --direction", "--direction");
  const auto v = parse_direction(c.direction, F0);
  DerivativeConfig cfg;
  cfg.override_checks = c.override_checks;
  const double d = qh_derivative(ev, F0, v, cfg);
  out << "derivative: " << num(d) << "\n";
  json j{{"risk", ev.name()}, {"dist", F0.describe()}, {"direction", c.direction},
         {"derivative", d}};
  int code = kOk;
  if (c.check) {
    const auto q = difference_quotient_check(ev, F0, v, d, cfg);
    json rows = json::array();
    for (const auto& r : q.rows) {
      if (!r.admissible) {
        out << "h = " << num(r.h) << ": skipped (" << r.note << ")\n";
      } else {
        out << "h = " << num(r.h) << ": quotient " << num(r.quotient) << ", error "
            << num(r.error) << "\n";
      }
      rows.push_back({{"h", r.h}, {"admissible", r.admissible}, {"quotient", r.quotient},
                      {"error", r.error}, {"note", r.note}});
    }
    out << "difference quotients: " << q.verdict() << " (final error "
        << num(q.final_error) << ")\n";
    j["quotients"] = rows;
    j["verdict"] = q.verdict();
    if (!q.converging) code = kVerdictFail;
  }
  if (!c.out.empty()) write_json(out_file(c, "derivative.json"), j);
  return code;
}

// ---------------------------------------------------------- experiments

bool given(const CLI::App& sub, const std::string& name) {
  const auto* o = sub.get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

ExperimentConfig experiment_config(const Common& c, const CLI::App& sub,
                                   const std::string& kind) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = ExperimentConfig::load(c.config);
  cfg.experiment = kind;
  if (given(sub, "--risk")) cfg.risk = c.risk;
  if (given(sub, "--dist")) cfg.dist = c.dist;
  if (given(sub, "--weight")) cfg.weight = c.weight;
  if (given(sub, "--n")) cfg.n_values = c.n;
  if (given(sub, "--replications")) cfg.replications = c.replications;
  if (given(sub, "--rate")) cfg.rate = {RateRule::power, c.rate, {}};
  if (given(sub, "--seed")) cfg.seed = c.seed;
  if (given(sub, "--threads")) cfg.threads = c.threads;
  if (given(sub, "--override")) cfg.override_checks = true;
  if (given(sub, "--contamination")) cfg.contamination = c.contamination;
  if (given(sub, "--h-grid")) cfg.h_grid = c.h;
  if (!c.out.empty()) cfg.output = (std::filesystem::path(c.out) / (kind + "_report.json")).string();
  return cfg;
}

int cmd_experiment(const Common& c, const CLI::App& sub, const std::string& kind,
                   std::ostream& out) {
  const auto cfg = experiment_config(c, sub, kind);
  const auto rep = run_experiment(cfg);
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    // artifacts must not depend on timing; the wall time goes to stdout (-v)
    auto stored = rep;
    stored.wall_time_s = 0.0;
    persist_report(stored, cfg.output);
    if (kind != "sensitivity") {
      export_scaled_errors_csv(rep, out_file(c, kind + "_errors.csv").string());
    } else {
      std::ofstream f(out_file(c, "sensitivity.csv"));
      f.precision(17);
      f << "h,value,slope,error\n";
      for (const auto& r : rep.sensitivity) {
        f << r.h << ",";
        if (r.value) f << *r.value;
        f << ",";
        if (r.slope) f << *r.slope;
        f << ",\"" << r.error << "\"\n";
      }
    }
  }
  print_warnings(rep.warnings, out);
  if (c.verbose > 0 || kind == "sensitivity") {
    for (const auto& r : rep.rows) {
      out << "n = " << r.n << ": mean " << num(r.summary.mean) << ", sd " << num(r.summary.sd);
      if (r.ks) out << ", ks " << num(*r.ks);
      if (r.median_scaled_abs_error) {
        out << ", median |error| " << num(*r.median_scaled_abs_error) << ", median norm "
            << num(*r.median_scaled_norm);
      }
      out << "\n";
    }
    for (const auto& r : rep.sensitivity) {
      out << "h = " << num(r.h) << ": ";
      if (r.value) out << "value " << num(*r.value);
      if (r.slope) out << ", slope " << num(*r.slope);
      if (!r.error.empty()) out << "error: " << r.error;
      out << "\n";
    }
    if (rep.derivative_prediction) {
      out << "derivative prediction: " << num(*rep.derivative_prediction) << "\n";
    }
    if (c.verbose > 0) out << "wall time: " << num(rep.wall_time_s) << " s\n";
  }
  std::string detail;
  if (kind == "clt" && !rep.rows.empty()) {
    const auto& last = rep.rows.back();
    detail = last.ks ? "n = " + std::to_string(last.n) + ", ks = " + num(*last.ks)
                     : last.ks_status;
    if (rep.verdict == "insufficient") detail = "a single replication gives no distance";
    if (rep.verdict == "no_reference") detail = "scaled errors recorded without a limit law";
  } else if (kind == "stronglaw" && !rep.rows.empty()) {
    const auto& last = rep.rows.back();
    detail = "final medians " + num(*last.median_scaled_abs_error) + " and " +
             num(*last.median_scaled_norm);
  } else if (kind == "sensitivity") {
    detail = std::to_string(rep.sensitivity.size()) + " rows";
  }
  out << kind << ": " << rep.verdict << " (" << detail << ")\n";
  const bool failed = rep.verdict == "fail" || rep.verdict == "not-consistent";
  return failed ? kVerdictFail : kOk;
}

// -------------------------------------------------------------- diagnose

int cmd_diagnose(const Common& c, const CLI::App& sub, std::ostream& out) {
  const auto ev = parse_risk(c.risk);
  const auto F0 = parse_dist(c.dist);
  const auto phi = parse_weight(c.weight.empty() ? "one" : c.weight);
  json j{{"risk", ev.name()}, {"dist", F0.describe()}, {"weight", phi.name()}};
  bool failed = false;

  const auto a = check_A22a(F0);
  out << "smoothness of F0: " << to_string(a.verdict) << " (" << a.reason << ")\n";
  j["smoothness"] = to_json(a);
  failed = failed || a.verdict == Verdict::fails;

  if (phi.exponent()) {
    const auto b = check_A22b_symbolic(tail_class(F0, ev), *phi.exponent());
    out << "tail integrability: " << to_string(b.verdict) << " (" << b.reason << ")\n";
    j["tail_integrability"] = to_json(b);
    failed = failed || b.verdict == Verdict::fails;
  }
  if (const auto g = ev.g_rho_closed_form()) {
    const auto p = probe_integrability(*g, F0, phi, c.gamma);
    out << "tail integrability, numeric probe: " << to_string(p.verdict) << "\n";
    j["probe"] = to_json(p);
  }
  const auto w = check_clt_weight(F0, phi);
  out << "weight moment for the CLT: " << to_string(w.verdict) << " (" << w.reason << ")\n";
  j["clt_weight"] = to_json(w);
  failed = failed || w.verdict == Verdict::fails;
  if (given(sub, "--rate")) {
    const auto s = check_strong_law_weight(F0, phi, c.rate);
    out << "weight moment for the strong law: " << to_string(s.verdict) << " ("
        << s.reason << ")\n";
    j["strong_law_weight"] = to_json(s);
    failed = failed || s.verdict == Verdict::fails;
  }
  if (!c.out.empty()) write_json(out_file(c, "diagnose.json"), j);
  return failed ? kVerdictFail : kOk;
}

void add_risk(CLI::App* s, Common& c, bool required = true) {
  auto* o = s->add_option("--risk", c.risk, "Risk measure spec, e.g. avatr:0.05");
  if (required) o->required();
}

void add_out(CLI::App* s, Common& c) {
  s->add_option("--out", c.out, "Output directory for JSON/CSV artifacts");
}

void add_experiment_flags(CLI::App* s, Common& c) {
  s->add_option("--config", c.config, "JSON experiment config");
  add_risk(s, c, false);
  s->add_option("--dist", c.dist, "Distribution spec of F0");
  s->add_option("--weight", c.weight, "Weight function, e.g. phi:2");
  s->add_option("--n", c.n, "Sample sizes, comma separated")->delimiter(',');
  s->add_option("--replications", c.replications, "Replications per sample size");
  s->add_option("--rate", c.rate, "Exponent r of the rate n^r");
  s->add_option("--seed", c.seed, "Root seed");
  s->add_option("--threads", c.threads, "Worker threads");
  s->add_flag("--override", c.override_checks, "Run even when a precondition fails");
  add_out(s, c);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plug-in estimation and sensitivity of law-invariant risk measures", "qhrisk"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print this help message (all subcommands) and exit");
  app.require_subcommand(1);
  Common c;
  app.add_flag("-v,--verbose", c.verbose, "More detail on stdout");

  auto* eval = app.add_subcommand("eval", "Evaluate R(F) for a law or a sample file");
  add_risk(eval, c);
  eval->add_option("--dist", c.dist, "Distribution spec, e.g. uniform:0,1");
  eval->add_option("--samples", c.samples, "CSV file with one sample per line");
  eval->add_option("--weight", c.weight, "Weight function for the diagnostics summary");

  auto* gtable = app.add_subcommand("gtable", "Tabulate t -> g_rho(t) as CSV");
  add_risk(gtable, c);
  gtable->add_option("--t", c.t_grid, "Levels in [0,1], comma separated (default 0,0.1,...,1)");
  add_out(gtable, c);

  auto* deriv = app.add_subcommand("derivative", "Derivative of R at F0 in a direction");
  add_risk(deriv, c);
  deriv->add_option("--dist", c.dist, "Distribution spec of F0")->required();
  deriv->add_option("--direction", c.direction,
                    "Direction spec: bump:a,b,h | const:a,b,v | diff:DIST")->required();
  deriv->add_flag("--check", c.check, "Compare with difference quotients");
  deriv->add_flag("--override", c.override_checks, "Skip the tangent-space check");
  add_out(deriv, c);

  auto* clt = app.add_subcommand("clt", "Monte Carlo check of the central limit theorem");
  add_experiment_flags(clt, c);

  auto* sl = app.add_subcommand("stronglaw", "Monte Carlo check of the strong law at rate n^r");
  add_experiment_flags(sl, c);

  auto* diag = app.add_subcommand("diagnose", "Check the integrability and smoothness assumptions");
  add_risk(diag, c);
  diag->add_option("--dist", c.dist, "Distribution spec of F0")->required();
  diag->add_option("--weight", c.weight, "Weight function, e.g. phi:2");
  diag->add_option("--rate", c.rate, "Exponent r for the strong-law weight check");
  diag->add_option("--gamma", c.gamma, "gamma in (0,1) for the numeric probe");
  add_out(diag, c);

  auto* sens = app.add_subcommand("sensitivity", "R((1-h) F0 + h G) over a grid of h");
  add_experiment_flags(sens, c);
  sens->add_option("--contamination", c.contamination, "Distribution spec of G");
  sens->add_option("--h-grid", c.h, "Mixing weights, comma separated")->delimiter(',');

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (eval->parsed()) return cmd_eval(c, out);
    if (gtable->parsed()) return cmd_gtable(c, out);
    if (deriv->parsed()) return cmd_derivative(c, out);
    if (clt->parsed()) return cmd_experiment(c, *clt, "clt", out);
    if (sl->parsed()) return cmd_experiment(c, *sl, "stronglaw", out);
    if (sens->parsed()) return cmd_experiment(c, *sens, "sensitivity", out);
    if (diag->parsed()) return cmd_diagnose(c, *diag, out);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << " [token: " << e.token() << "]\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SchemaVersionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrabilityError& e) {
    err << "error: " << e.what() << "\n";
    return eval->parsed() ? kVerdictFail : kNumeric;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace qhrisk::cli
