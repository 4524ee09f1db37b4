#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhrisk/distortion.hpp"
#include "qhrisk/distribution.hpp"
#include "qhrisk/numerics.hpp"

namespace qhrisk {

struct EvalOptions {
  numerics::QuadOptions quad{1e-11, 1e-13, 15};
  /// Run the doubling-truncation probe on unbounded tails first.
  bool probe_tails = true;
};

/// rho_g(X) for X ~ F, computed as -int_0^1 F^<-(t) g'(t) dt by quadrature.
/// Throws IntegrabilityError when a tail integral does not settle.
double eval_distortion_risk(const Distortion& g, const Dist& F,
                            const EvalOptions& opt = {});

/// The same value from int_{-inf}^0 g(F) dx - int_0^inf (1 - g(F)) dx.
double eval_distortion_risk_xdomain(const Distortion& g, const Dist& F,
                                    const EvalOptions& opt = {});

/// Exact L-statistic -sum_i X_(i) [g(i/n) - g((i-1)/n)].
double eval_empirical_L(const Distortion& g, std::span<const double> samples);
/// Same with the samples already sorted ascending.
double eval_empirical_L_sorted(const Distortion& g,
                               std::span<const double> sorted);

double avatr(double alpha, const Dist& F, const EvalOptions& opt = {});

struct SupResult {
  double value = 0.0;
  /// Members within eps_active of the maximum, in family order.
  std::vector<std::size_t> argmax;
  std::vector<double> member_values;
};

SupResult kusuoka_sup(std::span<const Distortion> family, const Dist& F,
                      double eps_active = 1e-12, const EvalOptions& opt = {});

double expectile_risk(double alpha, const Dist& F, const EvalOptions& opt = {});
double expectile_risk(double alpha, std::span<const double> samples);

double one_sided_moment_risk(double a, double p, const Dist& F,
                             const EvalOptions& opt = {});
double one_sided_moment_risk(double a, double p,
                             std::span<const double> samples);

/// Young function psi: [0, inf) -> [0, inf), increasing, psi(0) = 0,
/// psi(1) = 1.
class YoungFn {
 public:
  /// psi(u) = u^q, q >= 1.
  static YoungFn power(double q);
  static YoungFn custom(std::function<double(double)> f, std::string name);

  double operator()(double u) const;
  std::optional<double> exponent() const { return q_; }
  const std::string& name() const { return name_; }

 private:
  YoungFn() = default;
  std::optional<double> q_;
  std::function<double(double)> f_;
  std::string name_;
};

struct HgResult {
  double value = 0.0;
  /// The x attaining the infimum (the largest loss -X when the infimum is
  /// only approached there).
  double x = 0.0;
};

/// Orlicz premium pi(x) > x solving E[psi((Y - x)^+ / (pi - x))] = 1 - alpha
/// for Y = -X; requires P[Y > x] > 0.
double haezendonck_premium(const YoungFn& psi, double alpha, const Dist& F,
                           double x, const EvalOptions& opt = {});
HgResult haezendonck_risk(const YoungFn& psi, double alpha,
                          std::span<const double> samples);
HgResult haezendonck_risk(const YoungFn& psi, double alpha, const Dist& F,
                          const EvalOptions& opt = {});

enum class RiskKind { distortion, kusuoka_sup, one_sided_moment, expectile, haezendonck };

std::string to_string(RiskKind kind);

/// A law-invariant coherent risk measure with distribution-level and
/// sample-level evaluation.
class RiskEvaluator {
 public:
  static RiskEvaluator distortion(Distortion g);
  static RiskEvaluator kusuoka_sup(std::vector<Distortion> family,
                                   double eps_active = 1e-12);
  static RiskEvaluator one_sided_moment(double a, double p);
  static RiskEvaluator expectile(double alpha);
  static RiskEvaluator haezendonck(YoungFn psi, double alpha);

  /// R_rho(F). Discrete laws are summed exactly; others by quadrature.
  double eval(const Dist& F, const EvalOptions& opt = {}) const;
  /// rho of the empirical law of the samples.
  double eval_samples(std::span<const double> samples) const;

  RiskKind kind() const { return kind_; }
  std::string name() const;
  /// The distortion for kind distortion, the family for kusuoka_sup.
  const std::vector<Distortion>& family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const YoungFn* young() const { return psi_ ? &*psi_ : nullptr; }
  /// g_rho in closed form where the measure is a distortion measure or one of
  /// the examples with a known formula.
  std::optional<Distortion> g_rho_closed_form() const;

 private:
  RiskEvaluator(RiskKind kind) : kind_(kind) {}
  RiskKind kind_;
  std::vector<Distortion> family_;
  std::vector<double> params_;
  std::optional<YoungFn> psi_;
};

/// g_rho(t) = rho(-B) with B ~ Bernoulli(t), evaluated on the two-point law.
double g_rho_from_measure(const RiskEvaluator& ev, double t);

/// E[h(X)] for X ~ F. Exact for discrete F, otherwise quantile quadrature
/// split at the given x-kinks of h. Throws IntegrabilityError on failure.
double expectation(const Dist& F, const std::function<double(double)>& h,
                   std::span<const double> x_kinks = {},
                   const EvalOptions& opt = {});

}  // namespace qhrisk
