#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhrisk/distortion.hpp"
#include "qhrisk/distribution.hpp"
#include "qhrisk/numerics.hpp"
#include "qhrisk/risk.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk {

enum class Verdict {
  holds,
  fails,
  undecidable,
  converging,
  diverging_or_slow,
  sufficient_condition_only,
};

std::string to_string(Verdict v);

/// Tail classes of F0 plus the small-t exponent beta of g_rho
/// (g_rho(t) <= C t^beta near 0).
struct TailClass {
  TailBehavior left;
  TailBehavior right;
  double beta = 1.0;
  /// The exponent only yields a sufficient condition (Orlicz premiums).
  bool sufficient_only = false;

  void validate() const;
};

/// beta of g_rho for an evaluator; NaN when it cannot be read off
/// (Haezendonck with a non-power Young function).
double g_rho_exponent(const RiskEvaluator& ev);
TailClass tail_class(const Dist& F0, const RiskEvaluator& ev);
TailClass tail_class(const Dist& F0, double beta);

struct SymbolicVerdict {
  Verdict verdict = Verdict::undecidable;
  /// The exponent condition that decided the verdict.
  std::string reason;
};

/// Decides int F0^{-(1-beta)} / phi_lambda dx < inf from the tail classes:
///   left power tail kappa:     kappa (1 - beta) < lambda - 1
///   left exponential tail:     beta = 1 and lambda > 1
///   unbounded right tail:      lambda > 1
///   bounded tails:             no condition
SymbolicVerdict check_A22b_symbolic(const TailClass& tails, double lambda);

struct IntegrabilityProbe {
  Verdict verdict = Verdict::diverging_or_slow;
  double gamma = 0.5;
  /// Integral over the finite middle part and the probed tails so far.
  double body = 0.0;
  numerics::TailProbe left;
  numerics::TailProbe right;
  bool left_probed = false;
  bool right_probed = false;
  std::string note;
};

/// Integrates g_rho(gamma F0)/(F0 phi) over the support, tails by doubling
/// truncations; "converging" once a tail increment is below tol. `g_kinks`
/// are levels where g_rho is not smooth.
IntegrabilityProbe probe_integrability(const std::function<double(double)>& g_rho,
                                       const Dist& F0, const WeightFn& phi,
                                       double gamma = 0.5, double tol = 1e-10,
                                       std::span<const double> g_kinks = {});
IntegrabilityProbe probe_integrability(const Distortion& g_rho, const Dist& F0,
                                       const WeightFn& phi, double gamma = 0.5,
                                       double tol = 1e-10);

struct MomentCheck {
  Verdict verdict = Verdict::undecidable;
  /// "closed_form", "tail_exponent" or "quadrature".
  std::string method;
  /// The integral when finite, +inf when it diverges.
  double value = 0.0;
  std::string reason;
};

/// int phi^2 dF0 < inf.
MomentCheck check_clt_weight(const Dist& F0, const WeightFn& phi);
/// int phi^{1/(1-r)} dF0 < inf, r in [0, 1/2).
MomentCheck check_strong_law_weight(const Dist& F0, const WeightFn& phi, double r);
/// int phi^q dF0 for a general power q > 0.
MomentCheck check_weight_moment(const Dist& F0, const WeightFn& phi, double q);

struct SmoothnessCheck {
  Verdict verdict = Verdict::undecidable;
  /// D(F0): points where F0 is continuous but not C^1 with positive slope.
  std::vector<double> exceptional;
  std::string reason;
};

/// F0 continuously differentiable with positive derivative off a finite set.
SmoothnessCheck check_A22a(const Dist& F0);

nlohmann::json to_json(const numerics::TailProbe& p);
nlohmann::json to_json(const IntegrabilityProbe& p);
nlohmann::json to_json(const SymbolicVerdict& v);
nlohmann::json to_json(const MomentCheck& m);
nlohmann::json to_json(const SmoothnessCheck& s);

}  // namespace qhrisk
