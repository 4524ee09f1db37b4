#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qhrisk/distortion.hpp"
#include "qhrisk/distribution.hpp"
#include "qhrisk/numerics.hpp"
#include "qhrisk/risk.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk {

struct DerivativeConfig {
  /// Tolerance defining the exact maximizer set {g : R_g(F0) >= R(F0) - eps}.
  double eps_active = 1e-9;
  /// Decreasing eps values approximating the eps -> 0 limit.
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  numerics::QuadOptions quad{1e-10, 1e-13, 15};
  /// Decreasing steps for difference quotients.
  std::vector<double> h_schedule{1e-1, 1e-2, 1e-3, 1e-4};
  /// Final-error threshold of the difference-quotient verdict.
  double tolerance = 1e-3;
  /// Skip the tangent-space membership precondition.
  bool override_checks = false;

  /// Throws DomainError unless tolerances are positive and schedules
  /// strictly decreasing.
  void validate() const;
};

/// int g'(F0(x)) v(x) dx over [F0^->(0), F0^<-(1)]. Throws PreconditionError
/// when v is not in the tangent space (unless overridden) and NumericError
/// when quadrature fails.
double qh_derivative_single(const Distortion& g, const Dist& F0,
                            const Direction& v, const DerivativeConfig& cfg = {});

struct EpsStep {
  double eps = 0.0;
  std::vector<std::size_t> active;
  double sup = 0.0;
};

struct FamilyDerivative {
  double value = 0.0;
  /// Active set at the smallest eps.
  std::vector<std::size_t> active;
  std::vector<double> member_risks;
  std::vector<double> member_derivatives;
  std::vector<EpsStep> sweep;
  /// Active set unchanged over the last two eps values.
  bool stabilized = false;
  /// Members within cfg.eps_active of the maximum.
  std::vector<std::size_t> maximizers;
  /// sup of the derivative over the exact maximizers.
  double maximizer_value = 0.0;
};

FamilyDerivative qh_derivative_family(std::span<const Distortion> family,
                                      const Dist& F0, const Direction& v,
                                      const DerivativeConfig& cfg = {});

/// The derivative of a Kusuoka-type evaluator at F0 in direction v
/// (distortion and finite-family kinds only).
double qh_derivative(const RiskEvaluator& ev, const Dist& F0,
                     const Direction& v, const DerivativeConfig& cfg = {});

struct QuotientRow {
  double h = 0.0;
  bool admissible = true;
  std::string note;
  double quotient = 0.0;
  double error = 0.0;
};

struct QuotientReport {
  std::vector<QuotientRow> rows;
  double claimed = 0.0;
  double final_error = 0.0;
  bool decreasing = false;
  bool converging = false;
  std::string verdict() const { return converging ? "converging" : "not_converging"; }
};

/// |(R(F0 + h v) - R(F0)) / h - claimed| over cfg.h_schedule.
QuotientReport difference_quotient_check(const RiskEvaluator& ev, const Dist& F0,
                                         const Direction& v, double claimed,
                                         const DerivativeConfig& cfg = {});

struct LipschitzRow {
  std::size_t direction = 0;
  double scale = 0.0;
  bool admissible = true;
  double ratio = 0.0;
};

struct LipschitzReport {
  std::vector<LipschitzRow> rows;
  double max_ratio = 0.0;
  bool bounded = false;
  std::string verdict() const { return bounded ? "bounded" : "growing"; }
};

/// |R(F0 + s u) - R(F0)| / ||s u||_phi for each direction and decreasing s.
LipschitzReport quasi_lipschitz_check(const RiskEvaluator& ev, const Dist& F0,
                                      std::span<const Direction> directions,
                                      std::span<const double> scales,
                                      const WeightFn& phi = WeightFn::one());

/// sigma^2 = int int g'(F0 x) g'(F0 y) F0(x ^ y)(1 - F0(x v y)) dx dy, the
/// variance of the derivative applied to the F0-Brownian bridge.
double asymptotic_variance_iid(const Distortion& g, const Dist& F0,
                               const DerivativeConfig& cfg = {});

/// The linear map B -> int g'(F0(x)) B(x) dx discretised on bridge levels:
/// value = sum_i weight_i W(level_i) for a standard bridge W.
struct BridgeFunctional {
  std::vector<double> levels;
  /// One weight vector per distortion.
  std::vector<std::vector<double>> weights;

  double apply(std::size_t member, std::span<const double> bridge) const;
  /// Exact variance of the discretised functional of member k.
  double variance(std::size_t member) const;
};

/// Levels cluster towards 0 (and towards 1 when some member is active
/// there); kinks of the members are cell boundaries.
BridgeFunctional bridge_functional(std::span<const Distortion> family,
                                   const Dist& F0, std::size_t cells = 2000);

struct BridgeVarianceMC {
  double variance = 0.0;
  /// Plain second-moment estimate without the control variate.
  double raw_variance = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Monte Carlo variance of the derivative applied to simulated F0-Brownian
/// bridges, using a coarse-grid copy of the functional (whose variance is
/// known in closed form) as a control variate.
BridgeVarianceMC variance_mc_bridge(const Distortion& g, const Dist& F0,
                                    std::size_t draws, std::uint64_t seed,
                                    std::size_t cells = 2000);

}  // namespace qhrisk
