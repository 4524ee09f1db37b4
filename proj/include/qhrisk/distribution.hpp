#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qhrisk {

class Direction;

using Rng = std::mt19937_64;

struct Atom {
  double x = 0.0;
  double p = 0.0;
};

enum class DistFamily {
  uniform,
  exponential,
  pareto,
  normal,
  discrete,
  piecewise_linear,
  mixture,
  reflected,
  perturbed,
};

/// Tail behaviour of one side of a distribution function, used by the
/// symbolic integrability checks.
struct TailBehavior {
  enum class Kind { bounded, power, exponential, unknown };
  Kind kind = Kind::unknown;
  /// Power exponent kappa (F ~ c |x|^-kappa) or exponential rate.
  double exponent = 0.0;

  bool operator==(const TailBehavior&) const = default;
};

/// Backend interface for distribution functions. Implementations are
/// immutable; Dist shares them by pointer.
class DistModel {
 public:
  virtual ~DistModel() = default;

  virtual double cdf(double x) const = 0;
  /// P(X < x).
  virtual double cdf_left(double x) const { return cdf(x); }
  /// P(X > x), accurate in the right tail.
  virtual double sf(double x) const { return 1.0 - cdf(x); }
  /// F^<-(s) = inf{x : F(x) >= s}, s in (0,1].
  virtual double left_inv(double s) const;
  /// F^->(s) = inf{x : F(x) > s}, s in [0,1).
  virtual double right_inv(double s) const;
  /// F^<-(1 - q) evaluated without forming 1 - q.
  virtual double upper_quantile(double q) const { return left_inv(1.0 - q); }
  virtual double lower() const = 0;
  virtual double upper() const = 0;
  virtual std::optional<double> density(double x) const {
    (void)x;
    return std::nullopt;
  }
  virtual bool has_density() const { return false; }
  /// The finite exceptional set D(F0) where F0 is continuous but not C^1
  /// with positive derivative.
  virtual std::vector<double> nonsmooth_points() const { return {}; }
  virtual std::vector<Atom> atoms() const { return {}; }
  /// True when the law is carried by atoms() alone.
  virtual bool is_discrete() const { return false; }
  /// Levels in (0,1) across which F^<- may fail to be smooth.
  virtual std::vector<double> quantile_breaks() const;
  virtual double sample(Rng& rng) const;
  virtual DistFamily family() const = 0;
  virtual std::vector<double> params() const { return {}; }
  virtual TailBehavior left_tail() const;
  virtual TailBehavior right_tail() const;
  virtual std::string describe() const = 0;

 protected:
  /// Generic inverses by bisection on the cdf, exact at atoms.
  double bisect_left_inv(double s) const;
  double bisect_right_inv(double s) const;
};

/// Distribution function with inverses, support endpoints, optional density,
/// exceptional smoothness set and sampler. Cheap to copy.
class Dist {
 public:
  explicit Dist(std::shared_ptr<const DistModel> model);

  double cdf(double x) const { return m_->cdf(x); }
  double cdf_left(double x) const { return m_->cdf_left(x); }
  double sf(double x) const { return m_->sf(x); }
  double left_inv(double s) const;
  double right_inv(double s) const;
  double upper_quantile(double q) const { return m_->upper_quantile(q); }
  /// F^->(0).
  double lower() const { return m_->lower(); }
  /// F^<-(1).
  double upper() const { return m_->upper(); }
  std::optional<double> density(double x) const { return m_->density(x); }
  bool has_density() const { return m_->has_density(); }
  std::vector<double> nonsmooth_points() const { return m_->nonsmooth_points(); }
  std::vector<Atom> atoms() const { return m_->atoms(); }
  bool is_discrete() const { return m_->is_discrete(); }
  std::vector<double> quantile_breaks() const { return m_->quantile_breaks(); }
  double sample(Rng& rng) const { return m_->sample(rng); }
  std::vector<double> sample(Rng& rng, std::size_t n) const;
  DistFamily family() const { return m_->family(); }
  std::vector<double> params() const { return m_->params(); }
  TailBehavior left_tail() const { return m_->left_tail(); }
  TailBehavior right_tail() const { return m_->right_tail(); }
  std::string describe() const { return m_->describe(); }

  const DistModel& model() const { return *m_; }
  const std::shared_ptr<const DistModel>& model_ptr() const { return m_; }

 private:
  std::shared_ptr<const DistModel> m_;
};

/// Empirical distribution function (1/n) sum 1_{[X_i, inf)}.
class EmpiricalDist {
 public:
  explicit EmpiricalDist(std::vector<double> samples);

  std::span<const double> sorted_samples() const { return sorted_; }
  std::size_t n() const { return sorted_.size(); }
  const Dist& dist() const { return dist_; }
  operator const Dist&() const { return dist_; }  // NOLINT

  double cdf(double x) const { return dist_.cdf(x); }
  /// The ceil(n t)-th order statistic.
  double left_inv(double t) const { return dist_.left_inv(t); }

 private:
  std::vector<double> sorted_;
  Dist dist_;
};

enum class ParametricFamily { uniform, exponential, pareto, normal };

/// uniform(a, b); exponential(rate); pareto(shape, scale); normal(mean, sd).
Dist make_parametric(ParametricFamily family, std::span<const double> params);
Dist make_uniform(double a, double b);
Dist make_exponential(double rate);
Dist make_pareto(double shape, double scale);
Dist make_normal(double mean, double sd);

EmpiricalDist make_empirical(std::vector<double> samples);

/// Reads one value per line; a non-numeric first line is taken as header.
std::vector<double> read_samples_csv(const std::string& path);

/// Law of -B with B ~ Bernoulli(t): mass t at -1 and 1 - t at 0.
Dist make_two_point(double t);
Dist make_point_mass(double m);
/// Finite discrete law; weights are normalised, equal x merged.
Dist make_discrete(std::vector<Atom> atoms);

/// Continuous law with piecewise-linear cdf through (x_i, F_i),
/// F_0 = 0 < F_1 < ... < F_k = 1. Interior knots are declared nonsmooth.
Dist make_piecewise_linear(std::vector<double> x, std::vector<double> F);

/// (1 - h) F0 + h G.
Dist contaminate(const Dist& F0, const Dist& G, double h);

/// Law of -X.
Dist reflect(const Dist& F);

/// The function F0 + h v (not validated; see is_distribution_function).
Dist perturb(const Dist& F0, const Direction& v, double h);

struct DfCheck {
  bool ok = true;
  std::string reason;
};

/// Checks on a grid that F0 + h v is nondecreasing with values in [0,1].
DfCheck is_distribution_function(const Dist& F0, const Direction& v, double h,
                                 int grid_per_segment = 64);

}  // namespace qhrisk
