#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "qhrisk/errors.hpp"
#include "qhrisk/risk.hpp"

using namespace qhrisk;

namespace {

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

// Rockafellar-Uryasev form of the Orlicz premium with psi(u) = u: the
// minimum of x + E(Y - x)^+ / (1 - alpha) is attained at a sample point.
double ru_cvar(const std::vector<double>& xs, double alpha) {
  double best = 1e300;
  for (double x0 : xs) {
    const double c = -x0;
    double tail = 0.0;
    for (double x : xs) tail += std::max(-x - c, 0.0);
    best = std::min(best, c + tail / xs.size() / (1 - alpha));
  }
  return best;
}

}  // namespace

TEST(DistortionRisk, AvatrUniform) {
  for (double a : {0.05, 0.2, 0.5, 1.0}) {
    EXPECT_NEAR(eval_distortion_risk(Distortion::avatr(a), make_uniform(0, 1)), -a / 2, 1e-10);
  }
}

TEST(DistortionRisk, IdentityExponential) {
  EXPECT_NEAR(eval_distortion_risk(Distortion::identity(), make_exponential(1)), -1.0, 1e-10);
}

TEST(DistortionRisk, PointMass) {
  for (double a : {0.1, 0.7}) {
    EXPECT_NEAR(eval_distortion_risk(Distortion::avatr(a), make_point_mass(3.5)), -3.5, 1e-12);
  }
}

TEST(DistortionRisk, XDomainAgrees) {
  const std::vector<Dist> laws{make_normal(0.3, 2), make_exponential(1.5),
                               make_pareto(3, 1), reflect(make_exponential(1))};
  const std::vector<Distortion> gs{Distortion::avatr(0.1), Distortion::expectile(0.8),
                                   Distortion::one_sided_moment(0.5, 2)};
  for (const auto& F : laws) {
    for (const auto& g : gs) {
      EXPECT_NEAR(eval_distortion_risk(g, F), eval_distortion_risk_xdomain(g, F), 1e-7)
          << g.name() << " " << F.describe();
    }
  }
}

TEST(DistortionRisk, DivergentMeanIsReported) {
  EXPECT_THROW(eval_distortion_risk(Distortion::identity(), reflect(make_pareto(0.8, 1))),
               IntegrabilityError);
}

TEST(EmpiricalL, SmallSamples) {
  const std::vector<double> xs{1, 2, 3};
  EXPECT_DOUBLE_EQ(eval_empirical_L(Distortion::identity(), xs), -2.0);
  EXPECT_NEAR(eval_empirical_L(Distortion::avatr(1.0 / 3), xs), -1.0, 1e-15);
  EXPECT_DOUBLE_EQ(eval_empirical_L(Distortion::avatr(1.0), xs), -2.0);
}

TEST(EmpiricalL, BruteForceWeights) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> xs(37);
  for (auto& x : xs) x = nd(rng);
  const auto g = Distortion::one_sided_moment(0.4, 3);
  auto s = xs;
  std::sort(s.begin(), s.end());
  double ref = 0.0;
  const double n = s.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t1 = (i + 1) / n, t0 = i / n;
    ref -= s[i] * ((t1 + 0.4 * (1 - t1) * std::cbrt(t1)) - (t0 + 0.4 * (1 - t0) * std::cbrt(t0)));
  }
  EXPECT_NEAR(eval_empirical_L(g, xs), ref, 1e-13);
}

TEST(Avatr, ExponentialClosedForm) {
  const double a = 0.05;
  const double closed = -((1 - a) * std::log(1 - a) + a) / a;
  EXPECT_NEAR(avatr(a, make_exponential(1)), closed, 1e-11);
  EXPECT_NEAR(avatr(1.0, make_uniform(0, 1)), -0.5, 1e-12);
  EXPECT_NEAR(avatr(0.5, make_uniform(0, 1)), -0.25, 1e-12);
}

TEST(KusuokaSup, Cases) {
  const auto F = make_uniform(0, 1);
  const std::vector<Distortion> single{Distortion::avatr(0.3)};
  EXPECT_NEAR(kusuoka_sup(single, F).value, eval_distortion_risk(single[0], F), 1e-14);

  const std::vector<Distortion> two{Distortion::identity(), Distortion::avatr(0.5)};
  const auto r = kusuoka_sup(two, F);
  EXPECT_NEAR(r.value, -0.25, 1e-12);
  EXPECT_EQ(r.argmax, (std::vector<std::size_t>{1}));

  const std::vector<Distortion> dup{Distortion::avatr(0.5), Distortion::avatr(0.5)};
  const auto d = kusuoka_sup(dup, F);
  EXPECT_NEAR(d.value, -0.25, 1e-12);
  EXPECT_EQ(d.argmax.size(), 2u);
}

TEST(Expectile, HalfIsNegativeMean) {
  const std::vector<double> xs{0.3, -1.2, 4.0, 2.2, 0.0};
  EXPECT_NEAR(expectile_risk(0.5, xs), -mean(xs), 1e-12);
  EXPECT_NEAR(expectile_risk(0.5, make_normal(1.3, 2)), -1.3, 1e-9);
}

TEST(Expectile, TwoPointMatchesClosedForm) {
  const std::vector<double> xs{-1, 0};
  EXPECT_NEAR(expectile_risk(0.75, xs), 0.75, 1e-12);
  EXPECT_NEAR(expectile_risk(0.75, make_two_point(0.5)), 0.75, 1e-12);
}

TEST(Expectile, FirstOrderCondition) {
  // alpha E(Y - e)^+ = (1 - alpha) E(e - Y)^+ for Y = -X, checked directly
  const std::vector<double> xs{0.5, 1.5, -2.0, 3.0, 0.1, -0.7};
  const double al = 0.8;
  const double e = expectile_risk(al, xs);
  double up = 0, down = 0;
  for (double x : xs) {
    up += std::max(-x - e, 0.0);
    down += std::max(e + x, 0.0);
  }
  EXPECT_NEAR(al * up, (1 - al) * down, 1e-10);
}

TEST(OneSidedMoment, ConstantAndTwoPoint) {
  EXPECT_NEAR(one_sided_moment_risk(0.7, 2, std::vector<double>{4, 4, 4}), -4.0, 1e-14);
  EXPECT_NEAR(one_sided_moment_risk(1.0, 1, std::vector<double>{-1, 1}), 0.5, 1e-14);
  EXPECT_NEAR(one_sided_moment_risk(0.3, 2, make_point_mass(2.0)), -2.0, 1e-12);
}

TEST(OneSidedMoment, DistributionMatchesDefinition) {
  // -mean + a ||(X - mean)^-||_p for uniform(0,1), p = 2: (E (1/2 - X)^+ ^2)^(1/2)
  const double pen = std::sqrt(1.0 / 24);
  EXPECT_NEAR(one_sided_moment_risk(0.5, 2, make_uniform(0, 1)), -0.5 + 0.5 * pen, 1e-9);
}

TEST(Haezendonck, ConstantSample) {
  const auto psi = YoungFn::power(1);
  EXPECT_NEAR(haezendonck_risk(psi, 0.7, std::vector<double>{2.5, 2.5, 2.5}).value, -2.5, 1e-10);
}

TEST(Haezendonck, LinearYoungIsRockafellarUryasev) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<double> xs(40);
  for (auto& x : xs) x = nd(rng);
  for (double al : {0.5, 0.9}) {
    EXPECT_NEAR(haezendonck_risk(YoungFn::power(1), al, xs).value, ru_cvar(xs, al), 1e-8);
  }
}

TEST(Haezendonck, QuadraticPremiumSolvesOrliczEquation) {
  const std::vector<double> xs{-1.0, 0.4, 2.0, -0.3, 1.1};
  const auto psi = YoungFn::power(2);
  const double al = 0.6;
  const auto r = haezendonck_risk(psi, al, xs);
  const double x = r.x;
  double s = 0;
  for (double v : xs) {
    const double u = std::max(-v - x, 0.0) / (r.value - x);
    s += u * u;
  }
  EXPECT_NEAR(s / xs.size(), 1 - al, 1e-8);
}

TEST(Haezendonck, DistributionAgreesWithDenseSample) {
  // uniform(0,1) law vs its midpoint quantile sample
  const std::size_t n = 20000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = (i + 0.5) / n;
  const auto psi = YoungFn::power(2);
  EXPECT_NEAR(haezendonck_risk(psi, 0.5, make_uniform(0, 1)).value,
              haezendonck_risk(psi, 0.5, xs).value, 1e-4);
}

TEST(GRho, Endpoints) {
  const std::vector<RiskEvaluator> evs{
      RiskEvaluator::expectile(0.8), RiskEvaluator::one_sided_moment(0.5, 2),
      RiskEvaluator::distortion(Distortion::avatr(0.2)),
      RiskEvaluator::haezendonck(YoungFn::power(2), 0.5)};
  for (const auto& ev : evs) {
    EXPECT_NEAR(g_rho_from_measure(ev, 0.0), 0.0, 1e-12) << ev.name();
    EXPECT_NEAR(g_rho_from_measure(ev, 1.0), 1.0, 1e-12) << ev.name();
  }
}

TEST(GRho, ClosedForms) {
  EXPECT_NEAR(g_rho_from_measure(RiskEvaluator::one_sided_moment(0.5, 2), 0.25), 0.4375, 1e-12);
  EXPECT_NEAR(g_rho_from_measure(RiskEvaluator::expectile(0.75), 0.5), 0.75, 1e-12);
  EXPECT_NEAR(g_rho_from_measure(RiskEvaluator::distortion(Distortion::avatr(0.2)), 0.1), 0.5,
              1e-12);
}

TEST(Evaluator, SamplesAndLawAgreeOnEmpirical) {
  const std::vector<double> xs{0.2, -1.0, 3.0, 0.7};
  const auto Fn = make_empirical(xs);
  const std::vector<RiskEvaluator> evs{
      RiskEvaluator::distortion(Distortion::avatr(0.3)),
      RiskEvaluator::kusuoka_sup({Distortion::avatr(0.5), Distortion::proportional_hazard(0.5)}),
      RiskEvaluator::one_sided_moment(0.5, 2), RiskEvaluator::expectile(0.7),
      RiskEvaluator::haezendonck(YoungFn::power(2), 0.4)};
  for (const auto& ev : evs) {
    EXPECT_NEAR(ev.eval(Fn.dist()), ev.eval_samples(xs), 1e-9) << ev.name();
  }
}

TEST(Expectation, ExactForDiscreteAndQuadratureOtherwise) {
  const auto sq = [](double x) { return x * x; };
  EXPECT_NEAR(expectation(make_discrete({{1, 1}, {3, 1}}), sq), 5.0, 1e-15);
  EXPECT_NEAR(expectation(make_exponential(1), sq), 2.0, 1e-10);
}

TEST(YoungFn, Validation) {
  EXPECT_THROW(YoungFn::power(0.5), DomainError);
  EXPECT_DOUBLE_EQ(YoungFn::power(2)(3.0), 9.0);
}
