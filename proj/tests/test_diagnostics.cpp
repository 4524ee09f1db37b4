#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qhrisk/diagnostics.hpp"
#include "qhrisk/errors.hpp"

using namespace qhrisk;

namespace {

TailClass classes(TailBehavior left, TailBehavior right, double beta) {
  TailClass t;
  t.left = left;
  t.right = right;
  t.beta = beta;
  return t;
}

const TailBehavior kBounded{TailBehavior::Kind::bounded, 0.0};

TailBehavior power(double k) { return {TailBehavior::Kind::power, k}; }
TailBehavior expo(double r) { return {TailBehavior::Kind::exponential, r}; }

}  // namespace

TEST(Symbolic, CompactSupportAlwaysHolds) {
  for (double lambda : {0.0, 0.5, 3.0}) {
    for (double beta : {0.2, 1.0}) {
      EXPECT_EQ(check_A22b_symbolic(classes(kBounded, kBounded, beta), lambda).verdict,
                Verdict::holds);
    }
  }
}

TEST(Symbolic, ExpectileReducesToIntegrableInverseWeight) {
  const auto ev = RiskEvaluator::expectile(0.8);
  const auto F0 = make_exponential(1);
  EXPECT_EQ(check_A22b_symbolic(tail_class(F0, ev), 2.0).verdict, Verdict::holds);
  EXPECT_EQ(check_A22b_symbolic(tail_class(F0, ev), 1.0).verdict, Verdict::fails);
  const auto N = make_normal(0, 1);
  EXPECT_EQ(check_A22b_symbolic(tail_class(N, ev), 1.5).verdict, Verdict::holds);
  EXPECT_EQ(check_A22b_symbolic(tail_class(N, ev), 0.5).verdict, Verdict::fails);
}

TEST(Symbolic, LeftPowerTail) {
  // kappa (1 - beta) < lambda - 1
  EXPECT_EQ(check_A22b_symbolic(classes(power(3), kBounded, 0.5), 3.0).verdict, Verdict::holds);
  EXPECT_EQ(check_A22b_symbolic(classes(power(3), kBounded, 0.5), 2.0).verdict, Verdict::fails);
  EXPECT_EQ(check_A22b_symbolic(classes(expo(1), kBounded, 0.5), 5.0).verdict, Verdict::fails);
  EXPECT_EQ(check_A22b_symbolic(classes(expo(1), kBounded, 1.0), 1.5).verdict, Verdict::holds);
}

TEST(Symbolic, UnknownAndOrlicz) {
  EXPECT_EQ(check_A22b_symbolic(classes({}, kBounded, 1.0), 2.0).verdict, Verdict::undecidable);
  auto t = classes(kBounded, expo(1), 0.5);
  t.sufficient_only = true;
  EXPECT_EQ(check_A22b_symbolic(t, 2.0).verdict, Verdict::sufficient_condition_only);
  EXPECT_EQ(check_A22b_symbolic(t, 0.5).verdict, Verdict::undecidable);
  EXPECT_NEAR(g_rho_exponent(RiskEvaluator::haezendonck(YoungFn::power(2), 0.5)), 0.5, 0);
  EXPECT_EQ(tail_class(make_uniform(0, 1), RiskEvaluator::haezendonck(YoungFn::power(2), 0.5))
                .sufficient_only,
            true);
}

TEST(Symbolic, Exponents) {
  EXPECT_DOUBLE_EQ(g_rho_exponent(RiskEvaluator::one_sided_moment(0.5, 4)), 0.25);
  EXPECT_DOUBLE_EQ(g_rho_exponent(RiskEvaluator::distortion(Distortion::avatr(0.1))), 1.0);
  EXPECT_DOUBLE_EQ(
      g_rho_exponent(RiskEvaluator::kusuoka_sup(
          {Distortion::avatr(0.1), Distortion::proportional_hazard(0.3)})),
      0.3);
}

TEST(Probe, CompactSupportConverges) {
  const auto F0 = make_uniform(0, 1);
  const auto r = probe_integrability(Distortion::avatr(0.2), F0, WeightFn::one());
  EXPECT_EQ(r.verdict, Verdict::converging);
  EXPECT_FALSE(r.left_probed);
  EXPECT_FALSE(r.right_probed);
  // int_0^1 g(F/2)/F dx with g = avatr(0.2): 1/0.2 * 1/2 on F <= 0.4, then 1/F
  const double exact = 0.4 * 2.5 + std::log(1 / 0.4);
  EXPECT_NEAR(r.body, exact, 1e-8);
}

TEST(Probe, IdentityOnNegativeExponential) {
  const auto F0 = reflect(make_exponential(1));
  const auto g = Distortion::identity();
  EXPECT_EQ(probe_integrability(g, F0, WeightFn::one()).verdict, Verdict::diverging_or_slow);
  const auto ok = probe_integrability(g, F0, WeightFn::power(2));
  EXPECT_EQ(ok.verdict, Verdict::converging);
  // integrand is gamma / (1+|x|)^2 on the negative half-line; the tail
  // total carries a geometric remainder estimate
  EXPECT_NEAR(ok.body, 0.5, 1e-2);
}

TEST(Probe, RejectsGamma) {
  EXPECT_THROW(probe_integrability(Distortion::identity(), make_uniform(0, 1), WeightFn::one(), 1.0),
               DomainError);
}

TEST(CltWeight, Cases) {
  EXPECT_EQ(check_clt_weight(make_pareto(1.1, 1), WeightFn::one()).verdict, Verdict::holds);
  EXPECT_DOUBLE_EQ(check_clt_weight(make_normal(0, 1), WeightFn::one()).value, 1.0);
  EXPECT_EQ(check_clt_weight(make_pareto(1.5, 1), WeightFn::power(1)).verdict, Verdict::fails);
  const auto e = check_clt_weight(make_exponential(1), WeightFn::power(1));
  EXPECT_EQ(e.verdict, Verdict::holds);
  // E (1+X)^2 = 1 + 2 + 2
  EXPECT_NEAR(e.value, 5.0, 1e-9);
}

TEST(StrongLawWeight, Cases) {
  EXPECT_EQ(check_strong_law_weight(make_pareto(1.1, 1), WeightFn::one(), 0.0).verdict,
            Verdict::holds);
  EXPECT_EQ(check_strong_law_weight(make_exponential(1), WeightFn::power(1), 0.25).verdict,
            Verdict::holds);
  // (1+|X|)^{3 / 0.75} needs kappa > 4
  EXPECT_EQ(check_strong_law_weight(make_pareto(2, 1), WeightFn::power(3), 0.25).verdict,
            Verdict::fails);
  EXPECT_THROW(check_strong_law_weight(make_exponential(1), WeightFn::one(), 0.5), DomainError);
  EXPECT_THROW(check_strong_law_weight(make_exponential(1), WeightFn::one(), -0.1), DomainError);
}

TEST(WeightMoment, CustomWeightUsesQuadrature) {
  const auto phi = WeightFn::custom([](double x) { return std::exp(std::abs(x) / 4); }, "exp");
  const auto m = check_weight_moment(make_exponential(1), phi, 2.0);
  EXPECT_EQ(m.method, "quadrature");
  EXPECT_EQ(m.verdict, Verdict::holds);
  EXPECT_NEAR(m.value, 2.0, 1e-8);
}

TEST(Smoothness, Cases) {
  const auto u = check_A22a(make_uniform(0, 1));
  EXPECT_EQ(u.verdict, Verdict::holds);
  EXPECT_TRUE(u.exceptional.empty());
  EXPECT_EQ(check_A22a(make_empirical({0.1, 0.5, 0.7}).dist()).verdict, Verdict::fails);
  const auto p = check_A22a(make_piecewise_linear({0, 1, 3}, {0, 0.5, 1}));
  EXPECT_EQ(p.verdict, Verdict::holds);
  EXPECT_EQ(p.exceptional, (std::vector<double>{1.0}));
  EXPECT_EQ(check_A22a(contaminate(make_uniform(0, 1), make_point_mass(0.5), 0.1)).verdict,
            Verdict::fails);
}

TEST(Json, VerdictsSerialise) {
  const auto j = to_json(check_clt_weight(make_exponential(1), WeightFn::power(1)));
  EXPECT_EQ(j["verdict"], "holds");
  EXPECT_EQ(to_string(Verdict::diverging_or_slow), "diverging-or-slow");
}
