#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qhrisk/errors.hpp"
#include "qhrisk/weights.hpp"

using namespace qhrisk;

TEST(WeightFn, PowerFamily) {
  const auto phi = WeightFn::power(2);
  EXPECT_DOUBLE_EQ(phi(-1.0), 4.0);
  EXPECT_DOUBLE_EQ(phi(0.0), 1.0);
  EXPECT_DOUBLE_EQ(WeightFn::one()(123.0), 1.0);
  EXPECT_THROW(WeightFn::power(-1), DomainError);
  EXPECT_TRUE(is_admissible_weight(phi));
  EXPECT_FALSE(is_admissible_weight(WeightFn::custom([](double x) { return 1 + x * x * std::exp(-x * x); }, "hump")));
}

TEST(SupNorm, ZeroAndConstant) {
  EXPECT_EQ(weighted_sup_norm(Direction(), WeightFn::power(1)), 0.0);
  EXPECT_DOUBLE_EQ(weighted_sup_norm(Direction::constant(0, 1, 1.0), WeightFn::one()), 1.0);
}

TEST(SupNorm, PolynomialAgainstDenseGrid) {
  // v(x) = x (1 - x) on [0,1), phi_1
  const auto v = Direction::piecewise({0, 1}, {{0, 1, -1, 0}});
  double brute = 0.0;
  for (int i = 0; i <= 1000000; ++i) {
    const double x = i / 1e6;
    brute = std::max(brute, x * (1 - x) * (1 + x));
  }
  EXPECT_NEAR(weighted_sup_norm(v, WeightFn::power(1)), brute, 1e-10);
}

TEST(Direction, ArithmeticAndJumps) {
  const auto a = Direction::constant(0, 1, 2.0);
  const auto b = Direction::constant(0.5, 2, 1.0);
  const auto c = a - 0.5 * b;
  EXPECT_DOUBLE_EQ(c(0.25), 2.0);
  EXPECT_DOUBLE_EQ(c(0.75), 1.5);
  EXPECT_DOUBLE_EQ(c(1.5), -0.5);
  EXPECT_DOUBLE_EQ(c.left_limit(0.5), 2.0);
  const auto j = c.jumps();
  EXPECT_EQ(j, (std::vector<double>{0, 0.5, 1, 2}));
}

TEST(Direction, BumpIsContinuous) {
  const auto v = Direction::bump(0, 2, 0.5);
  EXPECT_TRUE(v.jumps(1e-15).empty());
  EXPECT_DOUBLE_EQ(v(1.0), 0.5);
  EXPECT_DOUBLE_EQ(v(0.0), 0.0);
  EXPECT_DOUBLE_EQ(v(2.0), 0.0);
  // C^1: one-sided slopes agree at the peak
  const double h = 1e-6;
  EXPECT_NEAR((v(1 + h) - v(1)) / h, (v(1) - v(1 - h)) / h, 1e-5);
}

TEST(Direction, CombinedBumpsFarFromOriginHaveNoJumps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.0, 6.0), uw(0.2, 3.0), uh(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const double a0 = ua(rng), a1 = ua(rng);
    const auto v = uh(rng) * Direction::bump(a0, a0 + uw(rng), uh(rng)) +
                   uh(rng) * Direction::bump(a1, a1 + uw(rng), uh(rng));
    EXPECT_TRUE(v.jumps().empty()) << k;
  }
  // a genuine jump still shows up
  const auto c = Direction::constant(3.0, 4.0, 1e-9);
  EXPECT_EQ(c.jumps().size(), 2u);
}

TEST(Direction, Difference) {
  const auto F0 = make_uniform(0, 1);
  const auto G = make_point_mass(0.5);
  const auto v = Direction::difference(G, F0);
  for (double x : {-1.0, 0.2, 0.5, 0.7, 1.5}) {
    EXPECT_NEAR(v(x), G.cdf(x) - F0.cdf(x), 1e-15);
  }
}

TEST(Membership, TangentSpace) {
  const auto U = make_uniform(0, 1);
  EXPECT_TRUE(membership_C(Direction::bump(0.2, 0.8, 0.1), U).member);
  const auto jump = Direction::piecewise({0, 0.5, 1}, {{0, 0, 0, 0}, {1, 0, 0, 0}});
  const auto m = membership_C(jump, U);
  EXPECT_FALSE(m.member);
  ASSERT_FALSE(m.offending.empty());
  EXPECT_DOUBLE_EQ(m.offending.front(), 0.5);
  EXPECT_FALSE(m.reasons.empty());

  const auto D = make_discrete({{0, 1}, {0.5, 1}, {1, 1}});
  EXPECT_TRUE(membership_C(jump, D).member);
}

TEST(Membership, SupportWindow) {
  const auto U = make_uniform(0, 1);
  EXPECT_FALSE(membership_D(Direction::bump(0.5, 1.5, 0.1), U).member);
  EXPECT_TRUE(membership_D(Direction::bump(0.1, 0.9, 0.1), U).member);
}

TEST(EmpiricalDirection, SinglePoint) {
  const auto U = make_uniform(0, 1);
  const auto Fn = make_empirical({0.5});
  const auto d = empirical_direction(Fn, U, 1.0);
  EXPECT_FALSE(d.mass_outside_support);
  EXPECT_NEAR(weighted_sup_norm(d.direction, WeightFn::one()), 0.5, 1e-12);
}

TEST(EmpiricalDirection, NormIsKolmogorovStatistic) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::vector<double> xs(200);
  for (auto& x : xs) x = u(rng);
  const auto U = make_uniform(0, 1);
  const auto Fn = make_empirical(xs);
  auto s = xs;
  std::sort(s.begin(), s.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ks = std::max({ks, (i + 1.0) / s.size() - s[i], s[i] - double(i) / s.size()});
  }
  EXPECT_NEAR(ks_statistic(s, U), ks, 1e-15);
  EXPECT_NEAR(weighted_sup_norm(empirical_direction(Fn, U, 1.0).direction, WeightFn::one()), ks,
              1e-12);
  EXPECT_NEAR(weighted_ks_statistic(s, U, WeightFn::one()), ks, 1e-15);
}

TEST(EmpiricalDirection, OwnLawIsZero) {
  const auto D = make_discrete({{0, 1}, {1, 1}});
  const auto Fn = make_empirical({0, 1});
  const auto d = empirical_direction(Fn, D, 3.0);
  EXPECT_EQ(weighted_sup_norm(d.direction, WeightFn::power(2)), 0.0);
}

TEST(EmpiricalDirection, MassOutsideSupportIsFlagged) {
  const auto d = empirical_direction(make_empirical({0.5, 1.5}), make_uniform(0, 1), 1.0);
  EXPECT_TRUE(d.mass_outside_support);
}

TEST(WeightedKs, TailWeightMatters) {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> xs(500);
  for (auto& x : xs) x = e(rng);
  std::sort(xs.begin(), xs.end());
  const auto F0 = make_exponential(1);
  const double plain = weighted_ks_statistic(xs, F0, WeightFn::one());
  const double w2 = weighted_ks_statistic(xs, F0, WeightFn::power(2));
  EXPECT_GE(w2, plain);
  // dense check of sup |Fn - F0| (1+x)^2 between the order statistics
  double brute = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (int k = 0; k <= 20; ++k) {
      const double x = xs[i] + (xs[i + 1] - xs[i]) * k / 20.0;
      const double fn = (x < xs[i + 1] ? i + 1.0 : i + 2.0) / xs.size();
      brute = std::max(brute, std::abs(fn - F0.cdf(x)) * (1 + x) * (1 + x));
    }
  }
  EXPECT_GE(w2, brute * (1 - 1e-9));
}
