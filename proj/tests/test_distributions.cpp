#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "qhrisk/distribution.hpp"
#include "qhrisk/errors.hpp"
#include "qhrisk/weights.hpp"

using namespace qhrisk;

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Parametric, UniformInverses) {
  const auto F = make_uniform(0, 1);
  EXPECT_DOUBLE_EQ(F.cdf(0.3), 0.3);
  EXPECT_DOUBLE_EQ(F.left_inv(0.3), 0.3);
  EXPECT_DOUBLE_EQ(F.right_inv(0.0), 0.0);
  EXPECT_DOUBLE_EQ(F.left_inv(1.0), 1.0);
  EXPECT_DOUBLE_EQ(F.lower(), 0.0);
  EXPECT_DOUBLE_EQ(F.upper(), 1.0);
  EXPECT_EQ(F.left_tail().kind, TailBehavior::Kind::bounded);
}

TEST(Parametric, ExponentialClosedForm) {
  const auto F = make_exponential(2.0);
  for (double x : {0.01, 0.5, 3.0}) {
    EXPECT_NEAR(F.cdf(x), 1 - std::exp(-2 * x), 1e-15);
    EXPECT_NEAR(F.sf(x), std::exp(-2 * x), 1e-15 * std::exp(-2 * x) + 1e-300);
  }
  EXPECT_NEAR(F.left_inv(0.5), std::log(2.0) / 2, 1e-15);
  EXPECT_NEAR(F.upper_quantile(1e-20), 20 * std::log(10.0) / 2, 1e-12);
  EXPECT_TRUE(std::isinf(F.upper()));
  EXPECT_EQ(F.right_tail().kind, TailBehavior::Kind::exponential);
  EXPECT_NEAR(*F.density(1.0), 2 * std::exp(-2.0), 1e-15);
}

TEST(Parametric, ParetoClosedForm) {
  const auto F = make_pareto(1.5, 2.0);
  EXPECT_EQ(F.cdf(1.9), 0.0);
  EXPECT_NEAR(F.cdf(4.0), 1 - std::pow(0.5, 1.5), 1e-15);
  EXPECT_NEAR(F.left_inv(0.5), 2.0 * std::pow(0.5, -1 / 1.5), 1e-12);
  EXPECT_EQ(F.right_tail().kind, TailBehavior::Kind::power);
  EXPECT_DOUBLE_EQ(F.right_tail().exponent, 1.5);
}

TEST(Parametric, NormalAgainstErfc) {
  const auto F = make_normal(1.0, 2.0);
  for (double x : {-5.0, -1.0, 0.0, 1.0, 2.5, 8.0}) {
    EXPECT_NEAR(F.cdf(x), std_normal_cdf((x - 1) / 2), 1e-15);
  }
  for (double s : {1e-10, 0.025, 0.5, 0.9}) {
    EXPECT_NEAR(std_normal_cdf((F.left_inv(s) - 1) / 2), s, 1e-13 * std::max(s, 1e-3));
  }
}

TEST(Parametric, InvalidParameters) {
  EXPECT_THROW(make_uniform(1, 0), DomainError);
  EXPECT_THROW(make_exponential(0), DomainError);
  EXPECT_THROW(make_pareto(-1, 1), DomainError);
  EXPECT_THROW(make_normal(0, 0), DomainError);
  const std::vector<double> too_many{1, 2, 3};
  EXPECT_THROW(make_parametric(ParametricFamily::normal, too_many), DomainError);
}

TEST(Empirical, InversesAreOrderStatistics) {
  const auto Fn = make_empirical({3, 1, 2, 2});
  EXPECT_EQ(Fn.n(), 4u);
  EXPECT_DOUBLE_EQ(Fn.cdf(0.5), 0.0);
  EXPECT_DOUBLE_EQ(Fn.cdf(2.0), 0.75);
  EXPECT_DOUBLE_EQ(Fn.dist().cdf_left(2.0), 0.25);
  // ceil(n t)-th order statistic
  EXPECT_DOUBLE_EQ(Fn.left_inv(0.25), 1.0);
  EXPECT_DOUBLE_EQ(Fn.left_inv(0.26), 2.0);
  EXPECT_DOUBLE_EQ(Fn.left_inv(1.0), 3.0);
  EXPECT_DOUBLE_EQ(Fn.dist().right_inv(0.25), 2.0);
  EXPECT_DOUBLE_EQ(Fn.dist().right_inv(0.0), 1.0);
  EXPECT_TRUE(Fn.dist().is_discrete());
}

TEST(Empirical, Errors) {
  EXPECT_THROW(make_empirical({}), DomainError);
  EXPECT_THROW(make_empirical({1.0, NAN}), DomainError);
}

TEST(TwoPoint, Cases) {
  const auto F0 = make_two_point(0.0);
  EXPECT_DOUBLE_EQ(F0.cdf(-0.5), 0.0);
  EXPECT_DOUBLE_EQ(F0.cdf(0.0), 1.0);
  const auto F1 = make_two_point(1.0);
  EXPECT_DOUBLE_EQ(F1.cdf(-1.0), 1.0);
  EXPECT_DOUBLE_EQ(F1.cdf(-1.0001), 0.0);
  const auto F = make_two_point(0.3);
  EXPECT_DOUBLE_EQ(F.cdf(-1.0), 0.3);
  EXPECT_DOUBLE_EQ(F.cdf(-0.5), 0.3);
  EXPECT_DOUBLE_EQ(F.cdf(0.0), 1.0);
  EXPECT_THROW(make_two_point(1.1), DomainError);
}

TEST(Contaminate, Endpoints) {
  const auto F0 = make_uniform(0, 1);
  const auto G = make_point_mass(0.0);
  const auto H0 = contaminate(F0, G, 0.0);
  const auto H1 = contaminate(F0, G, 1.0);
  for (double x : {-0.5, 0.0, 0.3, 0.9}) {
    EXPECT_DOUBLE_EQ(H0.cdf(x), F0.cdf(x));
    EXPECT_DOUBLE_EQ(H1.cdf(x), G.cdf(x));
  }
  EXPECT_DOUBLE_EQ(contaminate(F0, G, 0.5).cdf(0.0), 0.5);
  EXPECT_DOUBLE_EQ(contaminate(F0, G, 0.5).cdf(0.5), 0.75);
  EXPECT_THROW(contaminate(F0, G, -0.1), DomainError);
}

TEST(Contaminate, QuantileOfMixture) {
  const auto H = contaminate(make_uniform(0, 1), make_point_mass(2.0), 0.2);
  // F = 0.8 x on [0,1], jumps to 1 at 2
  EXPECT_NEAR(H.left_inv(0.4), 0.5, 1e-12);
  EXPECT_NEAR(H.left_inv(0.9), 2.0, 1e-12);
  EXPECT_NEAR(H.right_inv(0.8), 2.0, 1e-12);
  EXPECT_NEAR(H.left_inv(0.8), 1.0, 1e-12);
}

TEST(Discrete, MergesAndNormalises) {
  const auto F = make_discrete({{1.0, 2.0}, {0.0, 1.0}, {1.0, 1.0}});
  const auto atoms = F.atoms();
  ASSERT_EQ(atoms.size(), 2u);
  EXPECT_DOUBLE_EQ(atoms[0].x, 0.0);
  EXPECT_NEAR(atoms[0].p, 0.25, 1e-15);
  EXPECT_NEAR(atoms[1].p, 0.75, 1e-15);
  EXPECT_THROW(make_discrete({{0.0, -1.0}}), DomainError);
}

TEST(PiecewiseLinear, KnotsAreNonsmooth) {
  const auto F = make_piecewise_linear({0, 1, 3}, {0, 0.5, 1});
  EXPECT_DOUBLE_EQ(F.cdf(0.5), 0.25);
  EXPECT_DOUBLE_EQ(F.cdf(2.0), 0.75);
  EXPECT_NEAR(F.left_inv(0.75), 2.0, 1e-12);
  ASSERT_EQ(F.nonsmooth_points().size(), 1u);
  EXPECT_DOUBLE_EQ(F.nonsmooth_points()[0], 1.0);
  EXPECT_THROW(make_piecewise_linear({0, 1}, {0, 0.9}), DomainError);
}

TEST(Reflect, MirrorsTheLaw) {
  const auto F = reflect(make_exponential(1.0));
  EXPECT_NEAR(F.cdf(-1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(F.left_inv(0.5), -std::log(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(F.lower()));
  EXPECT_DOUBLE_EQ(F.upper(), 0.0);
  EXPECT_EQ(F.left_tail().kind, TailBehavior::Kind::exponential);
}

TEST(Perturb, BumpStaysADistributionFunction) {
  const auto F0 = make_exponential(1.0);
  const auto v = Direction::bump(0, 2, 0.5);
  EXPECT_TRUE(is_distribution_function(F0, v, 0.1).ok);
  EXPECT_FALSE(is_distribution_function(F0, v, 2.0).ok);
  const auto F = perturb(F0, v, 0.1);
  EXPECT_NEAR(F.cdf(1.0), F0.cdf(1.0) + 0.1 * v(1.0), 1e-15);
}

TEST(Sampling, MatchesCdf) {
  Rng rng(7);
  const auto F = make_normal(0, 1);
  auto xs = F.sample(rng, 20000);
  std::sort(xs.begin(), xs.end());
  EXPECT_LT(ks_statistic(xs, F), 0.015);
}

TEST(SamplesCsv, HeaderAndComments) {
  const auto path = std::filesystem::temp_directory_path() / "qhrisk_samples_test.csv";
  {
    std::ofstream out(path);
    out << "value\n1\n# note\n2.5,extra\n\n-3e0\n";
  }
  const auto xs = read_samples_csv(path.string());
  EXPECT_EQ(xs, (std::vector<double>{1, 2.5, -3}));
  {
    std::ofstream out(path);
    out << "1\nabc\n";
  }
  EXPECT_THROW(read_samples_csv(path.string()), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(read_samples_csv("/nonexistent/qhrisk.csv"), std::runtime_error);
}
