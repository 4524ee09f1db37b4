#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qhrisk/distortion.hpp"
#include "qhrisk/errors.hpp"

using namespace qhrisk;

namespace {

// Closed forms written out independently of the library.
double expectile_g(double al, double t) { return al * t / (1 - al + t * (2 * al - 1)); }
double osm_g(double a, double p, double t) { return t + a * (1 - t) * std::pow(t, 1 / p); }

double forward_diff(const Distortion& g, double t, double h = 1e-7) {
  return (g(t + h) - g(t)) / h;
}

}  // namespace

TEST(Distortion, AvatrEval) {
  EXPECT_DOUBLE_EQ(Distortion::avatr(0.2)(0.1), 0.5);
  EXPECT_DOUBLE_EQ(Distortion::avatr(0.2)(0.5), 1.0);
  EXPECT_DOUBLE_EQ(Distortion::avatr(1.0)(0.3), 0.3);
}

TEST(Distortion, OneSidedMomentBoundary) {
  const auto g = Distortion::one_sided_moment(0.5, 2);
  EXPECT_DOUBLE_EQ(g(1.0), 1.0);
  EXPECT_DOUBLE_EQ(g(0.0), 0.0);
  EXPECT_NEAR(g(0.25), 0.4375, 1e-15);
}

TEST(Distortion, ExpectileEval) {
  EXPECT_NEAR(Distortion::expectile(0.75)(0.5), 0.75, 1e-15);
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    EXPECT_NEAR(Distortion::expectile(0.9)(t), expectile_g(0.9, t), 1e-15);
  }
}

TEST(Distortion, ClosedFormsMatchOnGrid) {
  for (double t = 0.01; t < 1.0; t += 0.01) {
    EXPECT_NEAR(Distortion::one_sided_moment(0.3, 3)(t), osm_g(0.3, 3, t), 1e-14);
    EXPECT_NEAR(Distortion::proportional_hazard(0.4)(t), std::pow(t, 0.4), 1e-14);
    EXPECT_DOUBLE_EQ(Distortion::identity()(t), t);
  }
}

TEST(Distortion, AvatrRightDerivative) {
  const auto g = Distortion::avatr(0.2);
  EXPECT_DOUBLE_EQ(g.rderiv(0.1), 5.0);
  EXPECT_DOUBLE_EQ(g.rderiv(0.3), 0.0);
  // right derivative at the kink is the flat side
  EXPECT_DOUBLE_EQ(g.rderiv(0.2), 0.0);
}

TEST(Distortion, ExpectileDerivativeAtZero) {
  const auto g = Distortion::expectile(0.75);
  EXPECT_NEAR(g.rderiv(0.0), 3.0, 1e-14);
  EXPECT_NEAR(forward_diff(g, 0.0), 3.0, 1e-5);
}

TEST(Distortion, RightDerivativeMatchesForwardDifference) {
  const std::vector<Distortion> gs{
      Distortion::one_sided_moment(0.5, 2), Distortion::expectile(0.6),
      Distortion::proportional_hazard(0.7), Distortion::avatr(0.35)};
  for (const auto& g : gs) {
    for (double t : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      EXPECT_NEAR(g.rderiv(t), forward_diff(g, t, 1e-8), 1e-5) << g.name() << " t=" << t;
    }
  }
}

TEST(Distortion, RightDerivativeUndefinedAtOne) {
  EXPECT_THROW(Distortion::identity().rderiv(1.0), DomainError);
  EXPECT_NO_THROW(Distortion::identity().rderiv_clamped(1.0));
}

TEST(Distortion, PowerFamiliesBlowUpAtZero) {
  EXPECT_TRUE(std::isinf(Distortion::proportional_hazard(0.5).rderiv(0.0)));
  EXPECT_TRUE(std::isinf(Distortion::one_sided_moment(0.5, 2).rderiv(0.0)));
  EXPECT_DOUBLE_EQ(Distortion::one_sided_moment(0.5, 1).rderiv(0.0), 1.5);
}

TEST(Distortion, ParameterErrorsNameTheParameter) {
  try {
    Distortion::avatr(0.0);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  EXPECT_THROW(Distortion::avatr(1.5), DomainError);
  EXPECT_THROW(Distortion::one_sided_moment(0.0, 2), DomainError);
  EXPECT_THROW(Distortion::one_sided_moment(0.5, 0.5), DomainError);
  EXPECT_THROW(Distortion::expectile(0.4), DomainError);
  EXPECT_THROW(Distortion::expectile(1.0), DomainError);
  EXPECT_THROW(Distortion::proportional_hazard(1.2), DomainError);
  EXPECT_THROW(Distortion::identity()(1.5), DomainError);
}

TEST(Distortion, MakeBuiltin) {
  const std::vector<double> p{0.5, 2};
  EXPECT_EQ(Distortion::make_builtin(DistortionKind::one_sided_moment, p),
            Distortion::one_sided_moment(0.5, 2));
  const std::vector<double> wrong{0.5};
  EXPECT_THROW(Distortion::make_builtin(DistortionKind::one_sided_moment, wrong), DomainError);
}

TEST(Distortion, Tabulated) {
  const auto g = Distortion::tabulated({0, 0.2, 1}, {0, 0.6, 1});
  EXPECT_NEAR(g(0.1), 0.3, 1e-15);
  EXPECT_NEAR(g(0.6), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(g.rderiv(0.2), 0.5);
  ASSERT_EQ(g.kinks().size(), 1u);
  EXPECT_DOUBLE_EQ(g.kinks()[0], 0.2);
  // convex breakpoints
  EXPECT_THROW(Distortion::tabulated({0, 0.5, 1}, {0, 0.2, 1}), DomainError);
  EXPECT_THROW(Distortion::tabulated({0, 0.5, 1}, {0, 0.7, 0.6}), DomainError);
  EXPECT_THROW(Distortion::tabulated({0.1, 1}, {0, 1}), DomainError);
}

TEST(Distortion, Codistort) {
  const auto g = Distortion::proportional_hazard(0.5);
  for (double s : {1e-12, 1e-6, 0.3}) {
    EXPECT_NEAR(g.codistort(s), 1 - std::sqrt(1 - s), 1e-15 + 1e-9 * s);
  }
}

TEST(Distortion, SmallTExponentAndActiveUpper) {
  EXPECT_DOUBLE_EQ(Distortion::proportional_hazard(0.3).small_t_exponent(), 0.3);
  EXPECT_DOUBLE_EQ(Distortion::one_sided_moment(0.5, 4).small_t_exponent(), 0.25);
  EXPECT_DOUBLE_EQ(Distortion::expectile(0.8).small_t_exponent(), 1.0);
  EXPECT_DOUBLE_EQ(Distortion::avatr(0.1).active_upper(), 0.1);
  EXPECT_DOUBLE_EQ(Distortion::identity().active_upper(), 1.0);
}

TEST(DistortionBound, SingletonFamily) {
  const auto g = Distortion::avatr(0.3);
  const std::vector<Distortion> fam{g};
  const auto grid = unit_grid(99);
  const auto rep = check_distortion_bound(fam, g, 0.5, grid);
  EXPECT_LE(rep.max_derivative_violation, 1e-12);
  EXPECT_TRUE(rep.bound_holds());
}

TEST(DistortionBound, IdentityEnvelopeExact) {
  const std::vector<Distortion> fam{Distortion::identity()};
  const auto rep = check_distortion_bound(fam, Distortion::identity(), 0.5, unit_grid(50));
  EXPECT_EQ(rep.max_sup_gap, 0.0);
  EXPECT_LE(rep.max_derivative_violation, 1e-12);
}

TEST(DistortionBound, TwoAvatrMembersAgainstBruteForce) {
  const std::vector<Distortion> fam{Distortion::avatr(0.1), Distortion::avatr(0.5)};
  const auto g_rho = Distortion::avatr(0.1);
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  const auto rep = check_distortion_bound(fam, g_rho, 0.9, grid);

  double worst = -1e300;
  for (double t : grid) {
    const double d1 = t < 0.1 ? 10.0 : 0.0;
    const double d2 = t < 0.5 ? 2.0 : 0.0;
    const double s = 0.9 * t;
    const double bound = std::min(s / 0.1, 1.0) / s;
    worst = std::max(worst, std::max(d1, d2) - bound);
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_NEAR(rep.max_derivative_violation, std::max(worst, 0.0), 1e-12);
  EXPECT_TRUE(rep.bound_holds());
}

TEST(DistortionBound, Errors) {
  const std::vector<Distortion> empty;
  EXPECT_THROW(check_distortion_bound(empty, Distortion::identity(), 0.5, unit_grid(3)),
               DomainError);
  const std::vector<Distortion> fam{Distortion::identity()};
  EXPECT_THROW(check_distortion_bound(fam, Distortion::identity(), 1.0, unit_grid(3)),
               DomainError);
}
