#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bellsim/bell_ch.hpp"
#include "bellsim/errors.hpp"
#include "oracles.hpp"

using namespace bellsim;

namespace {

double s_closed_form(double deg) {
  const double r = deg * M_PI / 180.0;
  auto c2 = [](double x) { return std::cos(x) * std::cos(x); };
  return (3 * c2(r) - c2(3 * r)) / (c2(2 * r) + c2(r));
}

Measured exact(double v) { return {v, 0.0}; }

}  // namespace

TEST(Ch, IdealCurveValues) {
  EXPECT_EQ(s_of_theta_ideal(Angle::from_degrees(60)), -0.5);
  EXPECT_NEAR(s_of_theta_ideal(Angle::from_degrees(20)), 1.6322, 5e-5);
  EXPECT_NEAR(s_of_theta_ideal(Angle::from_degrees(40)), 2.4482, 5e-5);
  for (double t = 0.5; t <= 60.0; t += 0.5) {
    EXPECT_NEAR(s_of_theta_ideal(Angle::from_degrees(t)), s_closed_form(t), 1e-12) << t;
  }
}

TEST(Ch, StatisticOnQuantumCorrelationsAtTextbookAngles) {
  // p12 = cos^2(x)/2, p1 = p2 = 1/2 at a=0, a'=45, b=22.5, b'=67.5:
  // S = (1/2)(3 cos^2 22.5 - cos^2 67.5) = 1.2071.
  auto p12 = [](double x) { return 0.5 * std::pow(std::cos(x * M_PI / 180.0), 2); };
  const ChInputs in{exact(p12(22.5)), exact(p12(67.5)), exact(p12(22.5)), exact(p12(22.5)), exact(0.5), exact(0.5)};
  const ChVerdict v = ch_statistic(in);
  EXPECT_NEAR(v.s_value, (1.0 + std::sqrt(2.0)) / 2.0, 1e-12);
  EXPECT_TRUE(v.violated);
  EXPECT_EQ(v.uncertainty, 0.0);
}

TEST(Ch, ErrorPropagation) {
  const ChInputs in{{0.5, 0.01}, {0.1, 0.01}, {0.5, 0.01}, {0.5, 0.01}, {0.5, 0.02}, {0.5, 0.02}};
  const ChVerdict v = ch_statistic(in);
  EXPECT_DOUBLE_EQ(v.s_value, 1.4);
  const double expect = std::sqrt(4 * 1e-4 + 1.96 * 8e-4);
  EXPECT_NEAR(v.uncertainty, expect, 1e-12);
  EXPECT_NEAR(v.sigma_above_bound, 0.4 / expect, 1e-9);
}

TEST(Ch, DomainChecks) {
  ChInputs in{exact(0.5), exact(0.5), exact(0.5), exact(0.5), exact(0.0), exact(0.0)};
  EXPECT_THROW(ch_statistic(in), DomainError);
  in.p1_a_prime = exact(1.2);
  EXPECT_THROW(ch_statistic(in), DomainError);
  in.p1_a_prime = {0.5, -0.1};
  EXPECT_THROW(ch_statistic(in), DomainError);
}

TEST(Ch, MeasuredAtIdealInputsGivesIdealCurve) {
  for (double t : {20.0, 40.0, 60.0}) {
    const Angle a = Angle::from_degrees(t);
    const SMeasurement m{exact(cos_squared(a)), exact(cos_squared(Angle::from_degrees(3 * t))),
                         exact(cos_squared(Angle::from_degrees(2 * t))), exact(cos_squared(a))};
    EXPECT_NEAR(s_of_theta_measured(m).s_value, s_of_theta_ideal(a), 1e-12);
  }
}

TEST(Ch, ThetaErrorEntersThreeTimes) {
  const SMeasurement m{{0.5, 0.01}, {0.0, 0.0}, {0.5, 0.0}, {0.5, 0.0}};
  const ChVerdict v = s_of_theta_measured(m);
  EXPECT_DOUBLE_EQ(v.s_value, 1.5);
  EXPECT_NEAR(v.uncertainty, 0.03, 1e-12);
}

TEST(Ch, CorrelatedPropagationAgreesOnValue) {
  const ChRates r{{80, 1}, {20, 1}, {100, 1.2}, {40, 0.5}, {100, 0.8}, {70, 0.6}, {100, 0.8}};
  const ChVerdict u = s_from_rates(r, Propagation::uncorrelated);
  const ChVerdict c = s_from_rates(r, Propagation::correlated);
  EXPECT_NEAR(u.s_value, c.s_value, 1e-12);
  EXPECT_NEAR(c.s_value, (2.4 - 0.2) / 1.1, 1e-12);
  EXPECT_GT(c.uncertainty, 0.0);
}

TEST(Ch, ViolationIntervalsMatchIndependentScan) {
  const auto intervals = ideal_violation_intervals(0.01);
  ASSERT_EQ(intervals.size(), 1u);
  // brute-force scan of the closed form with a fine step
  double lo = -1, hi = -1;
  for (double t = 1e-4; t <= 60.0; t += 1e-4) {
    if (s_closed_form(t) > 1.0) {
      if (lo < 0) lo = t;
      hi = t;
    }
  }
  EXPECT_LT(intervals[0].first, 1e-3);  // S > 1 right from 0
  EXPECT_NEAR(intervals[0].second, hi, 2e-4);
  EXPECT_GT(intervals[0].second, 40.0);
  EXPECT_LT(intervals[0].second, 60.0);
  EXPECT_LT(lo, 1e-3);
}

TEST(Ch, LocalModelsNeverViolate) {
  std::mt19937_64 rng(1234);
  int n_models = 0;
  for (int i = 0; i < 300; ++i) {
    const auto family = static_cast<oracle::LocalFamily>(i % 3);
    const oracle::LocalOutcomes o = oracle::run_local_model(rng, family, 5000);
    if (o.a_prime + o.b == 0) continue;
    const ChVerdict v = ch_statistic(oracle::ch_inputs(o));
    EXPECT_LE(v.s_value, 1.0 + 1e-12);
    ++n_models;
  }
  EXPECT_GT(n_models, 250);
}

TEST(Ch, VerdictCsv) {
  ChVerdict v{2.5, 0.1, true, 15.0};
  EXPECT_EQ(verdict_csv_header(), "theta_deg,S,sigma,violated\n");
  EXPECT_EQ(verdict_csv_row(40, v), "40,2.5,0.1,true\n");
}
