#include <cmath>

#include <gtest/gtest.h>

#include "bellsim/angle.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/types.hpp"

using namespace bellsim;

TEST(Angle, ReducesIntoOneTurn) {
  EXPECT_DOUBLE_EQ(Angle::from_degrees(370.0).deg(), 10.0);
  EXPECT_DOUBLE_EQ(Angle::from_degrees(-30.0).deg(), 330.0);
  EXPECT_DOUBLE_EQ(Angle::from_degrees(720.0).deg(), 0.0);
  EXPECT_THROW(Angle::from_degrees(std::nan("")), DomainError);
  EXPECT_THROW(Angle::from_degrees(INFINITY), DomainError);
}

TEST(Angle, RelativeAngleIsShortestRotation) {
  EXPECT_DOUBLE_EQ(relative_angle(Angle::from_degrees(10), Angle::from_degrees(350)).deg(), 20.0);
  EXPECT_DOUBLE_EQ(relative_angle(Angle::from_degrees(0), Angle::from_degrees(180)).deg(), 180.0);
}

TEST(Angle, CosSquaredExactOnTableAngles) {
  EXPECT_EQ(cos_squared(Angle::from_degrees(0)), 1.0);
  EXPECT_EQ(cos_squared(Angle::from_degrees(90)), 0.0);
  EXPECT_EQ(cos_squared(Angle::from_degrees(270)), 0.0);
  EXPECT_EQ(cos_squared(Angle::from_degrees(60)), 0.25);
  EXPECT_EQ(cos_squared(Angle::from_degrees(120)), 0.25);
  EXPECT_EQ(cos_squared(Angle::from_degrees(45)), 0.5);
  for (double d = 0.0; d < 360.0; d += 7.3) {
    const double c = std::cos(d * M_PI / 180.0);
    EXPECT_NEAR(cos_squared(Angle::from_degrees(d)), c * c, 1e-15) << d;
  }
}

TEST(Angle, ChSettingsEqualSpacing) {
  const ChSettings s = ch_settings(Angle::from_degrees(20));
  EXPECT_DOUBLE_EQ(s.a.deg(), 0.0);
  EXPECT_DOUBLE_EQ(s.b.deg(), 20.0);
  EXPECT_DOUBLE_EQ(s.a_prime.deg(), 40.0);
  EXPECT_DOUBLE_EQ(s.b_prime.deg(), 60.0);
  EXPECT_NO_THROW(ch_settings(Angle::from_degrees(60)));
  EXPECT_THROW(ch_settings(Angle::from_degrees(0)), DomainError);
  EXPECT_THROW(ch_settings(Angle::from_degrees(61)), DomainError);
}

TEST(Pixels, IndexRoundTrip) {
  for (int i = 0; i < 16; ++i) EXPECT_EQ(PixelId::from_index(i).index(), i);
  EXPECT_EQ(PixelId(2, 3).index(), 11);
  EXPECT_THROW(PixelId(4, 0), DomainError);
  EXPECT_THROW(PixelId::from_index(16), DomainError);
}

TEST(Pixels, SetParseAndQueries) {
  const PixelSet s = PixelSet::parse("0,4,8");
  EXPECT_EQ(s, PixelSet({0, 4, 8}));
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.to_string(), "0,4,8");
  EXPECT_EQ(PixelSet::column(0, 3), s);
  EXPECT_TRUE(s.disjoint(PixelSet{2, 6, 10}));
  EXPECT_FALSE(s.disjoint(PixelSet{8}));
  EXPECT_THROW(PixelSet::parse("0,,4"), DomainError);
  EXPECT_THROW(PixelSet::parse("0,17"), DomainError);
}

TEST(Polarizer, TransmissionWithFiniteExtinction) {
  const PolarizerSpec p{Angle::from_degrees(0), 0.8, 1e4};
  EXPECT_DOUBLE_EQ(p.transmission(Angle::from_degrees(0)), 0.8);
  EXPECT_NEAR(p.transmission(Angle::from_degrees(90)), 0.8e-4, 1e-18);
  const PolarizerSpec ideal{};
  EXPECT_EQ(ideal.transmission(Angle::from_degrees(90)), 0.0);
}

TEST(Daq, DutyCycleAndTransferWindows) {
  const DaqSpec d{};
  EXPECT_NEAR(d.duty_cycle(), 10.0 / 10.01, 1e-15);
  EXPECT_FALSE(d.in_transfer_window(9.999));
  EXPECT_TRUE(d.in_transfer_window(10.005));
  EXPECT_FALSE(d.in_transfer_window(10.011));
  // 100 s run: dead windows after cycles 1..9, the tenth ends at 100.09 > 100
  EXPECT_NEAR(d.live_time_per_run(), 100.0 - 9 * 0.010, 1e-9);
}
