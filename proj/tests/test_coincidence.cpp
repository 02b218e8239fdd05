#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bellsim/coincidence.hpp"
#include "bellsim/errors.hpp"
#include "oracles.hpp"

using namespace bellsim;

namespace {

const PixelSet kD1{0, 4, 8};
const PixelSet kD2{2, 6, 10};

std::vector<PhotonEvent> poisson_events(std::mt19937_64& rng, double r1, double r2, double T, double clock,
                                        std::uint32_t run = 0) {
  std::vector<PhotonEvent> ev;
  auto add = [&](double rate, int pixel) {
    std::exponential_distribution<double> gap(rate);
    for (double t = gap(rng); t < T; t += gap(rng)) {
      ev.push_back({PixelId::from_index(pixel), {static_cast<std::uint64_t>(t / clock)}, run});
    }
  };
  add(r1, 0);
  add(r2, 2);
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return ev;
}

}  // namespace

TEST(Histogram, MatchesAllPairsOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ev = oracle::random_events(rng, 2000, 5000, 3);
    const std::uint64_t bw = 1 + rng() % 5;
    const std::uint64_t max = bw * (1 + rng() % 200);
    const DelayHistogram h = build_histogram(ev, kD1, kD2, bw, max);
    ASSERT_EQ(h.bins, oracle::all_pairs_histogram(ev, kD1, kD2, bw, max)) << trial;
  }
}

TEST(Histogram, CoarseBinsAreSumsOfFineBins) {
  std::mt19937_64 rng(7);
  const auto ev = oracle::random_events(rng, 5000, 20000, 2);
  const DelayHistogram fine = build_histogram(ev, kD1, kD2, 1, 800);
  const DelayHistogram coarse = build_histogram(ev, kD1, kD2, 8, 800);
  for (std::size_t i = 0; i < coarse.bins.size(); ++i) {
    EXPECT_EQ(coarse.bins[i], fine.sum({i * 8, (i + 1) * 8}));
  }
  EXPECT_EQ(coarse.total(), fine.total());
}

TEST(Histogram, PairsNeverCrossRuns) {
  const std::vector<PhotonEvent> ev{{PixelId::from_index(0), {100}, 0}, {PixelId::from_index(2), {101}, 1}};
  EXPECT_EQ(build_histogram(ev, kD1, kD2, 1, 10).total(), 0u);
}

TEST(Histogram, MergeIsOrderIndependent) {
  std::mt19937_64 rng(8);
  DelayHistogram a = build_histogram(oracle::random_events(rng, 1000, 3000, 1), kD1, kD2, 2, 100);
  DelayHistogram b = build_histogram(oracle::random_events(rng, 1000, 3000, 1), kD1, kD2, 2, 100);
  a.live_time = 1.5;
  b.live_time = 2.0;
  const DelayHistogram ab = merge(a, b), ba = merge(b, a);
  EXPECT_EQ(ab.bins, ba.bins);
  EXPECT_EQ(ab.total_singles_d1, ba.total_singles_d1);
  EXPECT_DOUBLE_EQ(ab.live_time, 3.5);
  const DelayHistogram c = build_histogram({}, kD1, kD2, 4, 100);
  EXPECT_THROW(merge(a, c), PreconditionError);
}

TEST(Histogram, Preconditions) {
  const std::vector<PhotonEvent> unsorted{{PixelId::from_index(0), {10}, 0}, {PixelId::from_index(2), {5}, 0}};
  EXPECT_THROW(build_histogram(unsorted, kD1, kD2, 1, 10), PreconditionError);
  EXPECT_THROW(build_histogram({}, kD1, PixelSet{8}, 1, 10), ConfigError);
  EXPECT_THROW(build_histogram({}, kD1, PixelSet{}, 1, 10), ConfigError);
  EXPECT_THROW(build_histogram({}, kD1, kD2, 3, 10), PreconditionError);
  const DelayHistogram h = build_histogram({}, kD1, kD2, 2, 10);
  EXPECT_THROW(h.sum({1, 4}), PreconditionError);
  EXPECT_THROW(h.sum({0, 12}), PreconditionError);
}

TEST(Coincidence, AccidentalRateMatchesR1R2WT) {
  // Independent Poisson singles: expected pairs in [0, W) = r1 r2 W T.
  std::mt19937_64 rng(99);
  const double clock = 25e-9, r1 = 2e4, r2 = 3e4, T = 20.0;
  const auto ev = poisson_events(rng, r1, r2, T, clock);
  DelayHistogram h = build_histogram(ev, PixelSet{0}, PixelSet{2}, 4, 400);
  h.live_time = T;
  h.n_runs = 1;
  const CoincidenceResult res = coincidence_result(h, {0, 4}, BackgroundOptions{});
  const double expect = r1 * r2 * 100e-9 * T;
  EXPECT_NEAR(static_cast<double>(res.raw), expect, 5 * std::sqrt(expect));
  EXPECT_GE(res.uncertainty * res.uncertainty, static_cast<double>(res.raw));
}

TEST(Coincidence, SidebandEstimatesAccidentals) {
  std::mt19937_64 rng(5);
  const double clock = 25e-9, r1 = 2e4, r2 = 2e4, T = 20.0;
  DelayHistogram h = build_histogram(poisson_events(rng, r1, r2, T, clock), PixelSet{0}, PixelSet{2}, 1, 400);
  h.live_time = T;
  h.n_runs = 1;
  BackgroundOptions bg;
  bg.mode = BackgroundMode::sideband;
  const CoincidenceResult res = coincidence_result(h, {0, 4}, bg);
  EXPECT_NEAR(res.background, r1 * r2 * 100e-9 * T, 5 * res.background_sigma + 1.0);
  EXPECT_NEAR(res.corrected, 0.0, 5 * res.uncertainty);
  bg.sideband = {2, 10};
  EXPECT_THROW(coincidence_result(h, {0, 4}, bg), PreconditionError);
}

TEST(Coincidence, PairCountVarianceIncludesOverlap) {
  // Across independent replicas the full-range pair count fluctuates by
  // N (1 + (r1 + r2) L), well above Poisson.
  const double clock = 1e-6, r1 = 50, r2 = 50, T = 10.0;
  const std::uint64_t range = 100000;  // 0.1 s
  std::vector<double> counts;
  std::mt19937_64 rng(31);
  for (int i = 0; i < 400; ++i) {
    const auto ev = poisson_events(rng, r1, r2, T, clock);
    counts.push_back(static_cast<double>(build_histogram(ev, PixelSet{0}, PixelSet{2}, 1000, range).total()));
  }
  double mean = 0, var = 0;
  for (double c : counts) mean += c;
  mean /= counts.size();
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= counts.size() - 1;
  const double predicted = mean * (1.0 + (r1 + r2) * range * clock);
  EXPECT_NEAR(var / predicted, 1.0, 0.25);
}

TEST(Coincidence, DarkNoiseBackground) {
  DelayHistogram h;
  h.bin_width = 40;
  h.bins.assign(100, 0);
  h.bins[0] = 1000;
  h.total_singles_d1 = 20000;
  h.total_singles_d2 = 30000;
  h.live_time = 1000.0;
  h.n_runs = 10;
  BackgroundOptions bg;
  bg.mode = BackgroundMode::dark_noise;
  bg.d1_dark_rate = 3.0;
  bg.d2_dark_rate = 3.0;
  const CoincidenceResult r = coincidence_result(h, h.full_range(), bg);
  const double W = 4000 * 25e-9;
  const double exposure = 10 * W * (100.0 - W / 2);
  EXPECT_NEAR(r.background, exposure * (3.0 * 30.0 + 3.0 * 20.0 - 9.0), 1e-9);
  EXPECT_DOUBLE_EQ(r.corrected, 1000.0 - r.background);
}

TEST(Coincidence, BunchingRatio) {
  DelayHistogram h;
  h.bin_width = 1;
  h.bins.assign(400, 100);
  h.bins[0] = 200;
  const Measured b = bunching_ratio(h, {0, 1}, {80, 400});
  EXPECT_DOUBLE_EQ(b.value, 2.0);
  EXPECT_THROW(bunching_ratio(h, {0, 1}, {0, 10}), PreconditionError);
  EXPECT_THROW(bunching_ratio(h, {0, 1}, {80, 80}), PreconditionError);
  h.bins.assign(400, 0);
  EXPECT_THROW(bunching_ratio(h, {0, 1}, {80, 400}), PreconditionError);
}

TEST(Coincidence, ProbabilityIsRateRatio) {
  CoincidenceResult a, z;
  a.corrected = 250;
  a.uncertainty = std::sqrt(250.0);
  a.live_time = 100;
  z.corrected = 2000;
  z.uncertainty = std::sqrt(2000.0);
  z.live_time = 200;
  const Measured p = coincidence_probability(a, z);
  EXPECT_DOUBLE_EQ(p.value, 0.25);
  EXPECT_NEAR(p.sigma, 0.25 * std::sqrt(1.0 / 250 + 1.0 / 2000), 1e-12);
  z.corrected = 0;
  EXPECT_THROW(coincidence_probability(a, z), PreconditionError);
}

TEST(Singles, DarkCorrectedRatio) {
  std::vector<PhotonEvent> ev;
  for (int i = 0; i < 1300; ++i) ev.push_back({PixelId::from_index(i % 2 == 0 ? 0 : 5), {std::uint64_t(i)}, 0});
  const SinglesCount s = count_singles(ev, kD1, 100.0, 1.0);
  EXPECT_EQ(s.raw, 650u);
  EXPECT_DOUBLE_EQ(s.corrected, 650.0 - 300.0);
  SinglesOptions o;
  o.live_time = o.reference_live_time = 100.0;
  EXPECT_DOUBLE_EQ(singles_probability(ev, kD1, ev, kD1, o).value, 1.0);
}

TEST(Csv, HistogramSchema) {
  DelayHistogram h;
  h.bin_width = 2;
  h.bins = {3, 0, 7};
  EXPECT_EQ(histogram_csv(h), "bin_low_ns,count\n0,3\n50,0\n100,7\n");
}
