#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bellsim/types.hpp"

namespace bellsim {

/// Value with a one-sigma uncertainty.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;
};

/// Half-open delay range [begin, end) in clock ticks.
struct TickRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t width() const noexcept { return end > begin ? end - begin : 0; }
  bool overlaps(const TickRange& o) const noexcept { return begin < o.end && o.begin < end; }
};

/// Coincidence counts C(dt) binned by dt = t2 - t1 >= 0, t1 from D1 and t2
/// from D2, summed over runs.
struct DelayHistogram {
  std::uint64_t bin_width = 1;  // ticks
  std::vector<std::uint64_t> bins;
  std::uint64_t total_singles_d1 = 0;
  std::uint64_t total_singles_d2 = 0;
  double live_time = 0.0;  // s, summed over runs
  std::uint32_t n_runs = 0;
  double clock_period = 25e-9;

  std::uint64_t max_delay() const noexcept { return bin_width * bins.size(); }
  TickRange full_range() const noexcept { return {0, max_delay()}; }
  /// Sum of bins covering `range`; the range must fall on bin edges inside
  /// [0, max_delay), otherwise PreconditionError.
  std::uint64_t sum(TickRange range) const;
  std::uint64_t total() const;
};

/// Counts every pair (e1 in D1, e2 in D2) of the same run with
/// 0 <= t2 - t1 < max_delay into bin (t2 - t1) / bin_width, by a two-index
/// sweep over each run's D1 and D2 tick lists (linear in events plus pairs).
/// Events on pixels outside both groups are ignored. live_time and n_runs of
/// the result are left for the caller.
///
/// Throws PreconditionError when events are not sorted by (run, tick) or
/// max_delay is not a positive multiple of bin_width; ConfigError when the
/// groups overlap or one is empty.
DelayHistogram build_histogram(std::span<const PhotonEvent> events, const PixelSet& d1, const PixelSet& d2,
                               std::uint64_t bin_width, std::uint64_t max_delay);

/// Bin-wise sum; commutative and associative on counts. Both histograms must
/// share bin width, range and clock period.
DelayHistogram merge(const DelayHistogram& a, const DelayHistogram& b);

/// Ratio of mean counts per bin in `peak` over `baseline`, with Poisson
/// uncertainty. Windows must be disjoint and on bin edges; an empty or
/// zero-count baseline raises PreconditionError.
Measured bunching_ratio(const DelayHistogram& h, TickRange peak, TickRange baseline);

enum class BackgroundMode {
  none,
  /// Accidental plateau: mean count per tick in a long-delay sideband,
  /// scaled to the window width.
  sideband,
  /// Pairs involving at least one dark count, predicted from the measured
  /// singles rates and the nominal dark rates of each group.
  dark_noise,
};

struct BackgroundOptions {
  BackgroundMode mode = BackgroundMode::none;
  TickRange sideband{80, 400};  // [2 us, 10 us) at 25 ns per tick
  double d1_dark_rate = 0.0;    // counts/s over all D1 pixels
  double d2_dark_rate = 0.0;
};

/// [2 us, 10 us) expressed in ticks of `clock_period`.
TickRange default_sideband(double clock_period);

struct CoincidenceResult {
  std::uint64_t raw = 0;
  double background = 0.0;
  double background_sigma = 0.0;
  double corrected = 0.0;  // raw - background
  std::uint64_t singles_d1 = 0;
  std::uint64_t singles_d2 = 0;
  double live_time = 0.0;
  /// sqrt(raw * (1 + (r1 + r2) w) + background_sigma^2): Poisson counting
  /// plus the extra spread from events shared by several pairs in a window
  /// of w seconds. Never below sqrt(raw).
  double uncertainty = 0.0;
};

/// Windowed coincidence count with background estimate. dark_noise needs a
/// positive live time; sideband needs a sideband disjoint from `window`.
CoincidenceResult coincidence_result(const DelayHistogram& h, TickRange window, const BackgroundOptions& background);

/// Normalized joint probability p12 = (C'(theta) / T_theta) / (C'(0) / T_0)
/// from background-corrected window sums. Both histograms must have the same
/// binning. A non-positive reference raises PreconditionError.
Measured coincidence_probability(const DelayHistogram& h_theta, const DelayHistogram& h_zero, TickRange window,
                                 const BackgroundOptions& background_theta,
                                 const BackgroundOptions& background_zero);

/// Same ratio from already computed results.
Measured coincidence_probability(const CoincidenceResult& at_theta, const CoincidenceResult& at_zero);

struct SinglesCount {
  std::uint64_t raw = 0;
  double background = 0.0;  // expected dark counts
  double corrected = 0.0;
  double sigma = 0.0;
  double live_time = 0.0;
};

/// Events on `pixels`, less dark_rate_per_pixel * |pixels| * live_time.
SinglesCount count_singles(std::span<const PhotonEvent> events, const PixelSet& pixels, double live_time,
                           double dark_rate_per_pixel = 0.0);

/// Rate at a setting over rate at the aligned reference setting.
Measured singles_ratio(const SinglesCount& at_setting, const SinglesCount& reference);

struct SinglesOptions {
  double live_time = 1.0;
  double reference_live_time = 1.0;
  double dark_rate_per_pixel = 0.0;
};

/// Normalized singles probability p1 (or p2).
Measured singles_probability(std::span<const PhotonEvent> events, const PixelSet& pixels,
                             std::span<const PhotonEvent> reference_events, const PixelSet& reference_pixels,
                             const SinglesOptions& options = {});

/// CSV with header `bin_low_ns,count`, one row per bin.
std::string histogram_csv(const DelayHistogram& h);

/// a / b with first-order propagation for independent a and b.
Measured ratio(Measured a, Measured b);

}  // namespace bellsim
