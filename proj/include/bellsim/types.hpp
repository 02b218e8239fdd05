#pragma once

#include <bitset>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bellsim/angle.hpp"

namespace bellsim {

/// Clock tick count (one tick = DetectorSpec::clock_period, 25 ns by default).
struct Tick {
  std::uint64_t count = 0;
  friend constexpr auto operator<=>(Tick, Tick) = default;
};

inline constexpr int kGridSize = 4;
inline constexpr int kPixelCount = kGridSize * kGridSize;

/// Anode of the 4x4 multianode photomultiplier.
class PixelId {
 public:
  constexpr PixelId() = default;
  /// Throws DomainError outside the grid.
  PixelId(int row, int col);
  /// Inverse of index(); throws DomainError for index >= 16.
  static PixelId from_index(int index);

  constexpr int row() const noexcept { return row_; }
  constexpr int col() const noexcept { return col_; }
  /// row * 4 + col, the on-disk pixel byte.
  constexpr int index() const noexcept { return row_ * kGridSize + col_; }

  friend constexpr auto operator<=>(PixelId, PixelId) = default;

 private:
  std::uint8_t row_ = 0;
  std::uint8_t col_ = 0;
};

/// Subset of the pixel grid forming one virtual detector.
class PixelSet {
 public:
  PixelSet() = default;
  PixelSet(std::initializer_list<int> indices);

  /// Parses a comma separated list of pixel indices, e.g. "0,4,8".
  static PixelSet parse(const std::string& text);
  /// Full rows 0..n-1 of column `col`.
  static PixelSet column(int col, int n_rows);

  void insert(PixelId p) { bits_.set(static_cast<std::size_t>(p.index())); }
  bool contains(PixelId p) const { return bits_.test(static_cast<std::size_t>(p.index())); }
  bool contains_index(int index) const { return bits_.test(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return bits_.count(); }
  bool empty() const noexcept { return bits_.none(); }
  bool disjoint(const PixelSet& other) const { return (bits_ & other.bits_).none(); }
  std::vector<PixelId> pixels() const;
  std::string to_string() const;

  friend bool operator==(const PixelSet&, const PixelSet&) = default;

 private:
  std::bitset<kPixelCount> bits_;
};

/// One detected photon (or dark count).
struct PhotonEvent {
  PixelId pixel;
  Tick time;
  std::uint32_t run = 0;
  friend constexpr bool operator==(const PhotonEvent&, const PhotonEvent&) = default;
};

/// Linear polarizer with finite peak transmission and extinction.
struct PolarizerSpec {
  Angle axis;
  double t_max = 1.0;
  double extinction_ratio = std::numeric_limits<double>::infinity();

  /// t_max * (cos^2 delta + sin^2 delta / extinction_ratio), delta being the
  /// angle between the incoming polarization and the transmission axis.
  double transmission(Angle delta) const;

  friend bool operator==(const PolarizerSpec&, const PolarizerSpec&) = default;
};

enum class SourceMode { coherent, chaotic };

struct SourceSpec {
  double rate = 1000.0;  // photons/s leaving the source attenuator
  SourceMode mode = SourceMode::coherent;
  double coherence_time = 200e-9;  // s, chaotic mode only
  bool enabled = true;

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct DetectorSpec {
  double quantum_efficiency = 0.15;
  double dark_rate_per_pixel = 1.0;  // counts/s
  double clock_period = 25e-9;
  double coincidence_window = 100e-9;

  /// Coincidence window rounded to whole clock ticks.
  std::uint64_t window_ticks() const;

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

/// Acquisition timing. Each period of cycle_length + transfer_dead_time
/// seconds is live for the first cycle_length seconds.
struct DaqSpec {
  double cycle_length = 10.0;
  double transfer_dead_time = 0.010;
  double run_duration = 100.0;
  std::uint32_t n_runs = 10;

  double duty_cycle() const { return cycle_length / (cycle_length + transfer_dead_time); }
  /// True when `t` (seconds since run start) falls inside a transfer window.
  bool in_transfer_window(double t) const;
  /// Live seconds within one run.
  double live_time_per_run() const;

  friend bool operator==(const DaqSpec&, const DaqSpec&) = default;
};

struct ExperimentConfig {
  SourceSpec source_a;
  SourceSpec source_b;
  PolarizerSpec prep_a;
  PolarizerSpec prep_b;
  PolarizerSpec analyzer_c;
  PolarizerSpec analyzer_d;
  DetectorSpec detector;
  DaqSpec daq;
  PixelSet d1_pixels = PixelSet{0, 4, 8};
  PixelSet d2_pixels = PixelSet{2, 6, 10};
  std::uint64_t rng_seed = 0;

  /// Checks every field invariant; throws ConfigError.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// The bench described in the experiment: two 10^3/s sources, 80% / 10^4
/// polarizers with a = b = c = x, QE 0.15, 25 ns clock, 10 s DAQ cycles.
ExperimentConfig default_config();

/// Same bench with ideal polarizers (t_max = 1, infinite extinction) and no
/// dark counts.
ExperimentConfig ideal_config();

}  // namespace bellsim
