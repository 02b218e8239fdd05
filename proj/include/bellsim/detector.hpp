#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bellsim/optics.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/types.hpp"

namespace bellsim {

struct DetectionStats {
  std::uint64_t photons_in = 0;
  std::uint64_t lost_to_efficiency = 0;
  std::uint64_t dark_counts = 0;      // generated, before gating
  std::uint64_t lost_to_transfer = 0; // photons and dark counts inside DAQ transfer windows
  std::uint64_t piled_up = 0;         // merged into an earlier event on the same pixel and tick
};

struct Detection {
  std::vector<PhotonEvent> events;  // sorted by (time, pixel)
  DetectionStats stats;
};

/// floor(t / clock_period).
Tick quantize(double t, double clock_period);

/// Detector response for one run:
///  - each photon is kept with probability quantum_efficiency;
///  - every one of the 16 pixels adds Poisson dark counts uniformly over the
///    run at dark_rate_per_pixel;
///  - anything inside a DAQ transfer window is dropped;
///  - times are quantized to clock ticks and two hits on one pixel within one
///    tick give a single event.
/// Arrival times must lie in [0, daq.run_duration).
Detection detect(std::span<const AnalyzedPhoton> photons, const DetectorSpec& detector,
                 const DaqSpec& daq, std::uint32_t run, Rng& rng);

}  // namespace bellsim
