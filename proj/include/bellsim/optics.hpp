#pragma once

#include <span>
#include <vector>

#include "bellsim/rng.hpp"
#include "bellsim/source.hpp"
#include "bellsim/types.hpp"

namespace bellsim {

/// Photon that passed its analyzer and reached a detector pixel.
struct AnalyzedPhoton {
  double arrival_time = 0.0;
  PixelId pixel;
  Origin origin = Origin::source_a;
};

/// Malus' law with finite extinction: analyzer.transmission of the angle
/// between the photon polarization and the analyzer axis.
double malus_transmission(Angle photon_polarization, const PolarizerSpec& analyzer);

/// Both expanded beams illuminate the whole 4x4 grid uniformly. Each photon
/// lands on a uniformly drawn pixel; on a D1 pixel it must pass analyzer c,
/// on a D2 pixel analyzer d, anywhere else it is absorbed. Propagation delay
/// is common to both arms and taken as zero.
/// Throws ConfigError when the pixel groups overlap.
std::vector<AnalyzedPhoton> route_to_pixels(std::span<const EmittedPhoton> photons,
                                            const ExperimentConfig& config, Rng& rng);

}  // namespace bellsim
