#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bellsim/angle.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/types.hpp"

namespace bellsim {

enum class Origin : std::uint8_t { source_a, source_b };

/// Photon that survived its preparation polarizer.
struct EmittedPhoton {
  double emission_time = 0.0;  // s since run start
  Angle polarization;
  Origin origin = Origin::source_a;
};

/// Homogeneous Poisson process on [0, duration): exponential inter-arrival
/// times with mean 1/rate. Output is strictly increasing.
/// Throws DomainError for non-positive rate or duration.
std::vector<double> generate_coherent_stream(double rate, double duration, Rng& rng);

/// Cox process for chaotic (thermal) light. The intensity is constant on
/// consecutive intervals [k tau, (k+1) tau) of length tau = coherence_time,
/// with each interval's level drawn i.i.d. exponential of mean `rate`.
/// Since E[I^2] = 2 E[I]^2 the intensity correlation is
///   g2(dt) = 1 + max(0, 1 - |dt| / tau),
/// 2 at zero delay and 1 beyond one coherence time. A coherence time longer
/// than the duration gives one intensity draw for the whole stream.
std::vector<double> generate_chaotic_stream(double rate, double coherence_time, double duration,
                                            Rng& rng);

/// Dispatches on spec.mode. A disabled source yields an empty stream.
std::vector<double> generate_stream(const SourceSpec& spec, double duration, Rng& rng);

/// Unpolarized photons through a linear polarizer: each one survives with
/// probability t_max / 2 and leaves polarized along the polarizer axis.
std::vector<EmittedPhoton> prepare_polarization(std::span<const double> emission_times,
                                                const PolarizerSpec& prep, Origin origin, Rng& rng);

/// Time-ordered union of two time-ordered streams. Ties keep `first` ahead.
std::vector<EmittedPhoton> merge_streams(std::span<const EmittedPhoton> first,
                                         std::span<const EmittedPhoton> second);

}  // namespace bellsim
