#include "bellsim/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bellsim/errors.hpp"

namespace bellsim {
namespace {

void check_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

// Keeps the stream strictly increasing when an exponential draw is too small
// to move t at its current magnitude.
double advance(double last, double candidate) {
  return candidate > last ? candidate : std::nextafter(last, std::numeric_limits<double>::infinity());
}

}  // namespace

std::vector<double> generate_coherent_stream(double rate, double duration, Rng& rng) {
  check_positive(rate, "rate");
  check_positive(duration, "duration");

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(rate * duration * 1.01 + 16));
  std::exponential_distribution<double> gap(rate);
  double t = 0.0;
  bool first = true;
  for (;;) {
    const double next = first ? gap(rng) : advance(t, t + gap(rng));
    if (next >= duration) break;
    t = next;
    first = false;
    times.push_back(t);
  }
  return times;
}

std::vector<double> generate_chaotic_stream(double rate, double coherence_time, double duration,
                                            Rng& rng) {
  check_positive(rate, "rate");
  check_positive(coherence_time, "coherence_time");
  check_positive(duration, "duration");

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(rate * duration * 1.05 + 16));
  std::exponential_distribution<double> intensity(1.0 / rate);
  std::exponential_distribution<double> unit_gap(1.0);

  // Arrivals inside one interval follow a Poisson process of the interval's
  // level; by memorylessness the first arrival past the interval end can be
  // discarded and drawn afresh from the next interval's start.
  double interval_start = 0.0;
  std::uint64_t k = 0;
  double last = -1.0;
  while (interval_start < duration) {
    const double interval_end = std::min(static_cast<double>(k + 1) * coherence_time, duration);
    const double level = intensity(rng);
    double t = interval_start;
    if (level > 0.0) {
      for (;;) {
        t += unit_gap(rng) / level;
        if (t >= interval_end) break;
        last = advance(last, t);
        t = last;
        times.push_back(t);
      }
    }
    ++k;
    interval_start = interval_end;
  }
  return times;
}

std::vector<double> generate_stream(const SourceSpec& spec, double duration, Rng& rng) {
  if (!spec.enabled) {
    return {};
  }
  if (spec.mode == SourceMode::chaotic) {
    return generate_chaotic_stream(spec.rate, spec.coherence_time, duration, rng);
  }
  return generate_coherent_stream(spec.rate, duration, rng);
}

std::vector<EmittedPhoton> prepare_polarization(std::span<const double> emission_times,
                                                const PolarizerSpec& prep, Origin origin, Rng& rng) {
  std::bernoulli_distribution survives(0.5 * prep.t_max);
  std::vector<EmittedPhoton> out;
  out.reserve(emission_times.size() / 2 + 16);
  for (double t : emission_times) {
    if (survives(rng)) {
      out.push_back(EmittedPhoton{t, prep.axis, origin});
    }
  }
  return out;
}

std::vector<EmittedPhoton> merge_streams(std::span<const EmittedPhoton> first,
                                         std::span<const EmittedPhoton> second) {
  std::vector<EmittedPhoton> out;
  out.reserve(first.size() + second.size());
  std::merge(first.begin(), first.end(), second.begin(), second.end(), std::back_inserter(out),
             [](const EmittedPhoton& x, const EmittedPhoton& y) { return x.emission_time < y.emission_time; });
  return out;
}

}  // namespace bellsim
