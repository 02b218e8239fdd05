#include "bellsim/detector.hpp"

#include <algorithm>
#include <cmath>

#include "bellsim/errors.hpp"

namespace bellsim {

Tick quantize(double t, double clock_period) {
  return Tick{static_cast<std::uint64_t>(std::floor(t / clock_period))};
}

Detection detect(std::span<const AnalyzedPhoton> photons, const DetectorSpec& detector,
                 const DaqSpec& daq, std::uint32_t run, Rng& rng) {
  Detection out;
  DetectionStats& stats = out.stats;
  stats.photons_in = photons.size();

  std::bernoulli_distribution detected(detector.quantum_efficiency);
  std::vector<PhotonEvent>& events = out.events;
  events.reserve(static_cast<std::size_t>(photons.size() * detector.quantum_efficiency * 1.1) + 64);

  auto record = [&](double t, PixelId pixel) {
    if (daq.in_transfer_window(t)) {
      ++stats.lost_to_transfer;
      return;
    }
    events.push_back(PhotonEvent{pixel, quantize(t, detector.clock_period), run});
  };

  for (const AnalyzedPhoton& ph : photons) {
    if (!(ph.arrival_time >= 0.0 && ph.arrival_time < daq.run_duration)) {
      throw PreconditionError("photon arrival time outside [0, run_duration)");
    }
    if (!detected(rng)) {
      ++stats.lost_to_efficiency;
      continue;
    }
    record(ph.arrival_time, ph.pixel);
  }

  if (detector.dark_rate_per_pixel > 0.0) {
    std::poisson_distribution<std::uint64_t> n_dark(detector.dark_rate_per_pixel * daq.run_duration);
    std::uniform_real_distribution<double> when(0.0, daq.run_duration);
    for (int i = 0; i < kPixelCount; ++i) {
      const PixelId pixel = PixelId::from_index(i);
      const std::uint64_t n = n_dark(rng);
      stats.dark_counts += n;
      for (std::uint64_t k = 0; k < n; ++k) {
        record(when(rng), pixel);
      }
    }
  }

  std::sort(events.begin(), events.end(), [](const PhotonEvent& x, const PhotonEvent& y) {
    return x.time != y.time ? x.time < y.time : x.pixel < y.pixel;
  });
  const auto last = std::unique(events.begin(), events.end());
  stats.piled_up = static_cast<std::uint64_t>(events.end() - last);
  events.erase(last, events.end());
  return out;
}

}  // namespace bellsim
