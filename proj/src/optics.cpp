#include "bellsim/optics.hpp"

#include "bellsim/errors.hpp"

namespace bellsim {

double malus_transmission(Angle photon_polarization, const PolarizerSpec& analyzer) {
  return analyzer.transmission(relative_angle(photon_polarization, analyzer.axis));
}

std::vector<AnalyzedPhoton> route_to_pixels(std::span<const EmittedPhoton> photons,
                                            const ExperimentConfig& config, Rng& rng) {
  if (!config.d1_pixels.disjoint(config.d2_pixels)) {
    throw ConfigError("d1_pixels and d2_pixels overlap");
  }

  std::uniform_int_distribution<int> pixel_draw(0, kPixelCount - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<AnalyzedPhoton> out;
  out.reserve(photons.size() / 2 + 16);
  for (const EmittedPhoton& ph : photons) {
    const PixelId pixel = PixelId::from_index(pixel_draw(rng));
    const PolarizerSpec* analyzer = nullptr;
    if (config.d1_pixels.contains(pixel)) {
      analyzer = &config.analyzer_c;
    } else if (config.d2_pixels.contains(pixel)) {
      analyzer = &config.analyzer_d;
    } else {
      continue;
    }
    if (unit(rng) < malus_transmission(ph.polarization, *analyzer)) {
      out.push_back(AnalyzedPhoton{ph.emission_time, pixel, ph.origin});
    }
  }
  return out;
}

}  // namespace bellsim
