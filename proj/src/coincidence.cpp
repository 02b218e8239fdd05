#include "bellsim/coincidence.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bellsim/errors.hpp"

namespace bellsim {

std::uint64_t DelayHistogram::sum(TickRange range) const {
  if (range.begin % bin_width != 0 || range.end % bin_width != 0 || range.end > max_delay() ||
      range.begin > range.end) {
    throw PreconditionError(fmt::format("delay range [{}, {}) ticks does not fall on bin edges of [0, {})",
                                        range.begin, range.end, max_delay()));
  }
  const auto first = bins.begin() + static_cast<std::ptrdiff_t>(range.begin / bin_width);
  const auto last = bins.begin() + static_cast<std::ptrdiff_t>(range.end / bin_width);
  return std::accumulate(first, last, std::uint64_t{0});
}

std::uint64_t DelayHistogram::total() const { return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0}); }

DelayHistogram build_histogram(std::span<const PhotonEvent> events, const PixelSet& d1, const PixelSet& d2,
                               std::uint64_t bin_width, std::uint64_t max_delay) {
  if (d1.empty() || d2.empty()) {
    throw ConfigError("detector pixel groups must be non-empty");
  }
  if (!d1.disjoint(d2)) {
    throw ConfigError("detector pixel groups overlap");
  }
  if (bin_width == 0 || max_delay == 0 || max_delay % bin_width != 0) {
    throw PreconditionError("max_delay must be a positive multiple of bin_width");
  }

  DelayHistogram h;
  h.bin_width = bin_width;
  h.bins.assign(max_delay / bin_width, 0);

  std::vector<std::uint64_t> t1;
  std::vector<std::uint64_t> t2;
  std::size_t i = 0;
  while (i < events.size()) {
    const std::uint32_t run = events[i].run;
    t1.clear();
    t2.clear();
    std::size_t j = i;
    for (; j < events.size() && events[j].run == run; ++j) {
      const PhotonEvent& e = events[j];
      if (j > i && e.time < events[j - 1].time) {
        throw PreconditionError(fmt::format("event {} is out of time order within run {}", j, run));
      }
      if (d1.contains(e.pixel)) {
        t1.push_back(e.time.count);
      } else if (d2.contains(e.pixel)) {
        t2.push_back(e.time.count);
      }
    }
    if (j < events.size() && events[j].run < run) {
      throw PreconditionError(fmt::format("event {} is out of run order", j));
    }
    h.total_singles_d1 += t1.size();
    h.total_singles_d2 += t2.size();

    // lo: first D2 event not earlier than the current D1 event
    std::size_t lo = 0;
    for (const std::uint64_t start : t1) {
      while (lo < t2.size() && t2[lo] < start) ++lo;
      for (std::size_t k = lo; k < t2.size(); ++k) {
        const std::uint64_t delay = t2[k] - start;
        if (delay >= max_delay) break;
        ++h.bins[delay / bin_width];
      }
    }
    i = j;
  }
  return h;
}

DelayHistogram merge(const DelayHistogram& a, const DelayHistogram& b) {
  if (a.bin_width != b.bin_width || a.bins.size() != b.bins.size() || a.clock_period != b.clock_period) {
    throw PreconditionError("cannot merge histograms with different binning");
  }
  DelayHistogram out = a;
  for (std::size_t i = 0; i < out.bins.size(); ++i) {
    out.bins[i] += b.bins[i];
  }
  out.total_singles_d1 += b.total_singles_d1;
  out.total_singles_d2 += b.total_singles_d2;
  out.live_time += b.live_time;
  out.n_runs += b.n_runs;
  return out;
}

Measured ratio(Measured a, Measured b) {
  if (b.value == 0.0) {
    throw PreconditionError("ratio with zero denominator");
  }
  const double r = a.value / b.value;
  const double var = (a.sigma * a.sigma) / (b.value * b.value) +
                     (a.value * a.value) * (b.sigma * b.sigma) / std::pow(b.value, 4);
  return {r, std::sqrt(var)};
}

Measured bunching_ratio(const DelayHistogram& h, TickRange peak, TickRange baseline) {
  if (baseline.width() == 0) {
    throw PreconditionError("bunching baseline window is empty");
  }
  if (peak.width() == 0) {
    throw PreconditionError("bunching peak window is empty");
  }
  if (peak.overlaps(baseline)) {
    throw PreconditionError("bunching peak and baseline windows overlap");
  }
  const std::uint64_t peak_sum = h.sum(peak);
  const std::uint64_t base_sum = h.sum(baseline);
  if (base_sum == 0) {
    throw PreconditionError("bunching baseline holds no counts");
  }
  const double peak_bins = static_cast<double>(peak.width() / h.bin_width);
  const double base_bins = static_cast<double>(baseline.width() / h.bin_width);
  const Measured peak_mean{static_cast<double>(peak_sum) / peak_bins, std::sqrt(static_cast<double>(peak_sum)) / peak_bins};
  const Measured base_mean{static_cast<double>(base_sum) / base_bins, std::sqrt(static_cast<double>(base_sum)) / base_bins};
  return ratio(peak_mean, base_mean);
}

TickRange default_sideband(double clock_period) {
  return {static_cast<std::uint64_t>(std::llround(2e-6 / clock_period)),
          static_cast<std::uint64_t>(std::llround(10e-6 / clock_period))};
}

CoincidenceResult coincidence_result(const DelayHistogram& h, TickRange window, const BackgroundOptions& background) {
  CoincidenceResult r;
  r.raw = h.sum(window);
  r.singles_d1 = h.total_singles_d1;
  r.singles_d2 = h.total_singles_d2;
  r.live_time = h.live_time;

  const double width_s = static_cast<double>(window.width()) * h.clock_period;
  const double rate_sum =
      h.live_time > 0.0 ? static_cast<double>(h.total_singles_d1 + h.total_singles_d2) / h.live_time : 0.0;

  switch (background.mode) {
    case BackgroundMode::none:
      break;
    case BackgroundMode::sideband: {
      if (background.sideband.overlaps(window)) {
        throw PreconditionError("background sideband overlaps the coincidence window");
      }
      if (background.sideband.width() == 0) {
        throw PreconditionError("background sideband is empty");
      }
      const double side = static_cast<double>(h.sum(background.sideband));
      const double scale = static_cast<double>(window.width()) / static_cast<double>(background.sideband.width());
      const double side_s = static_cast<double>(background.sideband.width()) * h.clock_period;
      r.background = side * scale;
      r.background_sigma = scale * std::sqrt(side * (1.0 + rate_sum * side_s));
      break;
    }
    case BackgroundMode::dark_noise: {
      if (!(h.live_time > 0.0) || h.n_runs == 0) {
        throw PreconditionError("dark-noise background needs the histogram live time and run count");
      }
      const double r1 = static_cast<double>(h.total_singles_d1) / h.live_time;
      const double r2 = static_cast<double>(h.total_singles_d2) / h.live_time;
      const double k1 = background.d1_dark_rate;
      const double k2 = background.d2_dark_rate;
      // Flat pair density r1 r2 (T - dt) integrated over the window, per run.
      const double run_time = h.live_time / h.n_runs;
      const double mid = 0.5 * static_cast<double>(window.begin + window.end) * h.clock_period;
      const double exposure = h.n_runs * width_s * std::max(run_time - mid, 0.0);
      r.background = exposure * (k1 * r2 + k2 * r1 - k1 * k2);
      const double var_r1 = static_cast<double>(h.total_singles_d1) / (h.live_time * h.live_time);
      const double var_r2 = static_cast<double>(h.total_singles_d2) / (h.live_time * h.live_time);
      r.background_sigma = exposure * std::sqrt(k1 * k1 * var_r2 + k2 * k2 * var_r1);
      break;
    }
  }

  r.corrected = static_cast<double>(r.raw) - r.background;
  const double raw = static_cast<double>(r.raw);
  r.uncertainty = std::sqrt(raw * (1.0 + rate_sum * width_s) + r.background_sigma * r.background_sigma);
  return r;
}

Measured coincidence_probability(const CoincidenceResult& at_theta, const CoincidenceResult& at_zero) {
  if (!(at_theta.live_time > 0.0) || !(at_zero.live_time > 0.0)) {
    throw PreconditionError("coincidence probability needs positive live times");
  }
  if (!(at_zero.corrected > 0.0)) {
    throw PreconditionError("reference coincidence count is not positive");
  }
  const Measured num{at_theta.corrected / at_theta.live_time, at_theta.uncertainty / at_theta.live_time};
  const Measured den{at_zero.corrected / at_zero.live_time, at_zero.uncertainty / at_zero.live_time};
  return ratio(num, den);
}

Measured coincidence_probability(const DelayHistogram& h_theta, const DelayHistogram& h_zero, TickRange window,
                                 const BackgroundOptions& background_theta,
                                 const BackgroundOptions& background_zero) {
  if (h_theta.bin_width != h_zero.bin_width || h_theta.bins.size() != h_zero.bins.size()) {
    throw PreconditionError("histograms must share bin width and delay range");
  }
  return coincidence_probability(coincidence_result(h_theta, window, background_theta),
                                 coincidence_result(h_zero, window, background_zero));
}

SinglesCount count_singles(std::span<const PhotonEvent> events, const PixelSet& pixels, double live_time,
                           double dark_rate_per_pixel) {
  SinglesCount s;
  for (const PhotonEvent& e : events) {
    if (pixels.contains(e.pixel)) ++s.raw;
  }
  s.live_time = live_time;
  s.background = dark_rate_per_pixel * static_cast<double>(pixels.size()) * live_time;
  s.corrected = static_cast<double>(s.raw) - s.background;
  s.sigma = std::sqrt(static_cast<double>(s.raw));
  return s;
}

Measured singles_ratio(const SinglesCount& at_setting, const SinglesCount& reference) {
  if (!(at_setting.live_time > 0.0) || !(reference.live_time > 0.0)) {
    throw PreconditionError("singles probability needs positive live times");
  }
  if (!(reference.corrected > 0.0)) {
    throw PreconditionError("reference singles rate is not positive");
  }
  return ratio({at_setting.corrected / at_setting.live_time, at_setting.sigma / at_setting.live_time},
               {reference.corrected / reference.live_time, reference.sigma / reference.live_time});
}

Measured singles_probability(std::span<const PhotonEvent> events, const PixelSet& pixels,
                             std::span<const PhotonEvent> reference_events, const PixelSet& reference_pixels,
                             const SinglesOptions& options) {
  return singles_ratio(count_singles(events, pixels, options.live_time, options.dark_rate_per_pixel),
                       count_singles(reference_events, reference_pixels, options.reference_live_time,
                                     options.dark_rate_per_pixel));
}

std::string histogram_csv(const DelayHistogram& h) {
  std::string out = "bin_low_ns,count\n";
  // clock period rounded to whole picoseconds so 25e-9 prints as 25
  const double tick_ns = std::round(h.clock_period * 1e12) / 1e3;
  for (std::size_t i = 0; i < h.bins.size(); ++i) {
    out += fmt::format("{},{}\n", static_cast<double>(i * h.bin_width) * tick_ns, h.bins[i]);
  }
  return out;
}

}  // namespace bellsim
