#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "bellsim/errors.hpp"
#include "bellsim/types.hpp"

namespace bellsim {

ConfigError::ConfigError(const std::string& what, std::size_t line)
    : Error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

const char* to_string(FormatErrorKind kind) noexcept {
  switch (kind) {
    case FormatErrorKind::bad_magic: return "bad magic";
    case FormatErrorKind::bad_version: return "unsupported version";
    case FormatErrorKind::bad_header: return "bad header";
    case FormatErrorKind::truncated: return "truncated";
    case FormatErrorKind::bad_record: return "bad record";
    case FormatErrorKind::order_violation: return "order violation";
    case FormatErrorKind::trailing_bytes: return "trailing bytes";
  }
  return "unknown";
}

FormatError::FormatError(FormatErrorKind kind, std::uint64_t offset, const std::string& detail)
    : Error(fmt::format("{} at byte offset {}: {}", to_string(kind), offset, detail)),
      kind_(kind),
      offset_(offset) {}

PixelId::PixelId(int row, int col) {
  if (row < 0 || row >= kGridSize || col < 0 || col >= kGridSize) {
    throw DomainError(fmt::format("pixel ({}, {}) outside the 4x4 grid", row, col));
  }
  row_ = static_cast<std::uint8_t>(row);
  col_ = static_cast<std::uint8_t>(col);
}

PixelId PixelId::from_index(int index) {
  if (index < 0 || index >= kPixelCount) {
    throw DomainError(fmt::format("pixel index {} outside 0..15", index));
  }
  return PixelId(index / kGridSize, index % kGridSize);
}

PixelSet::PixelSet(std::initializer_list<int> indices) {
  for (int i : indices) {
    insert(PixelId::from_index(i));
  }
}

PixelSet PixelSet::parse(const std::string& text) {
  PixelSet set;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) {
      throw DomainError(fmt::format("empty entry in pixel list '{}'", text));
    }
    const auto last = item.find_last_not_of(" \t");
    const std::string token = item.substr(first, last - first + 1);
    std::size_t used = 0;
    int index = -1;
    try {
      index = std::stoi(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw DomainError(fmt::format("bad pixel index '{}'", token));
    }
    set.insert(PixelId::from_index(index));
  }
  return set;
}

PixelSet PixelSet::column(int col, int n_rows) {
  PixelSet set;
  for (int r = 0; r < n_rows; ++r) {
    set.insert(PixelId(r, col));
  }
  return set;
}

std::vector<PixelId> PixelSet::pixels() const {
  std::vector<PixelId> out;
  for (int i = 0; i < kPixelCount; ++i) {
    if (bits_.test(static_cast<std::size_t>(i))) {
      out.push_back(PixelId::from_index(i));
    }
  }
  return out;
}

std::string PixelSet::to_string() const {
  std::string out;
  for (const PixelId p : pixels()) {
    if (!out.empty()) out += ',';
    out += std::to_string(p.index());
  }
  return out;
}

double PolarizerSpec::transmission(Angle delta) const {
  const double c2 = cos_squared(delta);
  const double leak = std::isinf(extinction_ratio) ? 0.0 : (1.0 - c2) / extinction_ratio;
  return t_max * (c2 + leak);
}

std::uint64_t DetectorSpec::window_ticks() const {
  return static_cast<std::uint64_t>(std::llround(coincidence_window / clock_period));
}

bool DaqSpec::in_transfer_window(double t) const {
  if (transfer_dead_time <= 0.0) return false;
  const double phase = std::fmod(t, cycle_length + transfer_dead_time);
  return phase >= cycle_length;
}

double DaqSpec::live_time_per_run() const {
  const double period = cycle_length + transfer_dead_time;
  const double full = std::floor(run_duration / period);
  const double rest = run_duration - full * period;
  return full * cycle_length + std::min(rest, cycle_length);
}

namespace {

void check_source(const SourceSpec& s, const char* name) {
  if (!(s.rate > 0.0) || !std::isfinite(s.rate)) {
    throw ConfigError(fmt::format("{}.rate must be positive and finite", name));
  }
  if (s.mode == SourceMode::chaotic && !(s.coherence_time > 0.0)) {
    throw ConfigError(fmt::format("{}.coherence_time must be positive in chaotic mode", name));
  }
}

void check_polarizer(const PolarizerSpec& p, const char* name) {
  if (!(p.t_max > 0.0 && p.t_max <= 1.0)) {
    throw ConfigError(fmt::format("{}.t_max must lie in (0, 1]", name));
  }
  if (!(p.extinction_ratio > 1.0)) {
    throw ConfigError(fmt::format("{}.extinction_ratio must exceed 1", name));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  check_source(source_a, "source_a");
  check_source(source_b, "source_b");
  check_polarizer(prep_a, "prep_a");
  check_polarizer(prep_b, "prep_b");
  check_polarizer(analyzer_c, "analyzer_c");
  check_polarizer(analyzer_d, "analyzer_d");

  if (!(detector.quantum_efficiency >= 0.0 && detector.quantum_efficiency <= 1.0)) {
    throw ConfigError("detector.quantum_efficiency must lie in [0, 1]");
  }
  if (!(detector.dark_rate_per_pixel >= 0.0) || !std::isfinite(detector.dark_rate_per_pixel)) {
    throw ConfigError("detector.dark_rate_per_pixel must be non-negative");
  }
  if (!(detector.clock_period > 0.0)) {
    throw ConfigError("detector.clock_period must be positive");
  }
  if (!(detector.coincidence_window >= detector.clock_period)) {
    throw ConfigError("detector.coincidence_window must be at least one clock period");
  }

  if (!(daq.cycle_length > 0.0)) throw ConfigError("daq.cycle_length must be positive");
  if (!(daq.transfer_dead_time >= 0.0)) throw ConfigError("daq.transfer_dead_time must be non-negative");
  if (!(daq.run_duration > 0.0) || !std::isfinite(daq.run_duration)) {
    throw ConfigError("daq.run_duration must be positive");
  }
  if (daq.n_runs < 1) throw ConfigError("daq.n_runs must be at least 1");

  if (d1_pixels.empty() || d2_pixels.empty()) {
    throw ConfigError("d1_pixels and d2_pixels must be non-empty");
  }
  if (!d1_pixels.disjoint(d2_pixels)) {
    throw ConfigError("d1_pixels and d2_pixels overlap");
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  for (PolarizerSpec* p : {&c.prep_a, &c.prep_b, &c.analyzer_c, &c.analyzer_d}) {
    p->t_max = 0.8;
    p->extinction_ratio = 1e4;
  }
  c.rng_seed = 1;
  return c;
}

ExperimentConfig ideal_config() {
  ExperimentConfig c = default_config();
  for (PolarizerSpec* p : {&c.prep_a, &c.prep_b, &c.analyzer_c, &c.analyzer_d}) {
    p->t_max = 1.0;
    p->extinction_ratio = std::numeric_limits<double>::infinity();
  }
  c.detector.dark_rate_per_pixel = 0.0;
  return c;
}

}  // namespace bellsim
