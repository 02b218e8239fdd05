#include "bellsim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "bellsim/errors.hpp"

namespace bellsim {
namespace {

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> parse;
  std::function<std::string(const ExperimentConfig&)> format;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw DomainError(fmt::format("expected a real number, got '{}'", v));
  }
  return x;
}

template <typename Int>
Int parse_int(std::string_view v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw DomainError(fmt::format("expected a non-negative integer, got '{}'", v));
  }
  return x;
}

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw DomainError(fmt::format("expected true or false, got '{}'", v));
}

SourceMode parse_mode(std::string_view v) {
  if (v == "coherent") return SourceMode::coherent;
  if (v == "chaotic") return SourceMode::chaotic;
  throw DomainError(fmt::format("expected coherent or chaotic, got '{}'", v));
}

std::string real(double x) { return fmt::format("{}", x); }

template <typename Member>
Field real_field(std::string key, Member member) {
  return Field{std::move(key),
               [member](ExperimentConfig& c, std::string_view v) { std::invoke(member, c) = parse_real(v); },
               [member](const ExperimentConfig& c) { return real(std::invoke(member, c)); }};
}

void add_source(std::vector<Field>& f, const std::string& name, SourceSpec ExperimentConfig::*src) {
  f.push_back({name + ".enabled",
               [src](ExperimentConfig& c, std::string_view v) { (c.*src).enabled = parse_bool(v); },
               [src](const ExperimentConfig& c) { return std::string((c.*src).enabled ? "true" : "false"); }});
  f.push_back(real_field(name + ".rate", [src](auto& c) -> auto& { return (c.*src).rate; }));
  f.push_back({name + ".mode",
               [src](ExperimentConfig& c, std::string_view v) { (c.*src).mode = parse_mode(v); },
               [src](const ExperimentConfig& c) {
                 return std::string((c.*src).mode == SourceMode::chaotic ? "chaotic" : "coherent");
               }});
  f.push_back(real_field(name + ".coherence_time", [src](auto& c) -> auto& { return (c.*src).coherence_time; }));
}

void add_polarizer(std::vector<Field>& f, const std::string& name, PolarizerSpec ExperimentConfig::*pol) {
  f.push_back({name + ".axis",
               [pol](ExperimentConfig& c, std::string_view v) { (c.*pol).axis = Angle::from_degrees(parse_real(v)); },
               [pol](const ExperimentConfig& c) { return real((c.*pol).axis.deg()); }});
  f.push_back(real_field(name + ".t_max", [pol](auto& c) -> auto& { return (c.*pol).t_max; }));
  f.push_back(real_field(name + ".extinction_ratio", [pol](auto& c) -> auto& { return (c.*pol).extinction_ratio; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"rng_seed",
                 [](ExperimentConfig& c, std::string_view v) { c.rng_seed = parse_int<std::uint64_t>(v); },
                 [](const ExperimentConfig& c) { return std::to_string(c.rng_seed); }});
    add_source(f, "source_a", &ExperimentConfig::source_a);
    add_source(f, "source_b", &ExperimentConfig::source_b);
    add_polarizer(f, "prep_a", &ExperimentConfig::prep_a);
    add_polarizer(f, "prep_b", &ExperimentConfig::prep_b);
    add_polarizer(f, "analyzer_c", &ExperimentConfig::analyzer_c);
    add_polarizer(f, "analyzer_d", &ExperimentConfig::analyzer_d);
    f.push_back(real_field("detector.quantum_efficiency", [](auto& c) -> auto& { return c.detector.quantum_efficiency; }));
    f.push_back(real_field("detector.dark_rate_per_pixel", [](auto& c) -> auto& { return c.detector.dark_rate_per_pixel; }));
    f.push_back(real_field("detector.clock_period", [](auto& c) -> auto& { return c.detector.clock_period; }));
    f.push_back(real_field("detector.coincidence_window", [](auto& c) -> auto& { return c.detector.coincidence_window; }));
    f.push_back(real_field("daq.cycle_length", [](auto& c) -> auto& { return c.daq.cycle_length; }));
    f.push_back(real_field("daq.transfer_dead_time", [](auto& c) -> auto& { return c.daq.transfer_dead_time; }));
    f.push_back(real_field("daq.run_duration", [](auto& c) -> auto& { return c.daq.run_duration; }));
    f.push_back({"daq.n_runs",
                 [](ExperimentConfig& c, std::string_view v) { c.daq.n_runs = parse_int<std::uint32_t>(v); },
                 [](const ExperimentConfig& c) { return std::to_string(c.daq.n_runs); }});
    f.push_back({"d1_pixels",
                 [](ExperimentConfig& c, std::string_view v) { c.d1_pixels = PixelSet::parse(std::string(v)); },
                 [](const ExperimentConfig& c) { return c.d1_pixels.to_string(); }});
    f.push_back({"d2_pixels",
                 [](ExperimentConfig& c, std::string_view v) { c.d2_pixels = PixelSet::parse(std::string(v)); },
                 [](const ExperimentConfig& c) { return c.d2_pixels.to_string(); }});
    return f;
  }();
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string_view, const Field*> by_key;
  for (const Field& f : fields()) {
    by_key.emplace(f.key, &f);
  }

  ExperimentConfig config = default_config();
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value'", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw ConfigError(fmt::format("unknown key '{}'", key), line_no);
    }
    if (const auto [prev, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ConfigError(fmt::format("duplicate key '{}' (first set on line {})", key, prev->second), line_no);
    }
    if (value.empty()) {
      throw ConfigError(fmt::format("missing value for '{}'", key), line_no);
    }
    try {
      it->second->parse(config, value);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()), line_no);
    }
  }
  if (!seen.contains("rng_seed")) {
    throw ConfigError("rng_seed is required");
  }
  config.validate();
  return config;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : fields()) {
    out += fmt::format("{} = {}\n", f.key, f.format(config));
  }
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open config '{}'", path.string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << serialize_config(config);
  if (!out) {
    throw IoError(fmt::format("cannot write config '{}'", path.string()));
  }
}

}  // namespace bellsim
