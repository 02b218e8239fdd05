#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "bellsim/types.hpp"

namespace bellsim {

// Config files are flat `key = value` text, one entry per line, `#` starts a
// comment. Keys are dotted (`source_a.rate`, `analyzer_d.axis`, ...); see
// docs/formats.md for the full schema. Every key is optional except
// `rng_seed`; missing keys take the values of default_config().

/// Parses config text. Unknown keys, duplicate keys, malformed values and a
/// missing rng_seed raise ConfigError carrying the line number.
ExperimentConfig parse_config(std::string_view text);

/// Writes every key in canonical order. Reals use the shortest decimal form
/// that round-trips, so parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace bellsim
