#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bellsim/types.hpp"

namespace bellsim {

// Binary event file, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "BSEV"
//   4       2     format version (1)
//   6       4     config length L
//   10      L     config text (serialize_config)
//   10+L    4     run count
//   14+L    8     record count N
//   22+L    13*N  records: pixel u8 (row*4+col), tick u64, run u32
//
// Records are sorted by (run, tick). docs/formats.md carries the same table.

inline constexpr std::array<char, 4> kEventMagic = {'B', 'S', 'E', 'V'};
inline constexpr std::uint16_t kEventFormatVersion = 1;
inline constexpr std::size_t kEventRecordSize = 13;

struct EventFile {
  ExperimentConfig config;
  std::uint32_t run_count = 0;
  std::vector<PhotonEvent> events;
};

/// Throws PreconditionError when events are not sorted by (run, tick) or a
/// run index is >= run_count.
std::vector<std::byte> encode_events(const ExperimentConfig& config, std::uint32_t run_count,
                                     std::span<const PhotonEvent> events);

/// Validates magic, version, header, record count, pixel and run ranges and
/// (run, tick) order. Each problem raises FormatError of a distinct kind with
/// the byte offset where it was found.
EventFile decode_events(std::span<const std::byte> bytes);

/// Run count is taken from config.daq.n_runs.
void write_events(const std::filesystem::path& path, const ExperimentConfig& config,
                  std::span<const PhotonEvent> events);
EventFile read_events(const std::filesystem::path& path);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

}  // namespace bellsim
