#include "bellsim/event_file.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include <fmt/format.h>

#include "bellsim/config.hpp"
#include "bellsim/errors.hpp"

namespace bellsim {
namespace {

template <typename UInt>
void put_le(std::vector<std::byte>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xff));
  }
}

template <typename UInt>
UInt get_le(const std::byte* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return v;
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  const std::byte* take(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(FormatErrorKind::truncated, pos_,
                        fmt::format("{} needs {} bytes, {} remain", what, n, remaining()));
    }
    const std::byte* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  template <typename UInt>
  UInt read(const char* what) {
    return get_le<UInt>(take(sizeof(UInt), what));
  }

 private:
  std::span<const std::byte> bytes_;
  std::uint64_t pos_ = 0;
};

bool before(const PhotonEvent& x, const PhotonEvent& y) {
  return x.run != y.run ? x.run < y.run : x.time < y.time;
}

}  // namespace

std::vector<std::byte> encode_events(const ExperimentConfig& config, std::uint32_t run_count,
                                     std::span<const PhotonEvent> events) {
  const std::string text = serialize_config(config);
  std::vector<std::byte> out;
  out.reserve(22 + text.size() + kEventRecordSize * events.size());
  for (char c : kEventMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kEventFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  for (char c : text) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, run_count);
  put_le<std::uint64_t>(out, events.size());

  for (std::size_t i = 0; i < events.size(); ++i) {
    const PhotonEvent& e = events[i];
    if (i > 0 && before(e, events[i - 1])) {
      throw PreconditionError(fmt::format("event {} breaks (run, tick) order", i));
    }
    if (e.run >= run_count) {
      throw PreconditionError(fmt::format("event {} has run {} >= run count {}", i, e.run, run_count));
    }
    out.push_back(static_cast<std::byte>(e.pixel.index()));
    put_le<std::uint64_t>(out, e.time.count);
    put_le<std::uint32_t>(out, e.run);
  }
  return out;
}

EventFile decode_events(std::span<const std::byte> bytes) {
  Reader in(bytes);
  const std::byte* magic = in.take(kEventMagic.size(), "magic");
  if (std::memcmp(magic, kEventMagic.data(), kEventMagic.size()) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, 0, "not a bellsim event file");
  }
  const std::uint64_t version_at = in.offset();
  const auto version = in.read<std::uint16_t>("version");
  if (version != kEventFormatVersion) {
    throw FormatError(FormatErrorKind::bad_version, version_at,
                      fmt::format("version {} (expected {})", version, kEventFormatVersion));
  }

  const auto text_len = in.read<std::uint32_t>("config length");
  const std::uint64_t text_at = in.offset();
  const std::byte* text = in.take(text_len, "config text");
  EventFile file;
  try {
    file.config = parse_config(std::string_view(reinterpret_cast<const char*>(text), text_len));
  } catch (const ConfigError& e) {
    throw FormatError(FormatErrorKind::bad_header, text_at, fmt::format("config echo: {}", e.what()));
  }

  file.run_count = in.read<std::uint32_t>("run count");
  const std::uint64_t count_at = in.offset();
  const auto n = in.read<std::uint64_t>("record count");
  if (in.remaining() / kEventRecordSize < n) {
    // Point at the first record that is missing or cut short.
    const std::uint64_t whole = in.remaining() / kEventRecordSize;
    const std::uint64_t at = in.offset() + whole * kEventRecordSize;
    throw FormatError(FormatErrorKind::truncated, at,
                      fmt::format("header at {} declares {} records, record {} is incomplete ({} of 13 bytes)",
                                  count_at, n, whole, in.remaining() % kEventRecordSize));
  }
  if (in.remaining() != n * kEventRecordSize) {
    throw FormatError(FormatErrorKind::trailing_bytes, in.offset() + n * kEventRecordSize,
                      fmt::format("{} bytes after the last record", in.remaining() - n * kEventRecordSize));
  }

  file.events.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t at = in.offset();
    const std::byte* rec = in.take(kEventRecordSize, "record");
    const int pixel = std::to_integer<int>(rec[0]);
    if (pixel >= kPixelCount) {
      throw FormatError(FormatErrorKind::bad_record, at, fmt::format("record {}: pixel byte {}", i, pixel));
    }
    PhotonEvent e{PixelId::from_index(pixel), Tick{get_le<std::uint64_t>(rec + 1)}, get_le<std::uint32_t>(rec + 9)};
    if (e.run >= file.run_count) {
      throw FormatError(FormatErrorKind::bad_record, at,
                        fmt::format("record {}: run {} >= run count {}", i, e.run, file.run_count));
    }
    if (!file.events.empty() && before(e, file.events.back())) {
      throw FormatError(FormatErrorKind::order_violation, at,
                        fmt::format("record {} precedes its predecessor in (run, tick)", i));
    }
    file.events.push_back(e);
  }
  return file;
}

void write_events(const std::filesystem::path& path, const ExperimentConfig& config,
                  std::span<const PhotonEvent> events) {
  const std::vector<std::byte> bytes = encode_events(config, config.daq.n_runs, events);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError(fmt::format("short write to '{}'", path.string()));
  }
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}'", path.string()));
  }
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) {
    throw IoError(fmt::format("short read from '{}'", path.string()));
  }
  return bytes;
}

EventFile read_events(const std::filesystem::path& path) { return decode_events(read_file_bytes(path)); }

}  // namespace bellsim
