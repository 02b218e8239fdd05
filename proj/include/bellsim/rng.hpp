#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bellsim {

using Rng = std::mt19937_64;

/// Independent random substreams of one simulated run. Each stage draws from
/// its own stream so that changing one stage never shifts another.
enum class Stream : std::uint64_t {
  source_a = 1,
  source_b = 2,
  prep_a = 3,
  prep_b = 4,
  routing = 5,
  detection = 6,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a sequence of words.
std::uint64_t combine_seed(std::initializer_list<std::uint64_t> words) noexcept;

/// Generator for (seed, run, stream).
Rng make_rng(std::uint64_t seed, std::uint32_t run, Stream stream);

}  // namespace bellsim
