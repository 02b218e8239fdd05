#include "bellsim/rng.hpp"

namespace bellsim {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t w : words) {
    h = mix64(h ^ mix64(w));
  }
  return h;
}

Rng make_rng(std::uint64_t seed, std::uint32_t run, Stream stream) {
  const std::uint64_t s = combine_seed({seed, run, static_cast<std::uint64_t>(stream)});
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

}  // namespace bellsim
