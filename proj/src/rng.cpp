#include "replaykit/rng.hpp"

namespace replaykit {

std::uint64_t CounterRng::mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::string_view stream)
    : key_(mix(seed ^ mix(fnv1a(stream)))) {}

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return mix(key_ + counter_ * kGamma);
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // reject the low sliver that would bias x % bound
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= threshold) return x % bound;
  }
}

CounterRng CounterRng::split(std::string_view stream) const {
  return CounterRng(mix(key_ ^ mix(fnv1a(stream))), 0);
}

}  // namespace replaykit
