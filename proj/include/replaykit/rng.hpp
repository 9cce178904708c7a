#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace replaykit {

/// Counter-based generator: output i is splitmix64's finalizer applied to
/// key + i * golden-gamma. Streams are derived from (seed, label) so draws
/// for one class never depend on how many draws other classes made.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, std::string_view stream);

  static std::uint64_t mix(std::uint64_t z) noexcept;
  static std::uint64_t fnv1a(std::string_view bytes) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next() noexcept;

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Independent child stream.
  CounterRng split(std::string_view stream) const;

 private:
  CounterRng(std::uint64_t key, int) : key_(key) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Partial Fisher-Yates over `items`: returns min(k, size) items in draw
/// order. Callers sort `items` first so the result does not depend on input
/// order.
template <typename T>
std::vector<T> draw_without_replacement(std::vector<T> items, std::size_t k, CounterRng& rng) {
  const std::size_t n = items.size();
  if (k >= n) return items;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

}  // namespace replaykit
