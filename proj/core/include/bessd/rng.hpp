#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bessd {

/// Stateless 64-bit mixer used to derive substream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the substream addressed by `path` under `master` (for example
/// {episode, decision time, scenario}). Distinct paths give unrelated seeds.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded random stream with platform-independent uniform conversion.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
      : engine_(derive_seed(master, path)) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform double in the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) noexcept;
  /// Standard normal draw (Box-Muller, no cached second value).
  double normal() noexcept;
  std::uint64_t next() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bessd
