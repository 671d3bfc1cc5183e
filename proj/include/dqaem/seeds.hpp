#pragma once

#include <cstdint>
#include <random>

namespace dqaem {

/// One SplitMix64 step; used as the seed-splitting mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent purposes drawing from a common root seed.
enum class SeedStream : std::uint64_t {
  kInit = 1,
  kFit = 2,
  kData = 3,
};

/// Sub-seed for (root, stream, index):
///   splitmix64(splitmix64(root ^ splitmix64(stream)) + index)
constexpr std::uint64_t derive_seed(std::uint64_t root, SeedStream stream,
                                    std::uint64_t index) {
  const std::uint64_t base =
      splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(stream)));
  return splitmix64(base + index);
}

using Rng = std::mt19937_64;

}  // namespace dqaem
