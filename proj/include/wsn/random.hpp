#ifndef WSN_RANDOM_HPP
#define WSN_RANDOM_HPP

#include <cstdint>
#include <random>

namespace wsn {

/// Every stochastic step in the pipeline draws from a 64-bit Mersenne
/// Twister seeded explicitly. There is no wall-clock seeding anywhere.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for sub-task `index` of a run seeded with `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ (index * 0xd6e8feb86659fd93ULL + 1));
}

}  // namespace wsn

#endif  // WSN_RANDOM_HPP
