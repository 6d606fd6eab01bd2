#pragma once

#include <cstdint>
#include <random>

namespace nsnv {

using Rng = std::mt19937_64;

// Independent sub-streams derived from one master seed. Changing the policy
// stream never perturbs the demand path and vice versa.
enum class Stream : std::uint64_t {
  Demand = 1,
  Instance = 2,
  Policy = 3,
};

// splitmix64 finaliser; good avalanche for consecutive seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, Stream s) noexcept {
  return mix_seed(mix_seed(master) ^ (static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL));
}

inline Rng make_rng(std::uint64_t master, Stream s) { return Rng{stream_seed(master, s)}; }

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace nsnv
