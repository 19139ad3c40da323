#pragma once

#include <cstdint>
#include <random>

namespace invlab {

using Rng = std::mt19937_64;

/// splitmix64 step; used to whiten seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: deterministic regardless of the order
/// streams are consumed in.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace invlab
