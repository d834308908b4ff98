#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pnn {

/// splitmix64 step: advances `state` and returns the next output.
/// Used only for seed derivation, never as the main engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Derives an independent engine seed from a base seed and a stream tag.
/// Identical (base, tag) pairs always yield the same seed, so any unit of
/// work keyed by a stable tag is reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ull + tag);
  splitmix64(s);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return derive_seed(base, fnv1a64(tag));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

}  // namespace pnn
