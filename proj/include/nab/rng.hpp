#pragma once

#include <cstdint>
#include <random>

namespace nab {

// splitmix64; used to derive independent sub-seeds from (seed, context) tuples
// so adversary hooks and generators replay exactly.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

template <typename... Rest>
uint64_t mix64(uint64_t a, uint64_t b, Rest... rest) {
  return mix64(mix64(a, b), static_cast<uint64_t>(rest)...);
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

// Cheap splitmix stream for hot paths that only need decorrelated draws
// (adversary hooks fire thousands of times per instance).
struct SmallRng {
  uint64_t state;
  explicit SmallRng(uint64_t seed) : state(seed) {}
  uint64_t operator()() { return state = mix64(state); }
};

}  // namespace nab
