#pragma once

// Per-stream seeding: every random stream is keyed by (seed, domain, index) so that a
// shot's draws do not depend on which thread ran it or in which order.

#include <cstdint>
#include <random>

namespace thetaskew::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Domain : std::uint64_t { jitter = 1, events = 2, misc = 3 };

inline std::uint64_t stream_seed(std::uint64_t seed, Domain domain, std::uint64_t index) noexcept {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (static_cast<std::uint64_t>(domain) * 0xd6e8feb86659fd93ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (index + 0x632be59bd9b4e019ULL);
  return splitmix64(s);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, Domain domain, std::uint64_t index) {
  return Engine(stream_seed(seed, domain, index));
}

}  // namespace thetaskew::rng
