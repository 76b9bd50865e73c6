#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace roughflow {

// All randomness in a run flows from one master seed through named
// sub-streams ("driver", "mesh", "probes", ...), so adding a consumer never
// perturbs the draws of an existing one.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t master, std::string_view stream) {
  // FNV-1a over the stream name, then two splitmix rounds against the master.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(splitmix64(master ^ h) + h);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream) {
  return std::mt19937_64(sub_seed(master, stream));
}

}  // namespace roughflow
