#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace wshift {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Labeled split of a root seed. Every internal random stream is derived
/// from the single run seed through a chain of these, so a stream depends
/// only on (root, label, indices) and never on scheduling.
constexpr Seed derive_seed(Seed root, std::string_view label,
                           std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(root ^ fnv1a(label));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

/// Uniform draw strictly inside (0, 1): midpoint of a 53-bit dyadic cell.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace wshift
