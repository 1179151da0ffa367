#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace insh {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives a child seed from a master seed and a path of integer labels.
///
/// Streams are keyed by *what* they are used for (generation, design ordinal,
/// purpose tag) rather than by the order in which they are requested, so the
/// random numbers a design sees do not depend on thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = detail::splitmix64(master);
  for (std::uint64_t p : path) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// Purpose tags for derive_seed paths.
namespace stream {
inline constexpr std::uint64_t kInitial = 1;
inline constexpr std::uint64_t kEvaluate = 2;
inline constexpr std::uint64_t kSpawn = 3;
inline constexpr std::uint64_t kBank = 4;
inline constexpr std::uint64_t kChain = 5;
inline constexpr std::uint64_t kBootstrap = 6;
inline constexpr std::uint64_t kReplicate = 7;
}  // namespace stream

}  // namespace insh
