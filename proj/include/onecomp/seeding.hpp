#pragma once

#include <cstdint>

namespace onecomp {

// SplitMix64 finalizer, used as a counter-based hash so per-window and
// per-trajectory draws do not depend on evaluation order.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t stream = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

// Maps a hash to the open interval (-1, 1).
constexpr double hash_to_open_unit(std::uint64_t h) {
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
  return 2.0 * u - 1.0;
}

}  // namespace onecomp
