#pragma once

#include <cstdint>
#include <random>

namespace dwreg {

// splitmix64 mixing step. Used to derive independent stream seeds so that
// replicate r of a run always sees the same seed no matter how the work is
// scheduled across threads.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b) {
  return mix64(derive_seed(base, a) ^ mix64(b + 0x517cc1b727220a95ULL));
}

// Uniform draw on the open interval (0, 1). Built from the top 53 bits of an
// mt19937_64 word instead of std::uniform_real_distribution, whose output
// sequence is implementation-defined; this keeps artifacts byte-identical
// across standard libraries. Never returns 0 or 1, so it is safe to feed
// into inverse-cdf samplers and log transforms.
inline double uniform_open01(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dwreg
