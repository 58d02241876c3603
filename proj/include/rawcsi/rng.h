#ifndef RAWCSI_RNG_H_
#define RAWCSI_RNG_H_

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rawcsi {

// Engine used everywhere randomness is consumed. std::mt19937_64 is fully
// specified by the standard; the distributions below are written out by hand
// because the standard library's are implementation-defined.
using Engine = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Folds a list of identifiers into one 64-bit stream key:
//   h = mix64(seed); for each id: h = mix64(h ^ (id + 0x9e3779b97f4a7c15))
std::uint64_t streamKey(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

inline Engine makeEngine(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  return Engine(streamKey(seed, ids));
}

// Uniform in [0, 1): top 53 bits of one draw.
double uniform01(Engine& e);
// Uniform in [lo, hi); returns lo when hi == lo.
double uniform(Engine& e, double lo, double hi);
// Standard normal via Box-Muller (two uniform draws per call, cosine branch).
double standardNormal(Engine& e);
// Uniform integer in [0, n) by rejection on the top bits.
std::uint64_t uniformIndex(Engine& e, std::uint64_t n);

// Fisher-Yates using uniformIndex.
template <typename It>
void shuffle(It first, It last, Engine& e) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniformIndex(e, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

}  // namespace rawcsi

#endif  // RAWCSI_RNG_H_
