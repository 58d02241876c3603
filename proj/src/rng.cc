#include "rawcsi/rng.h"

#include <cmath>
#include <numbers>

namespace rawcsi {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t streamKey(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(seed);
  for (auto id : ids) h = mix64(h ^ (id + 0x9e3779b97f4a7c15ULL));
  return h;
}

double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

double uniform(Engine& e, double lo, double hi) { return lo + (hi - lo) * uniform01(e); }

double standardNormal(Engine& e) {
  const double u1 = 1.0 - uniform01(e);  // (0, 1]
  const double u2 = uniform01(e);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t uniformIndex(Engine& e, std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection sampling over the smallest power-of-two mask covering n.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    const std::uint64_t v = e() & mask;
    if (v < n) return v;
  }
}

}  // namespace rawcsi
