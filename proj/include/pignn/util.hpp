#ifndef PIGNN_UTIL_HPP
#define PIGNN_UTIL_HPP

#include <cstdint>
#include <functional>
#include <random>

namespace pignn {

/// Uniform double in [0, 1) from raw mt19937_64 bits. Avoids the standard
/// distribution classes, whose streams differ across library versions.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Chunked parallel loop over [0, n). Results must be written to disjoint
/// slots so the outcome does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace pignn

#endif
