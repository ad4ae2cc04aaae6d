#pragma once

#include <cstdint>

#include "orperc/errors.hpp"
#include "orperc/vec.hpp"

namespace orperc {

// Bernoulli environment on the implicit edge set.  p is both the open
// probability and the weight of the time-zero atom of the passage-time law
// nu_p = p*delta_0 + (1-p)*delta_1, so {edge open} = {edge time 0} by
// construction.
struct FieldParams {
  std::uint64_t seed = 0;
  double p = 0.5;

  FieldParams() = default;
  FieldParams(std::uint64_t s, double prob) : seed(s), p(prob) {
    if (!(p >= 0.0 && p <= 1.0)) throw spec_error("p must lie in [0,1]");
  }
};

// Edge identified by its tail vertex and the index of its direction in the
// graph's dirs list.
template <int D>
struct EdgeKey {
  Vec<D> tail;
  std::int32_t dir_index = 0;
};

// Derived seed for replica r: the r-th output of the SplitMix64 stream
// started at seed.  Streams for distinct replicas are decorrelated without
// any coordination.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t r) {
  return mix64(seed + (r + 1) * 0x9E3779B97F4A7C15ULL);
}

// Counter-based edge randomness: a fixed sponge over (seed, tail, dir_index)
// with a full SplitMix64 finalizer between words.  O(1) memory for a
// conceptually infinite lattice, identical values for identical keys.
template <int D>
inline std::uint64_t edge_bits(std::uint64_t seed, const EdgeKey<D>& e) {
  std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (int i = 0; i < D; ++i) h = mix64(h ^ static_cast<std::uint64_t>(e.tail.c[i]));
  return mix64(h ^ (0xBB67AE8584CAA73BULL + static_cast<std::uint64_t>(e.dir_index)));
}

// Uniform draw on [0,1) with 53 random bits; couples every p through a
// single number per edge.
template <int D>
inline double edge_uniform(const FieldParams& params, const EdgeKey<D>& e) {
  return static_cast<double>(edge_bits(params.seed, e) >> 11) * 0x1.0p-53;
}

// Strict threshold: p = 0 closes everything, p = 1 opens everything, and
// openness is monotone in p edge by edge on a shared seed.
template <int D>
inline bool edge_open(const FieldParams& params, const EdgeKey<D>& e) {
  return edge_uniform(params, e) < params.p;
}

template <int D>
inline int edge_time(const FieldParams& params, const EdgeKey<D>& e) {
  return edge_open(params, e) ? 0 : 1;
}

}  // namespace orperc
