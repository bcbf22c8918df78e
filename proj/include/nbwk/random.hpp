#pragma once

// xoshiro256** seeded through splitmix64. Every random draw in the project
// goes through this generator so that a 64-bit seed pins all outputs on
// every platform (the standard distributions are implementation-defined).

#include <cstdint>
#include <vector>

#include "nbwk/config_space.hpp"

namespace nbwk {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Independent stream derived from this one, e.g. one per worker.
  Rng fork(std::uint64_t stream);

 private:
  std::uint64_t s_[4];
};

/// Uniform unit vector in R^dim.
Vec random_unit_vector(Rng& rng, std::size_t dim);

/// Bodies uniform in the cube [-half_width, half_width]^k, redrawn until
/// min_separation >= min_sep.
Configuration random_configuration(Rng& rng, const MassSystem& sys, double half_width,
                                   double min_sep);

}  // namespace nbwk
