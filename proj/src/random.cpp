#include "nbwk/random.hpp"

#include <cmath>
#include <numbers>

#include "nbwk/errors.hpp"

namespace nbwk {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller; u1 is kept away from zero.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t stream) { return Rng(next() ^ (0xd1b54a32d192ed03ULL * (stream + 1))); }

Vec random_unit_vector(Rng& rng, std::size_t dim) {
  Vec v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& c : v) c = rng.normal();
    n = euclidean_norm(v);
  }
  for (double& c : v) c /= n;
  return v;
}

Configuration random_configuration(Rng& rng, const MassSystem& sys, double half_width,
                                   double min_sep) {
  if (!(half_width > 0.0)) throw InvalidInput("random_configuration: half width must be positive");
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Configuration x = sys.zero();
    for (double& c : x.coords()) c = rng.uniform(-half_width, half_width);
    if (min_separation(x) >= min_sep) return x;
  }
  throw InvalidInput("random_configuration: separation floor unreachable in the given box");
}

}  // namespace nbwk
