#pragma once

// Closed forms and brute-force evaluators written independently of the
// library, used as test oracles.

#include <cmath>
#include <complex>
#include <vector>

#include "nbwk/config_space.hpp"

namespace oracle {

/// sum_{i<j} m_i m_j |r_i - r_j|^alpha, straight from the definition.
inline double potential(const nbwk::Configuration& x, const std::vector<double>& m, double alpha) {
  double u = 0.0;
  for (std::size_t i = 0; i < x.bodies(); ++i) {
    for (std::size_t j = i + 1; j < x.bodies(); ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < x.dim(); ++a) d2 += (x(i, a) - x(j, a)) * (x(i, a) - x(j, a));
      u += m[i] * m[j] * std::pow(std::sqrt(d2), alpha);
    }
  }
  return u;
}

/// Two-body constant for alpha = -1: c^2 = 8 m1^2 m2^2 / (m1 + m2).
inline double kepler_c(double m1, double m2) { return std::sqrt(8.0 * m1 * m1 * m2 * m2 / (m1 + m2)); }

/// Levi-Civita coordinate of the planar relative vector r2 - r1.
inline std::complex<double> lc(const nbwk::Configuration& x) {
  const std::complex<double> s(x(1, 0) - x(0, 0), x(1, 1) - x(0, 1));
  return std::sqrt(s);
}

/// Newtonian two-body free-time potential between configurations with a
/// common center of mass. The regularization w^2 = s turns zero-energy
/// motion into free motion at constant speed in w, so phi is c times the
/// w-distance, minimized over the two square roots.
inline double phi_two_body(const nbwk::Configuration& x, const nbwk::Configuration& y, double m1,
                           double m2) {
  const auto wx = lc(x);
  const auto wy = lc(y);
  return kepler_c(m1, m2) * std::min(std::abs(wx - wy), std::abs(wx + wy));
}

/// Limit of phi(z, x) - phi(z, x0) along z on the spoke of angle 0 moving off
/// to infinity: -c (|Re w_x| - |Re w_x0|).
inline double busemann_two_body(const nbwk::Configuration& x, const nbwk::Configuration& x0, double m1,
                                double m2) {
  return -kepler_c(m1, m2) * (std::abs(lc(x).real()) - std::abs(lc(x0).real()));
}

/// Duration of the zero-energy radial escape from separation a to b:
/// 1/2 mu s'^2 = m1 m2 / s with mu = m1 m2 / M.
inline double radial_time(double a, double b, double m1, double m2) {
  const double mu = m1 * m2 / (m1 + m2);
  const double k = std::sqrt(mu / (2.0 * m1 * m2));
  return k * (2.0 / 3.0) * (std::pow(b, 1.5) - std::pow(a, 1.5));
}

}  // namespace oracle
