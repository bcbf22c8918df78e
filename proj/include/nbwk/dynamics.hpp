#pragma once

// Potential, Lagrangian, Hamiltonian, Legendre transform and the equations
// of motion x'' = grad U for the homogeneous N-body potential.

#include <functional>
#include <optional>
#include <string>

#include "nbwk/config_space.hpp"
#include "nbwk/curve.hpp"

namespace nbwk {

/// Position and velocity; both share the Configuration shape of the system.
struct PhaseState {
  Configuration position;
  Configuration velocity;
};

/// U(x) = sum_{i<j} m_i m_j |r_i - r_j|^alpha, +infinity on collisions.
double potential(const Configuration& x, const MassSystem& sys);

/// Gradient of U for the mass inner product: component i is (1/m_i) dU/dr_i.
/// Throws DomainError at a collision.
Configuration grad_potential(const Configuration& x, const MassSystem& sys);

/// Euclidean differential dU (component i is dU/dr_i), no mass weights.
Covector potential_differential(const Configuration& x, const MassSystem& sys);

double lagrangian(const Configuration& x, const Configuration& v, const MassSystem& sys);
double hamiltonian(const Configuration& x, const Covector& p, const MassSystem& sys);

Covector legendre(const Configuration& v, const MassSystem& sys);
Configuration legendre_inv(const Covector& p, const MassSystem& sys);

/// 1/2 |v|^2 - U(x). Throws DomainError at a collision.
double energy(const Configuration& x, const Configuration& v, const MassSystem& sys);

struct IntegrateOptions {
  /// Abort once min_separation drops below floor_ratio * diameter(x0).
  double floor_ratio = 1e-8;
  /// Subdivide a step (by powers of two) when bodies come closer than at the start.
  bool adaptive = false;
  std::size_t max_subdivision = 20;
};

/// Sampled solution of x'' = grad U on a uniform output grid.
struct Trajectory {
  Curve curve;
  std::vector<Configuration> velocities;
  bool aborted = false;
  double time_reached = 0.0;
  std::string message;
};

/// Velocity Verlet (symmetric, reversible) for x'' = grad U.
Trajectory integrate_motion(const Configuration& x0, const Configuration& v0, double horizon,
                            double step, const MassSystem& sys, const IntegrateOptions& opts = {});

/// Exponent beta = 1 + alpha/2 of the two-body closed-form solutions c |r1 - r2|^beta.
double kepler_exponent(double alpha = -1.0);

/// Constant c making u = c |r1 - r2|^beta an exact solution of H(x, d_x u) = 0 for two
/// bodies: c^2 = 2 m1^2 m2^2 / (beta^2 (m1 + m2)); for alpha = -1 this is 8 m1^2 m2^2 / (m1 + m2).
double kepler_solution_constant(double m1, double m2, double alpha = -1.0);

using ScalarFn = std::function<double(const Configuration&)>;

/// Fourth-order central-difference differential of f at x, step h per coordinate.
Covector numerical_differential(const ScalarFn& f, const Configuration& x, double h);

/// H(x, d_x u) - level with d_x u from numerical_differential.
double hj_residual(const ScalarFn& u, const Configuration& x, const MassSystem& sys,
                   double level = 0.0, double h = 1e-3);

}  // namespace nbwk
