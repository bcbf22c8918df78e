#pragma once

// Discrete Lagrangian action of piecewise-linear curves on a uniform grid.
//
// kinetic   = sum_j 1/2 |x_{j+1} - x_j|^2 / dt      (exact for the interpolant)
// potential = sum_j dt * Q_j(U)
//
// where Q_j is U at the segment midpoint (default) or the trapezoid average of
// U at the two segment nodes. Both rules depend on the nodes only, so the
// center-of-mass splitting of the action holds exactly at node level.
//
// A segment whose end node is a collision (some r_i == r_j exactly, curves of
// at least two segments) is traversed as e + (o - e) s^p, p = 2 / (2 - alpha),
// the ejection profile of a collided pair. Its kinetic term gains the factor
// p^2 / (2p - 1), the collided pairs are integrated exactly and the other
// pairs are sampled at s = 1/2. Straight segments would give infinite action
// (trapezoid) or an O(dt^(1/3)) underestimate (midpoint) there.

#include <iosfwd>
#include <span>
#include <vector>

#include "nbwk/config_space.hpp"
#include "nbwk/curve.hpp"

namespace nbwk {

enum class Quadrature { midpoint, trapezoid };

struct ActionBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

ActionBreakdown action(const Curve& curve, const MassSystem& sys,
                       Quadrature quad = Quadrature::midpoint);

/// Gradient of the total action with respect to the interior nodes 1..n-1
/// (Euclidean differential per coordinate). Throws DomainError if a
/// quadrature sample collides.
std::vector<Covector> action_gradient(const Curve& curve, const MassSystem& sys,
                                      Quadrature quad = Quadrature::midpoint);

struct ComDecomposition {
  double centered_action = 0.0;  // action of the internal motion y = x - delta(G(x))
  double drift_term = 0.0;       // 1/2 T M |v|^2
  double identity_gap = 0.0;     // |A(x) - centered_action - drift_term|
};

/// Splits the action of a curve whose center of mass moves linearly in time.
/// Throws PreconditionError when G(x_j) deviates from the line through its
/// endpoints by more than linearity_tol (relative to the curve extent).
ComDecomposition com_decomposition(const Curve& curve, const MassSystem& sys,
                                   Quadrature quad = Quadrature::midpoint,
                                   double linearity_tol = 1e-9);

/// Piecewise-linear resampling onto n_new uniform segments; endpoints and
/// duration are kept.
Curve resample(const Curve& curve, std::size_t n_new);

/// max over interior nodes of |(x_{j+1} - 2 x_j + x_{j-1}) / dt^2 - grad U(x_j)|
/// in the mass norm.
double euler_lagrange_residual(const Curve& curve, const MassSystem& sys);

/// CSV with header `t,body0_x0,...,body0_x{k-1},body1_x0,...`, 17 significant digits.
void write_curve_csv(std::ostream& os, const Curve& curve);
Curve read_curve_csv(std::istream& is);

namespace detail {

/// Flat-buffer action evaluator shared by the public functions and the
/// minimizer. `nodes` holds (n+1) configurations back to back. If `grad` is
/// non-null it receives the differential with respect to every node (same
/// layout), and evaluation stops early with +inf on a collision.
struct FlatAction {
  const MassSystem* sys;
  std::size_t segments;
  double dt;
  Quadrature quad;

  double operator()(std::span<const double> nodes, std::span<double> grad, double* kinetic = nullptr,
                    double* potential = nullptr) const;
};

/// U at one flat configuration, adding scale * dU into grad_accum when it is
/// non-null. Returns +inf on a collision (grad_accum is then meaningless).
double flat_potential(const MassSystem& sys, const double* x, double* grad_accum, double scale);

}  // namespace detail

}  // namespace nbwk
