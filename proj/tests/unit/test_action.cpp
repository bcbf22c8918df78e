#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nbwk/action.hpp"
#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/random.hpp"
#include "oracles.hpp"

using namespace nbwk;

namespace {

Curve random_curve(Rng& rng, const MassSystem& sys, std::size_t n, double T) {
  std::vector<Configuration> nodes;
  for (std::size_t j = 0; j <= n; ++j) nodes.push_back(random_configuration(rng, sys, 1.0, 0.1));
  return Curve(0.0, T / static_cast<double>(n), nodes);
}

// Exact zero-energy escape of two unit masses from collision: s(t) = (3t)^(2/3).
Curve radial_escape(std::size_t n, double s_end) {
  const double T = std::pow(s_end, 1.5) / 3.0;
  std::vector<Configuration> nodes;
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = std::pow(3.0 * T * static_cast<double>(j) / static_cast<double>(n), 2.0 / 3.0);
    nodes.push_back(Configuration::from_positions({{-0.5 * s, 0.0}, {0.5 * s, 0.0}}));
  }
  return Curve(0.0, T / static_cast<double>(n), nodes);
}

}  // namespace

TEST_SUITE("action") {

TEST_CASE("quadrature rules on collision-free curves") {
  Rng rng(1);
  const MassSystem sys({1.0, 2.0, 0.5}, 2);
  const std::vector<double> m{1.0, 2.0, 0.5};
  for (int trial = 0; trial < 10; ++trial) {
    const Curve c = random_curve(rng, sys, 7, 1.3);
    double kin = 0.0;
    double mid = 0.0;
    double trap = 0.0;
    for (std::size_t j = 0; j < c.segments(); ++j) {
      const Configuration d = c.node(j + 1) - c.node(j);
      kin += 0.5 * mass_dot(d, d, sys) / c.dt();
      mid += c.dt() * oracle::potential(0.5 * (c.node(j) + c.node(j + 1)), m, -1.0);
      trap += 0.5 * c.dt() * (oracle::potential(c.node(j), m, -1.0) + oracle::potential(c.node(j + 1), m, -1.0));
    }
    const ActionBreakdown a = action(c, sys);
    CHECK(a.kinetic == doctest::Approx(kin).epsilon(1e-13));
    const bool mid_finite = std::isfinite(mid);
    if (mid_finite) CHECK(a.potential == doctest::Approx(mid).epsilon(1e-13));
    CHECK(a.total == doctest::Approx(a.kinetic + a.potential));
    const ActionBreakdown t = action(c, sys, Quadrature::trapezoid);
    CHECK(t.potential == doctest::Approx(trap).epsilon(1e-13));
  }
}

TEST_CASE("gradient matches finite differences") {
  Rng rng(2);
  const MassSystem sys({1.0, 2.0, 0.5}, 2, -0.8);
  for (Quadrature q : {Quadrature::midpoint, Quadrature::trapezoid}) {
    Curve c = random_curve(rng, sys, 5, 0.9);
    const std::vector<Covector> g = action_gradient(c, sys, q);
    REQUIRE(g.size() == c.segments() - 1);
    const double h = 1e-6;
    for (std::size_t j = 1; j < c.segments(); ++j) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t a = 0; a < 2; ++a) {
          Curve p = c;
          Curve m = c;
          p.nodes()[j](i, a) += h;
          m.nodes()[j](i, a) -= h;
          const double fd = (action(p, sys, q).total - action(m, sys, q).total) / (2 * h);
          CHECK(g[j - 1](i, a) == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("action splits into internal motion and center-of-mass drift") {
  Rng rng(3);
  const MassSystem sys({0.7, 1.3, 2.0}, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const double T = 0.1 + 3.0 * rng.uniform();
    Curve c = random_curve(rng, sys, 9, T);
    // impose a linear center of mass G(t) = g0 + v t
    const Vec g0{rng.normal(), rng.normal()};
    const Vec v{rng.normal(), rng.normal()};
    for (std::size_t j = 0; j <= c.segments(); ++j) {
      const Split sp = split(c.node(j), sys);
      const double t = c.time(j);
      c.nodes()[j] = sp.centered + diagonal_lift(Vec{g0[0] + v[0] * t, g0[1] + v[1] * t}, sys);
    }
    const ComDecomposition d = com_decomposition(c, sys);
    const double drift = 0.5 * T * sys.total_mass() * (v[0] * v[0] + v[1] * v[1]);
    CHECK(d.drift_term == doctest::Approx(drift).epsilon(1e-12));
    CHECK(d.identity_gap <= 1e-12 * std::max(1.0, action(c, sys).total));
  }
}

TEST_CASE("nonlinear center of mass is rejected") {
  Rng rng(4);
  const MassSystem sys({1.0, 1.0}, 2);
  const Curve c = random_curve(rng, sys, 6, 1.0);
  CHECK_THROWS_AS(com_decomposition(c, sys), PreconditionError);
}

TEST_CASE("collision endpoint follows the ejection profile") {
  const MassSystem sys({1.0, 1.0}, 2);
  // phi(collision, separation 1) = c * |w| = 2
  double prev = 1.0;
  for (std::size_t n : {16, 64, 256}) {
    const Curve c = radial_escape(n, 1.0);
    const double err = std::abs(action(c, sys).total - 2.0) / 2.0;
    CHECK(err < prev);
    prev = err;
    if (n == 64) CHECK(err < 2e-3);
    const double trap = action(c, sys, Quadrature::trapezoid).total;
    CHECK(std::isfinite(trap));
    CHECK(std::abs(trap - 2.0) < 0.05);
  }
  // straight segments through a collision at an interior node stay singular
  const Curve through = Curve::segment(Configuration::from_positions({{-1, 0}, {1, 0}}),
                                       Configuration::from_positions({{1, 0}, {-1, 0}}), 1.0, 2);
  CHECK(std::isinf(action(through, sys, Quadrature::trapezoid).total));
}

TEST_CASE("Euler-Lagrange residual vanishes on Verlet samples") {
  // velocity Verlet positions satisfy the discrete equation exactly
  const MassSystem sys({1.0, 1.0}, 2);
  const Configuration x = Configuration::from_positions({{-0.5, 0.0}, {0.5, 0.0}});
  const Configuration v = Configuration::from_positions({{0.0, -0.6}, {0.0, 0.6}});
  Trajectory tr = integrate_motion(x, v, 1.0, 1e-2, sys);
  CHECK(euler_lagrange_residual(tr.curve, sys) < 1e-9);
  tr.curve.nodes()[40](0, 1) += 1e-3;
  CHECK(euler_lagrange_residual(tr.curve, sys) > 1.0);
}

TEST_CASE("resampling and CSV round trip") {
  Rng rng(5);
  const MassSystem sys({1.0, 1.0, 1.0}, 2);
  const Curve c = random_curve(rng, sys, 4, 2.0);
  const Curve r = resample(c, 12);
  CHECK(r.segments() == 12);
  CHECK(r.duration() == doctest::Approx(2.0));
  CHECK(r.front() == c.front());
  CHECK(max_norm(r.back() - c.back()) < 1e-15);
  CHECK(max_norm(r.at(0.7) - c.at(0.7)) < 1e-14);

  std::stringstream ss;
  write_curve_csv(ss, c);
  CHECK(ss.str().rfind("t,body0_x0,body0_x1,body1_x0", 0) == 0);
  const Curve back = read_curve_csv(ss);
  REQUIRE(back.segments() == c.segments());
  for (std::size_t j = 0; j <= c.segments(); ++j) CHECK(back.node(j) == c.node(j));
  CHECK(back.dt() == doctest::Approx(c.dt()).epsilon(1e-15));
}

}  // TEST_SUITE
