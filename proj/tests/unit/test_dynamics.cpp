#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/random.hpp"
#include "oracles.hpp"

using namespace nbwk;

TEST_SUITE("dynamics") {

TEST_CASE("potential matches the pair sum") {
  Rng rng(1);
  for (double alpha : {-1.0, -0.5, -1.5}) {
    const MassSystem sys({1.0, 2.0, 0.5}, 3, alpha);
    const std::vector<double> m{1.0, 2.0, 0.5};
    for (int i = 0; i < 20; ++i) {
      const Configuration x = random_configuration(rng, sys, 1.0, 0.05);
      CHECK(potential(x, sys) == doctest::Approx(oracle::potential(x, m, alpha)).epsilon(1e-13));
    }
  }
  const MassSystem two({1.0, 1.0}, 2);
  CHECK(potential(Configuration::from_positions({{0, 0}, {2, 0}}), two) == doctest::Approx(0.5));
  CHECK(std::isinf(potential(Configuration::from_positions({{1, 0}, {1, 0}}), two)));
}

TEST_CASE("gradient is the mass-weighted differential") {
  Rng rng(2);
  const MassSystem sys({1.0, 2.0, 0.5}, 2, -0.7);
  const ScalarFn U = [&](const Configuration& y) { return potential(y, sys); };
  for (int i = 0; i < 10; ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.2);
    const Covector dU = potential_differential(x, sys);
    const Covector fd = numerical_differential(U, x, 1e-4);
    CHECK(max_norm(dU - fd) < 1e-8 * max_norm(dU));
    const Configuration g = grad_potential(x, sys);
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t a = 0; a < 2; ++a) CHECK(g(b, a) * sys.mass(b) == doctest::Approx(dU(b, a)));
    }
  }
  CHECK_THROWS_AS(grad_potential(Configuration::from_positions({{0, 0}, {0, 0}, {1, 1}}), sys),
                  DomainError);
}

TEST_CASE("Legendre transform and energy") {
  Rng rng(3);
  const MassSystem sys({1.0, 3.0}, 2);
  for (int i = 0; i < 10; ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.1);
    const Configuration v = random_configuration(rng, sys, 1.0, 0.0);
    const Covector p = legendre(v, sys);
    CHECK(max_norm(legendre_inv(p, sys) - v) < 1e-15);
    CHECK(pairing(p, v) == doctest::Approx(mass_dot(v, v, sys)));
    CHECK(hamiltonian(x, p, sys) == doctest::Approx(energy(x, v, sys)));
    // L and H are Legendre duals: H(x, p) = p(v) - L(x, v)
    CHECK(hamiltonian(x, p, sys) == doctest::Approx(pairing(p, v) - lagrangian(x, v, sys)));
  }
}

TEST_CASE("two-body constant") {
  CHECK(kepler_exponent(-1.0) == 0.5);
  CHECK(kepler_exponent(-0.5) == 0.75);
  CHECK(kepler_solution_constant(1.0, 1.0) == doctest::Approx(2.0));
  for (auto [m1, m2] : {std::pair{1.0, 1.0}, {0.2, 5.0}, {3.0, 1.5}}) {
    CHECK(kepler_solution_constant(m1, m2) == doctest::Approx(oracle::kepler_c(m1, m2)));
    // u = c |r1 - r2|^beta solves H(x, du) = 0 for any alpha
    for (double alpha : {-1.0, -0.4, -1.6}) {
      const MassSystem sys({m1, m2}, 2, alpha);
      const double c = kepler_solution_constant(m1, m2, alpha);
      const double beta = kepler_exponent(alpha);
      const ScalarFn u = [&](const Configuration& y) { return c * std::pow(min_separation(y), beta); };
      const Configuration x = Configuration::from_positions({{0.3, -0.2}, {1.1, 0.4}});
      CHECK(std::abs(hj_residual(u, x, sys, 0.0, 1e-4)) < 1e-8);
    }
  }
}

TEST_CASE("circular orbit returns after one period") {
  // unit masses at separation 1: relative circular speed v = sqrt(M / s) = sqrt(2)
  const MassSystem sys({1.0, 1.0}, 2);
  const Configuration x = Configuration::from_positions({{-0.5, 0.0}, {0.5, 0.0}});
  const double w = std::sqrt(2.0);
  const Configuration v = Configuration::from_positions({{0.0, -0.5 * w}, {0.0, 0.5 * w}});
  const double period = 2.0 * std::numbers::pi / w;
  const Trajectory tr = integrate_motion(x, v, period, period / 2000.0, sys);
  REQUIRE_FALSE(tr.aborted);
  CHECK(max_norm(tr.curve.back() - x) < 5e-5);
  const double e0 = energy(x, v, sys);
  for (std::size_t j = 0; j < tr.velocities.size(); j += 100) {
    CHECK(energy(tr.curve.node(j), tr.velocities[j], sys) == doctest::Approx(e0).epsilon(1e-6));
  }
}

TEST_CASE("radial infall aborts near collision") {
  const MassSystem sys({1.0, 1.0}, 2);
  const Configuration x = Configuration::from_positions({{-0.5, 0.0}, {0.5, 0.0}});
  IntegrateOptions io;
  io.adaptive = true;
  io.floor_ratio = 1e-3;
  const Trajectory tr = integrate_motion(x, sys.zero(), 5.0, 1e-3, sys, io);
  CHECK(tr.aborted);
  CHECK(tr.time_reached < 5.0);
  CHECK_FALSE(tr.message.empty());
}

}  // TEST_SUITE
