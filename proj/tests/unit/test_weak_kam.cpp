#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/random.hpp"
#include "nbwk/weak_kam.hpp"
#include "oracles.hpp"

using namespace nbwk;

namespace {

const MassSystem kTwo({1.0, 1.0}, 2);

PolarGrid small_grid(std::vector<Vec> shifts = {Vec{0.0, 0.0}}) {
  PolarGrid g = PolarGrid::geometric({1.0, 1.0}, 0.5, 2.0, 3, 8);
  g.shifts = std::move(shifts);
  return g;
}

MinimizeOptions coarse() {
  MinimizeOptions o;
  o.nodes = 32;
  return o;
}

const FixedTimeKernel& small_kernel() {
  static const FixedTimeKernel k = fixed_time_kernel(small_grid(), 1.0, coarse());
  return k;
}

}  // namespace

TEST_SUITE("weak_kam") {

TEST_CASE("closed-form field") {
  const KeplerField u(kTwo);
  CHECK(u.constant() == doctest::Approx(2.0));
  const Configuration x = Configuration::from_positions({{0, 0}, {4, 0}});
  CHECK(u.value(x) == doctest::Approx(4.0));
  CHECK(KeplerField(kTwo, -1.0).value(x) == doctest::Approx(-4.0));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    CHECK(std::abs(field_hj_residual(u, random_configuration(rng, kTwo, 1.0, 0.01), kTwo)) < 1e-9);
  }
  CHECK_THROWS_AS(KeplerField(MassSystem({1.0, 1.0, 1.0}, 2)), InvalidInput);
}

TEST_CASE("lifted field has a constant Hamiltonian level") {
  const MassSystem sys({1.0, 3.0}, 2);
  const Vec r{0.3, -0.4};
  const SupercriticalLift lift = supercritical_lift(std::make_shared<const KeplerField>(sys), r, sys);
  // d<G, r> = (m_i r / M)_i; its dual norm squared is sum m_i |r|^2 / M^2 = |r|^2 / M
  CHECK(lift.predicted_level == doctest::Approx(0.5 * 0.25 / 4.0));
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.05);
    CHECK(std::abs(field_hj_residual(*lift.field, x, sys, lift.predicted_level)) < 1e-9);
    CHECK(lift.field->differential(x).has_value() == KeplerField(sys).differential(x).has_value());
  }
}

TEST_CASE("translation invariance check") {
  Rng rng(3);
  std::vector<Configuration> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_configuration(rng, kTwo, 1.0, 0.05));
  const std::vector<Vec> shifts{{0.6, 0.0}, {0.0, -0.9}, {0.3, 0.4}};
  const KeplerField u(kTwo);
  const InvarianceReport a = translation_invariance_check(u, shifts, pts, kTwo);
  CHECK(a.normalized < 1e-12);
  CHECK(a.evaluated == 30);
  const Vec r{1.0, 2.0};
  const auto lift = supercritical_lift(std::make_shared<const KeplerField>(kTwo), r, kTwo);
  const InvarianceReport b = translation_invariance_check(*lift.field, shifts, pts, kTwo);
  // |<s, r>| is 1.8 for the second shift
  CHECK(b.max_deviation == doctest::Approx(1.8));
}

TEST_CASE("polar grid layout") {
  const PolarGrid g = small_grid({Vec{0.0, 0.0}, Vec{1.0, 0.0}});
  CHECK(g.size() == 48);
  CHECK(g.layer_size() == 24);
  const Configuration p = g.point(1, 2, 2);
  CHECK(min_separation(p) == doctest::Approx(2.0));
  CHECK(p(1, 0) - p(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(center_of_mass(p, kTwo)[0] == doctest::Approx(1.0));
  CHECK(g.points()[g.index(1, 2, 2)] == p);
  PolarGrid bad = g;
  bad.radii = {1.0, 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("sampled fields") {
  const PolarGrid g = small_grid();
  const KeplerField u(kTwo);
  const SampledField f = SampledField::sample(u, g);
  for (const auto& p : g.points()) CHECK(f.value(p) == u.value(p));
  // inside the annulus the linear interpolant stays within the cell's range
  const Configuration inside = two_body_configuration(kTwo, Vec{0.8 * std::cos(0.3), 0.8 * std::sin(0.3)}, Vec{0, 0});
  CHECK(f.value(inside) >= u.value(g.point(0, 0, 0)));
  CHECK(f.value(inside) <= u.value(g.point(0, 1, 0)));
  const Configuration outside = two_body_configuration(kTwo, Vec{3.0, 0.0}, Vec{0, 0});
  CHECK_THROWS_AS(f.value(outside), OutOfReach);
  const SampledField nn(g.points(), f.values(), Interpolation::nearest);
  CHECK(nn.value(outside) == f.values()[g.index(0, 2, 0)]);
  CHECK(interpolation_from_string(to_string(Interpolation::inverse_distance)) == Interpolation::inverse_distance);
  CHECK_THROWS_AS(interpolation_from_string("cubic"), InvalidInput);
}

TEST_CASE("layered kernel matches direct minimization") {
  const PolarGrid g = small_grid({Vec{0.0, 0.0}, Vec{0.5, 0.0}});
  const FixedTimeKernel layered = fixed_time_kernel(g, 1.0, coarse());
  const auto pts = g.points();
  const std::vector<Configuration> some{pts[3], pts[30], pts[40]};
  const FixedTimeKernel direct = fixed_time_kernel(some, 1.0, kTwo, coarse());
  CHECK(layered.failures.empty());
  CHECK(direct(0, 1) == doctest::Approx(layered(3, 30)).epsilon(1e-6));
  CHECK(direct(2, 1) == doctest::Approx(layered(40, 30)).epsilon(1e-6));
  CHECK(direct(1, 2) == doctest::Approx(direct(2, 1)));
}

TEST_CASE("Lax-Oleinik operator: equivariance, monotonicity, non-expansiveness") {
  const FixedTimeKernel& k = small_kernel();
  Rng rng(4);
  std::vector<double> u(k.size);
  std::vector<double> v(k.size);
  for (std::size_t i = 0; i < k.size; ++i) {
    u[i] = rng.uniform(-1.0, 1.0);
    v[i] = u[i] + rng.uniform(0.0, 0.5);
  }
  const auto tu = lax_oleinik(u, k);
  const auto tv = lax_oleinik(v, k);
  std::vector<double> uc = u;
  for (double& x : uc) x += 0.75;
  const auto tuc = lax_oleinik(uc, k);
  double sup_in = 0.0;
  double sup_out = 0.0;
  for (std::size_t i = 0; i < k.size; ++i) {
    CHECK(tuc[i] - tu[i] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(tu[i] <= tv[i]);
    sup_in = std::max(sup_in, std::abs(u[i] - v[i]));
    sup_out = std::max(sup_out, std::abs(tu[i] - tv[i]));
    // T_t u(x) <= u(x) + k(x, x), the cost of staying put
    CHECK(tu[i] <= u[i] + k(i, i));
  }
  CHECK(sup_out <= sup_in);
}

TEST_CASE("fixed-point iteration") {
  const PolarGrid g = small_grid();
  const FixedTimeKernel& k = small_kernel();
  const SampledField zero = SampledField::sample(KeplerField(kTwo), g).with_values(std::vector<double>(k.size, 0.0));
  FixedPointOptions fp;
  fp.tol = 1e-10;
  const FixedPointResult r = fixed_point_iterate(zero, k, fp);
  CHECK(r.converged);
  CHECK_FALSE(r.diverged);
  CHECK(r.field.values()[fp.base] == 0.0);
  // the renormalized image of the fixed point is itself
  const auto again = lax_oleinik(r.field.values(), k);
  for (std::size_t i = 0; i < k.size; ++i) {
    CHECK(again[i] - again[fp.base] == doctest::Approx(r.field.values()[i]).epsilon(1e-9));
  }
  // rotations of the grid permute the points; the fixed point is rotation invariant
  for (std::size_t ri = 0; ri < 3; ++ri) {
    for (std::size_t a = 1; a < 8; ++a) {
      CHECK(r.field.values()[g.index(0, ri, a)] == doctest::Approx(r.field.values()[g.index(0, ri, 0)]).epsilon(1e-6));
    }
  }
}

TEST_CASE("undominated seeds are refused") {
  const PolarGrid g = small_grid();
  const auto pts = g.points();
  SampledField u = SampledField::sample(KeplerField(kTwo), g);
  std::vector<double> steep = u.values();
  for (double& x : steep) x *= 10.0;
  u = u.with_values(steep);
  const DominationProbe probe(pts, {{0, 20}, {20, 0}}, kTwo, coarse());
  CHECK(probe(u.values()) > 1.0);
  CHECK_THROWS_AS(fixed_point_iterate(u, small_kernel(), {}, &probe), PreconditionError);
}

TEST_CASE("domination of the closed form") {
  Rng rng(5);
  std::vector<ConfigPair> pairs;
  for (int i = 0; i < 5; ++i) {
    pairs.push_back({random_configuration(rng, kTwo, 1.0, 0.3), random_configuration(rng, kTwo, 1.0, 0.3)});
  }
  MinimizeOptions o;
  o.nodes = 256;
  // |u(y) - u(x)| = c |sqrt(s_y) - sqrt(s_x)| <= c |w_y -+ w_x|
  const DominationReport d = domination_check(KeplerField(kTwo), pairs, kTwo, o);
  CHECK(d.skipped.empty());
  CHECK(d.max_violation <= 1e-3);
}

TEST_CASE("calibrated curves of the closed form") {
  const Configuration x = Configuration::from_positions({{0.1, 0.2}, {0.9, -0.1}});
  CalibrationOptions co;
  co.horizon = 2.0;
  const CalibrationReport rep = calibrated_curve(KeplerField(kTwo), x, kTwo, co);
  REQUIRE_FALSE(rep.aborted);
  CHECK(rep.defect <= 1e-4 * rep.u_range);
  CHECK(rep.com_drift < 1e-12);
  CHECK(rep.energy_residual < 1e-8);
  // separation grows like (s0^(3/2) + 3 t)^(2/3) along the escape
  const double s_end = std::pow(std::pow(min_separation(x), 1.5) + 3.0 * 2.0, 2.0 / 3.0);
  CHECK(min_separation(rep.curve.back()) == doctest::Approx(s_end).epsilon(1e-6));

  co.horizon = 0.0;
  const CalibrationReport none = calibrated_curve(KeplerField(kTwo), x, kTwo, co);
  CHECK(none.curve.degenerate());
  CHECK(none.defect == 0.0);
}

TEST_CASE("calibration aborts outside a sampled field") {
  const SampledField f = SampledField::sample(KeplerField(kTwo), small_grid());
  const Configuration x = two_body_configuration(kTwo, Vec{1.9, 0.05}, Vec{0.0, 0.0});
  CalibrationOptions co;
  co.horizon = 5.0;
  const CalibrationReport rep = calibrated_curve(f, x, kTwo, co);
  CHECK(rep.aborted);
  CHECK(rep.time_reached < 5.0);
  CHECK_FALSE(rep.message.empty());
}

TEST_CASE("drift inequality table") {
  const Vec v{0.6, 0.8};
  const std::vector<double> ts{0.01, 0.1, 1.0, 10.0, 100.0};
  const LemmaTable t = lemma_inequality_probe(v, ts, 2.0, kTwo);
  CHECK(t.crossing == doctest::Approx(4.0 * 4.0 / (4.0 * 1.0)));
  for (const auto& row : t.rows) {
    CHECK(row.lhs == doctest::Approx(0.5 * row.t * 2.0));
    CHECK(row.rhs == doctest::Approx(std::sqrt(row.t) * 2.0));
    CHECK((row.lhs > row.rhs) == (row.t > t.crossing));
  }
  CHECK(std::isinf(lemma_inequality_probe(Vec{0.0, 0.0}, ts, 2.0, kTwo).crossing));
}

}  // TEST_SUITE
