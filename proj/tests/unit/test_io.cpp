#include <doctest.h>

#include "nbwk/errors.hpp"
#include "nbwk/io.hpp"

using namespace nbwk;
using io::json;

TEST_SUITE("io") {

TEST_CASE("problem documents") {
  const json j = json::parse(R"({"masses": [1, 2], "dim": 2, "alpha": -0.5,
                                 "positions": [[0, 0], [1, 0.5]], "extra": 3})");
  const io::Problem p = io::parse_problem(j);
  CHECK(p.sys.bodies() == 2);
  CHECK(p.sys.alpha() == -0.5);
  CHECK(p.x(1, 1) == 0.5);
  CHECK(p.raw.at("extra") == 3);
  const io::Problem q = io::parse_problem(io::to_json(p.sys, p.x));
  CHECK(q.sys == p.sys);
  CHECK(q.x == p.x);
  CHECK(io::system_from_json(json::parse(R"({"masses": [1, 1], "dim": 3})")).alpha() == -1.0);
}

TEST_CASE("malformed problems are usage errors") {
  CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"dim": 2, "positions": [[0, 0], [1, 0]]})")), InvalidInput);
  CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"masses": [1, 1], "dim": 2, "positions": [[0, 0]]})")),
                  InvalidInput);
  CHECK_THROWS_AS(io::parse_problem(json::parse(R"({"masses": [1, 1], "dim": 2, "positions": [[0], [1]]})")),
                  InvalidInput);
  CHECK_THROWS_AS(io::read_problem("/nonexistent/problem.json"), InvalidInput);
}

TEST_CASE("grid and field documents round trip") {
  const PolarGrid g = io::grid_from_json(json::parse(
      R"({"masses": [1, 1], "r_min": 0.5, "r_max": 2, "n_radii": 4, "angles": 6, "shifts": [[0, 0], [1, 0]]})"));
  CHECK(g.radii.size() == 4);
  CHECK(g.radii.back() == 2.0);
  CHECK(g.shifts.size() == 2);
  const PolarGrid h = io::grid_from_json(io::to_json(g));
  CHECK(h.radii == g.radii);
  CHECK(h.angles == g.angles);

  const SampledField f = SampledField::sample(KeplerField(g.system()), g);
  const SampledField back = io::field_from_json(io::to_json(f));
  CHECK(back.values() == f.values());
  CHECK(back.rule() == f.rule());
  CHECK(back.grid().has_value());
  CHECK(back.value(g.point(1, 2, 3)) == f.value(g.point(1, 2, 3)));
}

TEST_CASE("reports") {
  io::Report r;
  r.command = "verify";
  r.seed = 9;
  r.checks.push_back({"a", 0.1 + 0.2, 1.0, true, "first"});
  CHECK(r.all_pass());
  json j = r.to_json();
  CHECK(j.at("pass") == true);
  CHECK(j.at("checks")[0].at("value").get<double>() == 0.1 + 0.2);
  r.checks.push_back({"b", 2.0, 1.0, false, "second"});
  CHECK_FALSE(r.all_pass());
  CHECK(r.to_json().at("pass") == false);
}

}  // TEST_SUITE
