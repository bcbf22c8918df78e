#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbwk/errors.hpp"
#include "nbwk/phi_cache.hpp"

using namespace nbwk;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "nbwk_unit";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_SUITE("phi_cache") {

TEST_CASE("keys quantize endpoints and carry the discretization") {
  const MassSystem sys({1.0, 1.0}, 2);
  const Configuration x = Configuration::from_positions({{0, 0}, {1, 0}});
  Configuration y = Configuration::from_positions({{0, 1}, {1, 1}});
  MinimizeOptions opts;
  const std::string k = PhiCache::make_key(x, y, sys, opts);
  Configuration y_close = y;
  y_close(0, 0) += 1e-12;
  CHECK(PhiCache::make_key(x, y_close, sys, opts) == k);
  y_close(0, 0) += 1e-7;
  CHECK(PhiCache::make_key(x, y_close, sys, opts) != k);
  CHECK(PhiCache::make_key(y, x, sys, opts) != k);
  MinimizeOptions finer = opts;
  finer.nodes = 128;
  CHECK(PhiCache::make_key(x, y, sys, finer) != k);
  MinimizeOptions trap = opts;
  trap.quadrature = Quadrature::trapezoid;
  CHECK(PhiCache::make_key(x, y, sys, trap) != k);
  CHECK(PhiCache::make_key(x, y, MassSystem({1.0, 2.0}, 2), opts) != k);
}

TEST_CASE("merge keeps the smaller upper bound in any order") {
  PhiCache a;
  PhiCache b;
  const PhiRecord hi{"k", 2.0, 1.0, 64, 1e-6};
  const PhiRecord lo{"k", 1.5, 1.2, 64, 1e-6};
  CHECK(a.merge(hi));
  CHECK(a.merge(lo));
  CHECK_FALSE(a.merge(hi));
  CHECK(b.merge(lo));
  CHECK_FALSE(b.merge(hi));
  CHECK(a.lookup("k")->value == 1.5);
  CHECK(b.lookup("k")->value == 1.5);
  CHECK(a.lookup("k")->t_star == 1.2);
  CHECK_FALSE(a.lookup("other").has_value());
}

TEST_CASE("save and load round trip exactly") {
  PhiCache a;
  a.merge({"x", 0.1 + 0.2, 1.0 / 3.0, 64, 1e-6});
  a.merge({"y", 1e-300, 7.0, 32, 1e-8});
  std::stringstream ss;
  a.save(ss);
  PhiCache b;
  b.load(ss);
  CHECK(b.size() == 2);
  CHECK(b.lookup("x")->value == 0.1 + 0.2);
  CHECK(b.lookup("x")->t_star == 1.0 / 3.0);
  CHECK(b.lookup("y")->n == 32);
}

TEST_CASE("file-backed cache appends and reloads") {
  const auto path = scratch("cache.jsonl");
  {
    PhiCache c(path);
    c.merge({"a", 3.0, 1.0, 64, 1e-6});
    c.flush();
    c.merge({"a", 2.0, 1.0, 64, 1e-6});
    c.merge({"b", 5.0, 1.0, 64, 1e-6});
    c.flush();
  }
  PhiCache d(path);
  CHECK(d.size() == 2);
  CHECK(d.lookup("a")->value == 2.0);
}

TEST_CASE("malformed lines are rejected") {
  std::stringstream ss("{\"key\": \"a\", \"value\": 1}\nnot json\n");
  PhiCache c;
  CHECK_THROWS_AS(c.load(ss), InvalidInput);
}

}  // TEST_SUITE
