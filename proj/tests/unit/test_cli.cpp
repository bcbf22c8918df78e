#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nbwk/cli.hpp"

using namespace nbwk;
using io::json;

namespace {

struct Workspace {
  std::filesystem::path dir;

  explicit Workspace(const std::string& name)
      : dir(std::filesystem::temp_directory_path() / "nbwk_cli" / name) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }

  cli::RunSpec spec(const std::string& command, const json& problem) const {
    io::write_json(dir / "problem.json", problem);
    cli::RunSpec s;
    s.command = command;
    s.problem = dir / "problem.json";
    s.out = dir / "out";
    s.cache = dir / "out" / "phi_cache.jsonl";
    return s;
  }

  json report(const std::string& command) const { return io::read_json(dir / "out" / (command + "_report.json")); }
};

json two_body() { return json::parse(R"({"masses": [1, 1], "dim": 2, "alpha": -1, "positions": [[0, 0], [1, 0]]})"); }

int run(const cli::RunSpec& s) {
  std::ostringstream log;
  std::ostringstream err;
  return cli::execute(s, log, err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("kepler writes a passing report") {
  Workspace w("kepler");
  json p = two_body();
  p["samples"] = 100;
  CHECK(run(w.spec("kepler", p)) == cli::kPass);
  const json r = w.report("kepler");
  CHECK(r.at("pass") == true);
  CHECK(r.at("constant").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("phi writes the curve, the report and the cache") {
  Workspace w("phi");
  json p = two_body();
  p["positions"] = json::parse("[[-0.5, 0], [0.5, 0]]");
  p["target"] = json::parse("[[-2, 0], [2, 0]]");
  const auto s = w.spec("phi", p);
  CHECK(run(s) == cli::kPass);
  CHECK(w.report("phi").at("phi").get<double>() == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(std::filesystem::exists(w.dir / "out" / "phi_curve.csv"));
  CHECK(std::filesystem::exists(s.cache));
  // a second run is served from the cache and agrees bit for bit
  const double first = w.report("phi").at("phi").get<double>();
  CHECK(run(s) == cli::kPass);
  CHECK(w.report("phi").at("phi").get<double>() == first);
}

TEST_CASE("non-convergence exits with 2") {
  Workspace w("phi_fail");
  json p = two_body();
  p["target"] = json::parse("[[0, 0], [3, 1]]");
  auto s = w.spec("phi", p);
  s.opts.tol = 1e-300;
  s.opts.max_iter = 5;
  CHECK(run(s) == cli::kNonConvergence);
  CHECK(w.report("phi").at("pass") == false);
}

TEST_CASE("usage and input errors exit with 1") {
  Workspace w("usage");
  CHECK(run(w.spec("phi", two_body())) == cli::kUsage);  // no target
  CHECK(run(w.spec("nonsense", two_body())) == cli::kUsage);
  json p = two_body();
  p["suite"] = "unknown";
  CHECK(run(w.spec("verify", p)) == cli::kUsage);
  auto s = w.spec("kepler", two_body());
  s.problem = w.dir / "missing.json";
  CHECK(run(s) == cli::kUsage);
  json bad = two_body();
  bad["masses"] = json::array({1, -1});
  CHECK(run(w.spec("kepler", bad)) == cli::kUsage);
}

TEST_CASE("calibrate: success, empty horizon and abort") {
  Workspace w("calibrate");
  json p = two_body();
  p["horizon"] = 1.0;
  CHECK(run(w.spec("calibrate", p)) == cli::kPass);
  CHECK(w.report("calibrate").at("pass") == true);

  p["horizon"] = 0.0;
  CHECK(run(w.spec("calibrate", p)) == cli::kPass);

  const PolarGrid g = PolarGrid::geometric({1.0, 1.0}, 0.5, 2.0, 3, 8);
  io::write_json(w.dir / "field.json", io::to_json(SampledField::sample(KeplerField(g.system()), g)));
  p["field"] = {{"kind", "file"}, {"path", (w.dir / "field.json").string()}};
  p["positions"] = json::parse("[[-0.9, 0], [0.9, 0.1]]");
  p["horizon"] = 5.0;
  CHECK(run(w.spec("calibrate", p)) == cli::kCalibrationAbort);
}

TEST_CASE("verify suites write their checks") {
  Workspace w("verify");
  json p = two_body();
  for (const char* suite : {"invariance", "corollary", "lemma"}) {
    p["suite"] = suite;
    p["eta_hat"] = 2.0;
    CHECK(run(w.spec("verify", p)) == cli::kPass);
    const json r = w.report("verify");
    CHECK(r.at("suite") == suite);
    CHECK(r.at("checks").size() >= 2);
  }
  CHECK(w.report("verify").contains("crossing"));
  p["suite"] = "corollary";
  run(w.spec("verify", p));
  CHECK(w.report("verify").at("winner") == "half_r2_over_M");
}

TEST_CASE("table marks the audit") {
  Workspace w("table");
  json p = two_body();
  p["configurations"] = json::parse("[[[0, 0], [1, 0]], [[0, 0], [2, 0]], [[0, 0], [0, 3]]]");
  CHECK(run(w.spec("table", p)) == cli::kPass);
  std::ifstream in(w.dir / "out" / "table.csv");
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(all.find("# triangle_violations=0") != std::string::npos);
}

TEST_CASE("wkam fixed point on a small grid") {
  Workspace w("wkam");
  json p = two_body();
  p["grid"] = json::parse(R"({"masses": [1, 1], "r_min": 0.5, "r_max": 2, "n_radii": 3, "angles": 8,
                              "shifts": [[0, 0], [0.5, 0]]})");
  p["wkam"] = json::parse(R"({"mode": "fixed-point", "t": 1, "probe_pairs": 10})");
  auto s = w.spec("wkam", p);
  s.opts.nodes = 32;
  CHECK(run(s) == cli::kPass);
  CHECK(std::filesystem::exists(w.dir / "out" / "wkam_field.json"));
  CHECK(std::filesystem::exists(w.dir / "out" / "wkam_history.csv"));
  const SampledField f = io::field_from_json(io::read_json(w.dir / "out" / "wkam_field.json"));
  CHECK(f.values().size() == 48);

  p["wkam"]["mode"] = "sideways";
  CHECK(run(w.spec("wkam", p)) == cli::kUsage);
}

}  // TEST_SUITE
