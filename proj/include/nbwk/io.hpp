#pragma once

// JSON documents: problem files, sampled-field files and check reports.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbwk/config_space.hpp"
#include "nbwk/curve.hpp"
#include "nbwk/weak_kam.hpp"

namespace nbwk::io {

using json = nlohmann::json;

/// {"masses": [...], "dim": k, "alpha": a, "positions": [[...], ...]}
json to_json(const MassSystem& sys, const Configuration& x);
MassSystem system_from_json(const json& j);
Configuration positions_from_json(const json& j, const MassSystem& sys);
json positions_to_json(const Configuration& x);

/// Problem file: the configuration document plus optional subcommand parameters.
struct Problem {
  MassSystem sys;
  Configuration x;
  json raw;
};
Problem read_problem(const std::filesystem::path& path);
Problem parse_problem(const json& j);

json to_json(const PolarGrid& grid);
PolarGrid grid_from_json(const json& j);

/// {"grid": {...} | null, "points": [...], "values": [...], "interpolation": "..."}
json to_json(const SampledField& field);
SampledField field_from_json(const json& j);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string statement;   // the property the check measures
};
json to_json(const Check& c);

/// Named checks plus free-form extras; numbers round-trip (17 significant digits).
struct Report {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  json extra = json::object();

  bool all_pass() const;
  json to_json() const;
};

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nbwk::io
