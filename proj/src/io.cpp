#include "nbwk/io.hpp"

#include <fstream>
#include <sstream>

#include "nbwk/errors.hpp"

namespace nbwk::io {

namespace {

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json positions_to_json(const Configuration& x) { return x.positions(); }

json to_json(const MassSystem& sys, const Configuration& x) {
  sys.check(x);
  return {{"masses", std::vector<double>(sys.masses().begin(), sys.masses().end())},
          {"dim", sys.dim()},
          {"alpha", sys.alpha()},
          {"positions", positions_to_json(x)}};
}

MassSystem system_from_json(const json& j) {
  return MassSystem(field<std::vector<double>>(j, "masses"), field<std::size_t>(j, "dim"),
                    j.value("alpha", -1.0));
}

Configuration positions_from_json(const json& j, const MassSystem& sys) {
  std::vector<std::vector<double>> pos;
  try {
    pos = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("positions: ") + e.what());
  }
  if (pos.size() != sys.bodies()) throw InvalidInput("positions: one entry per body required");
  for (const auto& p : pos) {
    if (p.size() != sys.dim()) throw InvalidInput("positions: wrong dimension");
  }
  Configuration x = Configuration::from_positions(pos);
  sys.check(x);
  return x;
}

Problem parse_problem(const json& j) {
  MassSystem sys = system_from_json(j);
  Configuration x = positions_from_json(j.at("positions"), sys);
  return {std::move(sys), std::move(x), j};
}

Problem read_problem(const std::filesystem::path& path) { return parse_problem(read_json(path)); }

json to_json(const PolarGrid& grid) {
  return {{"masses", grid.masses},  {"alpha", grid.alpha},   {"radii", grid.radii},
          {"angles", grid.angles},  {"shifts", grid.shifts}};
}

PolarGrid grid_from_json(const json& j) {
  PolarGrid g;
  g.masses = field<std::vector<double>>(j, "masses");
  g.alpha = j.value("alpha", -1.0);
  g.angles = field<std::size_t>(j, "angles");
  if (j.contains("radii")) {
    g.radii = field<std::vector<double>>(j, "radii");
  } else {
    g = PolarGrid::geometric(g.masses, field<double>(j, "r_min"), field<double>(j, "r_max"),
                             field<std::size_t>(j, "n_radii"), g.angles);
    g.alpha = j.value("alpha", -1.0);
  }
  if (j.contains("shifts")) g.shifts = field<std::vector<Vec>>(j, "shifts");
  g.validate();
  return g;
}

json to_json(const SampledField& f) {
  json pts = json::array();
  for (const auto& p : f.points()) pts.push_back(p.positions());
  return {{"grid", f.grid() ? to_json(*f.grid()) : json(nullptr)},
          {"points", pts},
          {"values", f.values()},
          {"interpolation", to_string(f.rule())}};
}

SampledField field_from_json(const json& j) {
  std::optional<PolarGrid> grid;
  if (j.contains("grid") && !j.at("grid").is_null()) grid = grid_from_json(j.at("grid"));
  std::vector<Configuration> pts;
  for (const auto& p : j.at("points")) {
    pts.push_back(Configuration::from_positions(p.get<std::vector<std::vector<double>>>()));
  }
  return {std::move(pts), field<std::vector<double>>(j, "values"),
          interpolation_from_string(j.value("interpolation", std::string("nearest"))),
          std::move(grid)};
}

json to_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass},
          {"statement", c.statement}};
}

bool Report::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

json Report::to_json() const {
  json j = {{"command", command}, {"seed", seed}, {"pass", all_pass()}};
  json cs = json::array();
  for (const auto& c : checks) cs.push_back(io::to_json(c));
  j["checks"] = cs;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace nbwk::io
