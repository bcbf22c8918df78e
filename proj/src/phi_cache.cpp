#include "nbwk/phi_cache.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "nbwk/errors.hpp"

namespace nbwk {

namespace {

void append_quantized(std::ostringstream& os, const Configuration& x) {
  for (double v : x.coords()) os << ',' << std::llround(v * 1e9);
}

nlohmann::json to_json(const PhiRecord& r) {
  return {{"key", r.key}, {"value", r.value}, {"t_star", r.t_star}, {"n", r.n}, {"tol", r.tol}};
}

}  // namespace

PhiCache::PhiCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (in) load(in);
}

std::string PhiCache::make_key(const Configuration& x, const Configuration& y,
                               const MassSystem& sys, const MinimizeOptions& opts) {
  std::ostringstream os;
  os << sys.fingerprint() << ";n=" << opts.nodes
     << ";q=" << (opts.quadrature == Quadrature::midpoint ? "mid" : "trap") << ";x";
  append_quantized(os, x);
  os << ";y";
  append_quantized(os, y);
  return os.str();
}

std::optional<PhiRecord> PhiCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool PhiCache::merge(const PhiRecord& rec) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = entries_.try_emplace(rec.key, rec);
  if (!inserted) {
    if (!(rec.value < it->second.value)) return false;
    it->second = rec;
  }
  if (!path_.empty()) pending_.push_back(rec);
  return true;
}

std::size_t PhiCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void PhiCache::load(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::unique_lock lock(mu_);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PhiRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.key = j.at("key").get<std::string>();
      r.value = j.at("value").get<double>();
      r.t_star = j.value("t_star", 0.0);
      r.n = j.value("n", std::size_t{0});
      r.tol = j.value("tol", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("phi cache line " + std::to_string(lineno) + ": " + e.what());
    }
    auto [it, inserted] = entries_.try_emplace(r.key, r);
    if (!inserted && r.value < it->second.value) it->second = r;
  }
}

void PhiCache::save(std::ostream& os) const {
  std::shared_lock lock(mu_);
  for (const auto& [key, rec] : entries_) os << to_json(rec).dump() << '\n';
}

void PhiCache::flush() {
  std::unique_lock lock(mu_);
  if (path_.empty() || pending_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot open phi cache " + path_.string());
  for (const auto& r : pending_) out << to_json(r).dump() << '\n';
  pending_.clear();
}

}  // namespace nbwk
