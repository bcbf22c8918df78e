#pragma once

// Persistent store of free-time potential values keyed by quantized endpoints.
// Values are upper bounds, so merging two records for one key keeps the
// smaller value regardless of arrival order.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "nbwk/config_space.hpp"
#include "nbwk/minimize.hpp"

namespace nbwk {

struct PhiRecord {
  std::string key;
  double value = 0.0;
  double t_star = 0.0;
  std::size_t n = 0;
  double tol = 0.0;
};

class PhiCache {
 public:
  PhiCache() = default;
  /// Backed by a JSON-lines file; existing records are loaded.
  explicit PhiCache(std::filesystem::path path);

  PhiCache(const PhiCache&) = delete;
  PhiCache& operator=(const PhiCache&) = delete;

  /// Endpoint coordinates rounded to 1e-9, plus the system and discretization identity.
  static std::string make_key(const Configuration& x, const Configuration& y,
                              const MassSystem& sys, const MinimizeOptions& opts);

  std::optional<PhiRecord> lookup(const std::string& key) const;
  /// Keeps the smaller value; returns true when the stored record changed.
  bool merge(const PhiRecord& rec);
  std::size_t size() const;

  void load(std::istream& is);
  /// Full dump, one JSON object per line, sorted by key.
  void save(std::ostream& os) const;
  /// Appends records merged since the last flush to the backing file.
  void flush();

  const std::filesystem::path& path() const { return path_; }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, PhiRecord> entries_;
  std::vector<PhiRecord> pending_;
  std::filesystem::path path_;
};

}  // namespace nbwk
