#include "nbwk/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nbwk/errors.hpp"

namespace nbwk {

Configuration::Configuration(std::size_t bodies, std::size_t dim)
    : bodies_(bodies), dim_(dim), coords_(bodies * dim, 0.0) {}

Configuration::Configuration(std::size_t bodies, std::size_t dim, std::vector<double> coords)
    : bodies_(bodies), dim_(dim), coords_(std::move(coords)) {
  if (coords_.size() != bodies_ * dim_) {
    throw InvalidInput("configuration: expected " + std::to_string(bodies_ * dim_) +
                       " coordinates, got " + std::to_string(coords_.size()));
  }
}

Configuration Configuration::from_positions(const std::vector<std::vector<double>>& positions) {
  if (positions.empty()) throw InvalidInput("configuration: no positions");
  const std::size_t k = positions.front().size();
  std::vector<double> flat;
  flat.reserve(positions.size() * k);
  for (const auto& r : positions) {
    if (r.size() != k) throw InvalidInput("configuration: ragged position list");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return {positions.size(), k, std::move(flat)};
}

std::vector<std::vector<double>> Configuration::positions() const {
  std::vector<std::vector<double>> out(bodies_);
  for (std::size_t i = 0; i < bodies_; ++i) out[i].assign(body(i).begin(), body(i).end());
  return out;
}

bool Configuration::all_finite() const {
  return std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); });
}

Configuration& Configuration::operator+=(const Configuration& rhs) {
  if (!same_shape(rhs)) throw InvalidInput("configuration: shape mismatch in +");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += rhs.coords_[i];
  return *this;
}

Configuration& Configuration::operator-=(const Configuration& rhs) {
  if (!same_shape(rhs)) throw InvalidInput("configuration: shape mismatch in -");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= rhs.coords_[i];
  return *this;
}

Configuration& Configuration::operator*=(double s) {
  for (double& v : coords_) v *= s;
  return *this;
}

MassSystem::MassSystem(std::vector<double> masses, std::size_t dim, double alpha)
    : masses_(std::move(masses)), dim_(dim), alpha_(alpha), total_mass_(0.0) {
  if (masses_.size() < 2) throw InvalidInput("mass system: need at least two bodies");
  for (double m : masses_) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("mass system: masses must be positive");
    total_mass_ += m;
  }
  if (dim_ < 1) throw InvalidInput("mass system: dimension must be at least 1");
  if (!(alpha_ > -2.0 && alpha_ < 0.0)) {
    throw InvalidInput("mass system: alpha must lie strictly inside (-2, 0)");
  }
}

void MassSystem::check(const Configuration& x) const {
  if (x.bodies() != bodies() || x.dim() != dim_) {
    throw InvalidInput("configuration shape (" + std::to_string(x.bodies()) + "x" +
                       std::to_string(x.dim()) + ") does not match mass system (" +
                       std::to_string(bodies()) + "x" + std::to_string(dim_) + ")");
  }
  if (!x.all_finite()) throw InvalidInput("configuration has non-finite entries");
}

std::string MassSystem::fingerprint() const {
  std::string out = "k=" + std::to_string(dim_);
  char buf[64];
  std::snprintf(buf, sizeof buf, ";a=%.17g;m=", alpha_);
  out += buf;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", masses_[i]);
    out += buf;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double euclidean_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double mass_dot(const Configuration& x, const Configuration& y, const MassSystem& sys) {
  sys.check(x);
  sys.check(y);
  double s = 0.0;
  for (std::size_t i = 0; i < sys.bodies(); ++i) s += sys.mass(i) * dot(x.body(i), y.body(i));
  return s;
}

double mass_norm(const Configuration& x, const MassSystem& sys) {
  return std::sqrt(mass_dot(x, x, sys));
}

double dual_norm(const Covector& p, const MassSystem& sys) {
  sys.check(p);
  double s = 0.0;
  for (std::size_t i = 0; i < sys.bodies(); ++i) s += dot(p.body(i), p.body(i)) / sys.mass(i);
  return std::sqrt(s);
}

double pairing(const Covector& p, const Configuration& v) {
  if (!p.same_shape(v)) throw InvalidInput("pairing: shape mismatch");
  return dot(p.coords(), v.coords());
}

double max_norm(const Configuration& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.bodies(); ++i) m = std::max(m, euclidean_norm(x.body(i)));
  return m;
}

Vec center_of_mass(const Configuration& x, const MassSystem& sys) {
  sys.check(x);
  Vec g(sys.dim(), 0.0);
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (std::size_t a = 0; a < sys.dim(); ++a) g[a] += sys.mass(i) * x(i, a);
  }
  for (double& v : g) v /= sys.total_mass();
  return g;
}

Configuration diagonal_lift(std::span<const double> r, const MassSystem& sys) {
  if (r.size() != sys.dim()) throw InvalidInput("diagonal_lift: vector dimension mismatch");
  Configuration d(sys.bodies(), sys.dim());
  for (std::size_t i = 0; i < sys.bodies(); ++i) std::copy(r.begin(), r.end(), d.body(i).begin());
  return d;
}

Split split(const Configuration& x, const MassSystem& sys) {
  Vec g = center_of_mass(x, sys);
  Configuration centered = x - diagonal_lift(g, sys);
  return {std::move(centered), std::move(g)};
}

Configuration translate(const Configuration& x, std::span<const double> r) {
  if (r.size() != x.dim()) throw InvalidInput("translate: vector dimension mismatch");
  Configuration y = x;
  for (std::size_t i = 0; i < y.bodies(); ++i) {
    for (std::size_t a = 0; a < y.dim(); ++a) y(i, a) += r[a];
  }
  return y;
}

namespace {

template <class Reduce>
double pairwise_distance(const Configuration& x, double init, Reduce reduce) {
  double out = init;
  for (std::size_t i = 0; i < x.bodies(); ++i) {
    for (std::size_t j = i + 1; j < x.bodies(); ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < x.dim(); ++a) {
        const double d = x(i, a) - x(j, a);
        d2 += d * d;
      }
      out = reduce(out, std::sqrt(d2));
    }
  }
  return out;
}

}  // namespace

double min_separation(const Configuration& x) {
  if (x.bodies() < 2) return std::numeric_limits<double>::infinity();
  return pairwise_distance(x, std::numeric_limits<double>::infinity(),
                           [](double a, double b) { return std::min(a, b); });
}

double diameter(const Configuration& x) {
  return pairwise_distance(x, 0.0, [](double a, double b) { return std::max(a, b); });
}

}  // namespace nbwk
