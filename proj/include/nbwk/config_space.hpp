#pragma once

// Configuration space E^N of N point masses in R^k, with the mass inner
// product, the center of mass and the orthogonal splitting into centered
// configurations plus the diagonal of rigid translations.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nbwk {

/// N positions in R^k stored body-major. Also used for velocities and, with
/// the per-body Euclidean pairing, for momenta (covectors).
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t bodies, std::size_t dim);
  Configuration(std::size_t bodies, std::size_t dim, std::vector<double> coords);

  static Configuration from_positions(const std::vector<std::vector<double>>& positions);
  std::vector<std::vector<double>> positions() const;

  std::size_t bodies() const { return bodies_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return coords_.size(); }

  std::span<double> body(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  std::span<const double> body(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double& operator()(std::size_t i, std::size_t a) { return coords_[i * dim_ + a]; }
  double operator()(std::size_t i, std::size_t a) const { return coords_[i * dim_ + a]; }

  std::span<double> coords() { return coords_; }
  std::span<const double> coords() const { return coords_; }

  bool all_finite() const;
  bool same_shape(const Configuration& other) const {
    return bodies_ == other.bodies_ && dim_ == other.dim_;
  }

  Configuration& operator+=(const Configuration& rhs);
  Configuration& operator-=(const Configuration& rhs);
  Configuration& operator*=(double s);

  friend Configuration operator+(Configuration lhs, const Configuration& rhs) { return lhs += rhs; }
  friend Configuration operator-(Configuration lhs, const Configuration& rhs) { return lhs -= rhs; }
  friend Configuration operator*(Configuration lhs, double s) { return lhs *= s; }
  friend Configuration operator*(double s, Configuration rhs) { return rhs *= s; }
  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::size_t bodies_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

using Covector = Configuration;
using Vec = std::vector<double>;

/// Masses, ambient dimension and homogeneity degree alpha of the potential
/// U = sum m_i m_j |r_i - r_j|^alpha, alpha in (-2, 0); alpha = -1 is Newtonian.
class MassSystem {
 public:
  MassSystem(std::vector<double> masses, std::size_t dim, double alpha = -1.0);

  std::span<const double> masses() const { return masses_; }
  double mass(std::size_t i) const { return masses_[i]; }
  std::size_t bodies() const { return masses_.size(); }
  std::size_t dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double total_mass() const { return total_mass_; }
  bool newtonian() const { return alpha_ == -1.0; }

  /// Throws InvalidInput unless x has N bodies of dimension k with finite entries.
  void check(const Configuration& x) const;
  Configuration zero() const { return Configuration(bodies(), dim_); }

  /// Stable textual identity of the system, used in cache keys.
  std::string fingerprint() const;

  friend bool operator==(const MassSystem&, const MassSystem&) = default;

 private:
  std::vector<double> masses_;
  std::size_t dim_;
  double alpha_;
  double total_mass_;
};

double mass_dot(const Configuration& x, const Configuration& y, const MassSystem& sys);
double mass_norm(const Configuration& x, const MassSystem& sys);

/// Operator norm of a covector for the mass inner product: sqrt(sum |p_i|^2 / m_i).
double dual_norm(const Covector& p, const MassSystem& sys);

/// Plain pairing p(v) = sum <p_i, v_i>.
double pairing(const Covector& p, const Configuration& v);

/// max_i |r_i|, the norm used for the Hoelder and Lipschitz bounds.
double max_norm(const Configuration& x);

Vec center_of_mass(const Configuration& x, const MassSystem& sys);
Configuration diagonal_lift(std::span<const double> r, const MassSystem& sys);

struct Split {
  Configuration centered;
  Vec com;
};
Split split(const Configuration& x, const MassSystem& sys);

Configuration translate(const Configuration& x, std::span<const double> r);

/// min over i<j of |r_i - r_j|; zero exactly on collisions.
double min_separation(const Configuration& x);

/// max over i<j of |r_i - r_j|.
double diameter(const Configuration& x);

double euclidean_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace nbwk
