#pragma once

#include <cstddef>
#include <vector>

#include "nbwk/config_space.hpp"

namespace nbwk {

/// A discretized absolutely continuous path: nodes on a uniform time grid
/// t0, t0 + dt, ..., t0 + n dt, joined piecewise linearly.
class Curve {
 public:
  Curve(double t0, double dt, std::vector<Configuration> nodes);

  /// Zero-duration curve sitting at x (two identical nodes, dt = 0).
  static Curve point(const Configuration& x, double t0 = 0.0);
  /// Straight segment from x to y over [t0, t0 + duration] with `segments` pieces.
  static Curve segment(const Configuration& x, const Configuration& y, double duration,
                       std::size_t segments, double t0 = 0.0);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t segments() const { return nodes_.size() - 1; }
  double duration() const { return dt_ * static_cast<double>(segments()); }
  double time(std::size_t j) const { return t0_ + dt_ * static_cast<double>(j); }
  bool degenerate() const { return dt_ == 0.0; }

  const std::vector<Configuration>& nodes() const { return nodes_; }
  std::vector<Configuration>& nodes() { return nodes_; }
  const Configuration& node(std::size_t j) const { return nodes_[j]; }
  const Configuration& front() const { return nodes_.front(); }
  const Configuration& back() const { return nodes_.back(); }

  /// Piecewise-linear position at time t (clamped to the curve's interval).
  Configuration at(double t) const;

  /// Same curve translated rigidly by delta(r).
  Curve translated(std::span<const double> r) const;

 private:
  double t0_;
  double dt_;
  std::vector<Configuration> nodes_;
};

}  // namespace nbwk
