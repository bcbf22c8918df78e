#include "nbwk/curve.hpp"

#include <algorithm>
#include <cmath>

#include "nbwk/errors.hpp"

namespace nbwk {

Curve::Curve(double t0, double dt, std::vector<Configuration> nodes)
    : t0_(t0), dt_(dt), nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw InvalidInput("curve: need at least two nodes");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidInput("curve: time step must be positive");
  for (const auto& x : nodes_) {
    if (!x.same_shape(nodes_.front())) throw InvalidInput("curve: nodes differ in shape");
  }
}

Curve Curve::point(const Configuration& x, double t0) {
  Curve c(t0, 1.0, {x, x});
  c.dt_ = 0.0;
  return c;
}

Curve Curve::segment(const Configuration& x, const Configuration& y, double duration,
                     std::size_t segments, double t0) {
  if (segments < 1) throw InvalidInput("curve: need at least one segment");
  if (!x.same_shape(y)) throw InvalidInput("curve: endpoint shapes differ");
  std::vector<Configuration> nodes;
  nodes.reserve(segments + 1);
  for (std::size_t j = 0; j <= segments; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(segments);
    nodes.push_back(x * (1.0 - s) + y * s);
  }
  nodes.back() = y;
  return {t0, duration / static_cast<double>(segments), std::move(nodes)};
}

Configuration Curve::at(double t) const {
  if (degenerate()) return nodes_.front();
  const double u = std::clamp((t - t0_) / dt_, 0.0, static_cast<double>(segments()));
  const auto j = std::min(static_cast<std::size_t>(std::floor(u)), segments() - 1);
  const double s = u - static_cast<double>(j);
  if (s == 0.0) return nodes_[j];
  if (s == 1.0) return nodes_[j + 1];
  return nodes_[j] * (1.0 - s) + nodes_[j + 1] * s;
}

Curve Curve::translated(std::span<const double> r) const {
  Curve out = *this;
  for (auto& x : out.nodes_) x = translate(x, r);
  return out;
}

}  // namespace nbwk
