#include "nbwk/action.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"

namespace nbwk {

namespace detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double flat_potential(const MassSystem& sys, const double* x, double* grad_accum, double scale) {
  const std::size_t n = sys.bodies();
  const std::size_t k = sys.dim();
  const double alpha = sys.alpha();
  const bool newton = sys.newtonian();
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double d = x[i * k + a] - x[j * k + a];
        d2 += d * d;
      }
      if (d2 == 0.0) return kInf;
      const double mm = sys.mass(i) * sys.mass(j);
      const double p = newton ? 1.0 / std::sqrt(d2) : std::pow(d2, 0.5 * alpha);
      u += mm * p;
      if (grad_accum != nullptr) {
        const double coef = scale * alpha * mm * p / d2;
        for (std::size_t a = 0; a < k; ++a) {
          const double f = coef * (x[i * k + a] - x[j * k + a]);
          grad_accum[i * k + a] += f;
          grad_accum[j * k + a] -= f;
        }
      }
    }
  }
  return u;
}

namespace {

bool has_collision(const MassSystem& sys, const double* x) {
  const std::size_t k = sys.dim();
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (std::size_t j = i + 1; j < sys.bodies(); ++j) {
      bool same = true;
      for (std::size_t a = 0; a < k && same; ++a) same = x[i * k + a] == x[j * k + a];
      if (same) return true;
    }
  }
  return false;
}

// Potential part of a segment leaving the collision node e for node o along
// e + (o - e) s^p, p = 2 / (2 - alpha). Pairs collided at e are integrated
// exactly, the others sampled at s = 1/2.
double singular_segment_potential(const MassSystem& sys, const double* e, const double* o,
                                  double dt, double* grad_e, double* grad_o) {
  const std::size_t k = sys.dim();
  const double alpha = sys.alpha();
  const double p = 2.0 / (2.0 - alpha);
  const double w = std::pow(0.5, p);
  std::vector<double> rel(k);
  double u = 0.0;
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (std::size_t j = i + 1; j < sys.bodies(); ++j) {
      bool collided = true;
      for (std::size_t a = 0; a < k && collided; ++a) collided = e[i * k + a] == e[j * k + a];
      double factor = 1.0;
      double wo = 1.0;
      if (collided) {
        for (std::size_t a = 0; a < k; ++a) rel[a] = (o[i * k + a] - o[j * k + a]);
        factor = 1.0 / (1.0 + p * alpha);
      } else {
        for (std::size_t a = 0; a < k; ++a) {
          const double zi = e[i * k + a] + w * (o[i * k + a] - e[i * k + a]);
          const double zj = e[j * k + a] + w * (o[j * k + a] - e[j * k + a]);
          rel[a] = zi - zj;
        }
        wo = w;
      }
      double d2 = 0.0;
      for (std::size_t a = 0; a < k; ++a) d2 += rel[a] * rel[a];
      if (d2 == 0.0) return kInf;
      const double mm = sys.mass(i) * sys.mass(j);
      const double pw = sys.newtonian() ? 1.0 / std::sqrt(d2) : std::pow(d2, 0.5 * alpha);
      u += factor * mm * pw;
      if (grad_o != nullptr) {
        const double coef = dt * factor * alpha * mm * pw / d2;
        for (std::size_t a = 0; a < k; ++a) {
          const double f = coef * rel[a];
          grad_o[i * k + a] += wo * f;
          grad_o[j * k + a] -= wo * f;
          grad_e[i * k + a] += (1.0 - wo) * f;
          grad_e[j * k + a] -= (1.0 - wo) * f;
        }
      }
    }
  }
  return dt * u;
}

}  // namespace

double FlatAction::operator()(std::span<const double> nodes, std::span<double> grad, double* kinetic,
                              double* potential) const {
  const std::size_t dof = sys->bodies() * sys->dim();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  // Segments touching an endpoint collision follow the ejection profile s^p.
  const bool sing_first = segments >= 2 && has_collision(*sys, nodes.data());
  const bool sing_last = segments >= 2 && has_collision(*sys, nodes.data() + segments * dof);
  auto singular = [&](std::size_t j) {
    return (j == 0 && sing_first) || (j + 1 == segments && sing_last);
  };
  const double p = 2.0 / (2.0 - sys->alpha());
  const double kin_factor = p * p / (2.0 * p - 1.0);

  // kinetic: sum_j 1/2 |x_{j+1} - x_j|^2_m / dt
  double kin = 0.0;
  const double inv_dt = 1.0 / dt;
  for (std::size_t j = 0; j < segments; ++j) {
    const double* a = nodes.data() + j * dof;
    const double* b = a + dof;
    const double f = singular(j) ? kin_factor : 1.0;
    double seg = 0.0;
    for (std::size_t i = 0; i < sys->bodies(); ++i) {
      const double m = sys->mass(i);
      double s = 0.0;
      for (std::size_t c = i * sys->dim(); c < (i + 1) * sys->dim(); ++c) {
        const double d = b[c] - a[c];
        s += d * d;
        if (want_grad) {
          grad[j * dof + c] -= f * m * d * inv_dt;
          grad[(j + 1) * dof + c] += f * m * d * inv_dt;
        }
      }
      seg += m * s;
    }
    kin += 0.5 * f * seg * inv_dt;
  }

  double pot = 0.0;
  std::vector<double> mid(dof);
  std::vector<double> g(want_grad ? dof : 0);
  for (std::size_t j = 0; j < segments; ++j) {
    const double* a = nodes.data() + j * dof;
    const double* b = a + dof;
    double* ga = want_grad ? grad.data() + j * dof : nullptr;
    double* gb = want_grad ? ga + dof : nullptr;
    double u = 0.0;
    if (singular(j)) {
      u = (j == 0) ? singular_segment_potential(*sys, a, b, dt, ga, gb)
                   : singular_segment_potential(*sys, b, a, dt, gb, ga);
    } else if (quad == Quadrature::midpoint) {
      for (std::size_t c = 0; c < dof; ++c) mid[c] = 0.5 * (a[c] + b[c]);
      if (want_grad) std::fill(g.begin(), g.end(), 0.0);
      u = dt * flat_potential(*sys, mid.data(), want_grad ? g.data() : nullptr, 0.5 * dt);
      if (want_grad && std::isfinite(u)) {
        for (std::size_t c = 0; c < dof; ++c) {
          ga[c] += g[c];
          gb[c] += g[c];
        }
      }
    } else {
      u = 0.5 * dt * (flat_potential(*sys, a, ga, 0.5 * dt) + flat_potential(*sys, b, gb, 0.5 * dt));
    }
    if (!std::isfinite(u)) {
      pot = kInf;
      break;
    }
    pot += u;
  }
  if (kinetic != nullptr) *kinetic = kin;
  if (potential != nullptr) *potential = pot;
  return kin + pot;
}

}  // namespace detail

namespace {

std::vector<double> flatten(const Curve& curve) {
  std::vector<double> flat;
  flat.reserve(curve.nodes().size() * curve.front().size());
  for (const auto& x : curve.nodes()) flat.insert(flat.end(), x.coords().begin(), x.coords().end());
  return flat;
}

void check_curve(const Curve& curve, const MassSystem& sys) { sys.check(curve.front()); }

}  // namespace

ActionBreakdown action(const Curve& curve, const MassSystem& sys, Quadrature quad) {
  check_curve(curve, sys);
  if (curve.degenerate()) return {};
  const detail::FlatAction eval{&sys, curve.segments(), curve.dt(), quad};
  ActionBreakdown out;
  const auto flat = flatten(curve);
  out.total = eval(flat, {}, &out.kinetic, &out.potential);
  return out;
}

std::vector<Covector> action_gradient(const Curve& curve, const MassSystem& sys, Quadrature quad) {
  check_curve(curve, sys);
  const std::size_t n = curve.segments();
  const std::size_t dof = sys.bodies() * sys.dim();
  // Locate any colliding quadrature sample first so the error can name it.
  for (std::size_t j = 0; j < n; ++j) {
    bool hit = false;
    if (quad == Quadrature::midpoint) {
      hit = min_separation((curve.node(j) + curve.node(j + 1)) * 0.5) == 0.0;
    } else {
      hit = min_separation(curve.node(j)) == 0.0 || min_separation(curve.node(j + 1)) == 0.0;
    }
    if (hit) throw DomainError("action_gradient: collision in segment " + std::to_string(j));
  }
  const detail::FlatAction eval{&sys, n, curve.dt(), quad};
  const auto flat = flatten(curve);
  std::vector<double> grad(flat.size());
  eval(flat, grad);
  std::vector<Covector> out;
  out.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t j = 1; j < n; ++j) {
    out.emplace_back(sys.bodies(), sys.dim(),
                     std::vector<double>(grad.begin() + static_cast<std::ptrdiff_t>(j * dof),
                                         grad.begin() + static_cast<std::ptrdiff_t>((j + 1) * dof)));
  }
  return out;
}

ComDecomposition com_decomposition(const Curve& curve, const MassSystem& sys, Quadrature quad,
                                   double linearity_tol) {
  check_curve(curve, sys);
  const std::size_t n = curve.segments();
  const Vec g0 = center_of_mass(curve.front(), sys);
  const Vec g1 = center_of_mass(curve.back(), sys);
  double extent = euclidean_norm(g1) + euclidean_norm(g0);
  for (const auto& x : curve.nodes()) extent = std::max(extent, max_norm(x));
  extent = std::max(extent, 1.0);

  std::vector<Configuration> centered;
  centered.reserve(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    auto [y, g] = split(curve.node(j), sys);
    const double s = static_cast<double>(j) / static_cast<double>(n);
    double dev = 0.0;
    for (std::size_t a = 0; a < sys.dim(); ++a) {
      dev = std::max(dev, std::abs(g[a] - (g0[a] + s * (g1[a] - g0[a]))));
    }
    if (dev > linearity_tol * extent) {
      throw PreconditionError("com_decomposition: center of mass is not linear in time (node " +
                              std::to_string(j) + ")");
    }
    centered.push_back(std::move(y));
  }

  ComDecomposition out;
  const double full = action(curve, sys, quad).total;
  if (curve.degenerate()) return out;
  out.centered_action = action(Curve(curve.t0(), curve.dt(), std::move(centered)), sys, quad).total;
  Vec v(sys.dim());
  for (std::size_t a = 0; a < sys.dim(); ++a) v[a] = (g1[a] - g0[a]) / curve.duration();
  out.drift_term = 0.5 * curve.duration() * sys.total_mass() * dot(v, v);
  out.identity_gap = std::abs(full - out.centered_action - out.drift_term);
  return out;
}

Curve resample(const Curve& curve, std::size_t n_new) {
  if (n_new < 1) throw InvalidInput("resample: need at least one segment");
  if (curve.degenerate()) return curve;
  if (n_new == curve.segments()) return curve;
  std::vector<Configuration> nodes;
  nodes.reserve(n_new + 1);
  const double ratio = static_cast<double>(curve.segments()) / static_cast<double>(n_new);
  for (std::size_t j = 0; j <= n_new; ++j) {
    const double u = static_cast<double>(j) * ratio;
    const auto i = std::min(static_cast<std::size_t>(std::floor(u)), curve.segments() - 1);
    const double s = u - static_cast<double>(i);
    nodes.push_back(s == 0.0 ? curve.node(i) : curve.node(i) * (1.0 - s) + curve.node(i + 1) * s);
  }
  nodes.front() = curve.front();
  nodes.back() = curve.back();
  return {curve.t0(), curve.duration() / static_cast<double>(n_new), std::move(nodes)};
}

double euler_lagrange_residual(const Curve& curve, const MassSystem& sys) {
  check_curve(curve, sys);
  double worst = 0.0;
  const double inv = 1.0 / (curve.dt() * curve.dt());
  for (std::size_t j = 1; j < curve.segments(); ++j) {
    Configuration r = (curve.node(j + 1) - curve.node(j) * 2.0 + curve.node(j - 1)) * inv;
    r -= grad_potential(curve.node(j), sys);
    worst = std::max(worst, mass_norm(r, sys));
  }
  return worst;
}

void write_curve_csv(std::ostream& os, const Curve& curve) {
  const auto& x0 = curve.front();
  os << "t";
  for (std::size_t i = 0; i < x0.bodies(); ++i) {
    for (std::size_t a = 0; a < x0.dim(); ++a) os << ",body" << i << "_x" << a;
  }
  os << '\n';
  char buf[32];
  for (std::size_t j = 0; j < curve.nodes().size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", curve.time(j));
    os << buf;
    for (double v : curve.node(j).coords()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

Curve read_curve_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("curve csv: empty input");
  std::size_t bodies = 0;
  std::size_t dim = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "t") throw InvalidInput("curve csv: header must start with t");
    while (std::getline(ss, cell, ',')) {
      unsigned b = 0;
      unsigned a = 0;
      if (std::sscanf(cell.c_str(), "body%u_x%u", &b, &a) != 2) {
        throw InvalidInput("curve csv: bad header cell '" + cell + "'");
      }
      bodies = std::max<std::size_t>(bodies, b + 1);
      dim = std::max<std::size_t>(dim, a + 1);
    }
  }
  std::vector<double> times;
  std::vector<Configuration> nodes;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 1 + bodies * dim) throw InvalidInput("curve csv: row width mismatch");
    times.push_back(row.front());
    nodes.emplace_back(bodies, dim, std::vector<double>(row.begin() + 1, row.end()));
  }
  if (nodes.size() < 2) throw InvalidInput("curve csv: need at least two rows");
  const double dt = (times.back() - times.front()) / static_cast<double>(nodes.size() - 1);
  if (dt == 0.0) return Curve::point(nodes.front(), times.front());
  return {times.front(), dt, std::move(nodes)};
}

}  // namespace nbwk
