#include "nbwk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbwk/errors.hpp"

namespace nbwk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_power(double d2, double alpha) {
  if (alpha == -1.0) return 1.0 / std::sqrt(d2);
  return std::pow(d2, 0.5 * alpha);
}

}  // namespace

double potential(const Configuration& x, const MassSystem& sys) {
  sys.check(x);
  const std::size_t n = sys.bodies();
  const std::size_t k = sys.dim();
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double d = x(i, a) - x(j, a);
        d2 += d * d;
      }
      if (d2 == 0.0) return kInf;
      u += sys.mass(i) * sys.mass(j) * pair_power(d2, sys.alpha());
    }
  }
  return u;
}

Covector potential_differential(const Configuration& x, const MassSystem& sys) {
  sys.check(x);
  const std::size_t n = sys.bodies();
  const std::size_t k = sys.dim();
  Covector g(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double d = x(i, a) - x(j, a);
        d2 += d * d;
      }
      if (d2 == 0.0) {
        throw DomainError("potential gradient undefined: bodies " + std::to_string(i) + " and " +
                          std::to_string(j) + " collide");
      }
      // d/dr_i of m_i m_j d^alpha = alpha m_i m_j d^(alpha-2) (r_i - r_j)
      const double coef = sys.alpha() * sys.mass(i) * sys.mass(j) * pair_power(d2, sys.alpha()) / d2;
      for (std::size_t a = 0; a < k; ++a) {
        const double f = coef * (x(i, a) - x(j, a));
        g(i, a) += f;
        g(j, a) -= f;
      }
    }
  }
  return g;
}

Configuration grad_potential(const Configuration& x, const MassSystem& sys) {
  return legendre_inv(potential_differential(x, sys), sys);
}

double lagrangian(const Configuration& x, const Configuration& v, const MassSystem& sys) {
  const double nv = mass_norm(v, sys);
  return 0.5 * nv * nv + potential(x, sys);
}

double hamiltonian(const Configuration& x, const Covector& p, const MassSystem& sys) {
  const double np = dual_norm(p, sys);
  return 0.5 * np * np - potential(x, sys);
}

Covector legendre(const Configuration& v, const MassSystem& sys) {
  sys.check(v);
  Covector p = v;
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (double& c : p.body(i)) c *= sys.mass(i);
  }
  return p;
}

Configuration legendre_inv(const Covector& p, const MassSystem& sys) {
  sys.check(p);
  Configuration v = p;
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (double& c : v.body(i)) c /= sys.mass(i);
  }
  return v;
}

double energy(const Configuration& x, const Configuration& v, const MassSystem& sys) {
  const double u = potential(x, sys);
  if (!std::isfinite(u)) throw DomainError("energy undefined at a collision");
  const double nv = mass_norm(v, sys);
  return 0.5 * nv * nv - u;
}

Trajectory integrate_motion(const Configuration& x0, const Configuration& v0, double horizon,
                            double step, const MassSystem& sys, const IntegrateOptions& opts) {
  sys.check(x0);
  sys.check(v0);
  if (!(step > 0.0)) throw InvalidInput("integrate_motion: step must be positive");
  if (!(horizon >= 0.0)) throw InvalidInput("integrate_motion: horizon must be nonnegative");
  const double sep0 = min_separation(x0);
  if (!(sep0 > 0.0)) throw DomainError("integrate_motion: initial configuration has a collision");
  const double floor = opts.floor_ratio * diameter(x0);

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  if (steps == 0) {
    return {Curve::point(x0), {v0}, false, 0.0, {}};
  }
  const double h = horizon / static_cast<double>(steps);

  std::vector<Configuration> xs{x0};
  std::vector<Configuration> vs{v0};
  xs.reserve(steps + 1);
  vs.reserve(steps + 1);
  Configuration x = x0;
  Configuration v = v0;
  Configuration acc = grad_potential(x, sys);
  std::string message;
  bool aborted = false;
  double t = 0.0;

  for (std::size_t s = 0; s < steps && !aborted; ++s) {
    std::size_t sub = 1;
    if (opts.adaptive) {
      const double ratio = min_separation(x) / sep0;
      std::size_t levels = 0;
      // local time scale shrinks like separation^(1 - alpha/2)
      const double want = std::pow(std::min(ratio, 1.0), 1.0 - 0.5 * sys.alpha());
      while (levels < opts.max_subdivision && std::ldexp(1.0, -static_cast<int>(levels)) > want) {
        ++levels;
      }
      sub = std::size_t{1} << levels;
    }
    const double hs = h / static_cast<double>(sub);
    for (std::size_t q = 0; q < sub; ++q) {
      v += acc * (0.5 * hs);
      x += v * hs;
      if (min_separation(x) <= floor) {
        aborted = true;
        message = "near-collision abort at t = " + std::to_string(t + hs);
        t += hs;
        break;
      }
      acc = grad_potential(x, sys);
      v += acc * (0.5 * hs);
      t += hs;
    }
    if (!aborted) {
      xs.push_back(x);
      vs.push_back(v);
    }
  }
  if (xs.size() < 2) {
    return {Curve::point(x0), {v0}, true, t, message};
  }
  return {Curve(0.0, h, std::move(xs)), std::move(vs), aborted, aborted ? t : horizon, message};
}

double kepler_exponent(double alpha) { return 1.0 + 0.5 * alpha; }

double kepler_solution_constant(double m1, double m2, double alpha) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw InvalidInput("kepler_solution_constant: masses must be positive");
  if (!(alpha > -2.0 && alpha < 0.0)) throw InvalidInput("kepler_solution_constant: alpha outside (-2, 0)");
  const double beta = kepler_exponent(alpha);
  return std::sqrt(2.0 * m1 * m1 * m2 * m2 / (beta * beta * (m1 + m2)));
}

Covector numerical_differential(const ScalarFn& f, const Configuration& x, double h) {
  Covector g(x.bodies(), x.dim());
  Configuration probe = x;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double x0 = x.coords()[c];
    auto eval = [&](double offset) {
      probe.coords()[c] = x0 + offset;
      return f(probe);
    };
    const double fp1 = eval(h);
    const double fm1 = eval(-h);
    const double fp2 = eval(2.0 * h);
    const double fm2 = eval(-2.0 * h);
    probe.coords()[c] = x0;
    g.coords()[c] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
  }
  return g;
}

double hj_residual(const ScalarFn& u, const Configuration& x, const MassSystem& sys, double level,
                   double h) {
  return hamiltonian(x, numerical_differential(u, x, h), sys) - level;
}

}  // namespace nbwk
