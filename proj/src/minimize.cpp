#include "nbwk/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>

#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/phi_cache.hpp"
#include "nbwk/random.hpp"

namespace nbwk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double vdot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Thomas factorization of tridiag(-1, 2, -1) of size m.
class Laplacian1D {
 public:
  explicit Laplacian1D(std::size_t m) : cp_(m), inv_den_(m) {
    double prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double den = 2.0 + prev;  // 2 - (-1) * c'_{i-1}
      inv_den_[i] = 1.0 / den;
      cp_[i] = -inv_den_[i];
      prev = cp_[i];
    }
  }

  // In-place solve on a strided column.
  void solve(double* col, std::size_t stride) const {
    const std::size_t m = cp_.size();
    if (m == 0) return;
    double prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = (col[i * stride] + prev) * inv_den_[i];
      col[i * stride] = d;
      prev = d;
    }
    for (std::size_t i = m - 1; i-- > 0;) col[i * stride] -= cp_[i] * col[(i + 1) * stride];
  }

 private:
  std::vector<double> cp_;
  std::vector<double> inv_den_;
};

// Discrete action restricted to the interior nodes of a curve with fixed endpoints.
class InteriorProblem {
 public:
  InteriorProblem(const Curve& start, const MassSystem& sys, Quadrature quad)
      : sys_(sys),
        n_(start.segments()),
        dof_(sys.bodies() * sys.dim()),
        eval_{&sys, start.segments(), start.dt(), quad},
        full_((n_ + 1) * dof_),
        grad_full_((n_ + 1) * dof_),
        lap_(n_ - 1) {
    for (std::size_t j = 0; j <= n_; ++j) {
      std::copy(start.node(j).coords().begin(), start.node(j).coords().end(),
                full_.begin() + static_cast<std::ptrdiff_t>(j * dof_));
    }
  }

  std::size_t size() const { return (n_ - 1) * dof_; }

  std::vector<double> initial() const {
    return {full_.begin() + static_cast<std::ptrdiff_t>(dof_),
            full_.begin() + static_cast<std::ptrdiff_t>(n_ * dof_)};
  }

  double operator()(const std::vector<double>& z, std::vector<double>& g) {
    std::copy(z.begin(), z.end(), full_.begin() + static_cast<std::ptrdiff_t>(dof_));
    const double f = eval_(full_, grad_full_);
    std::copy(grad_full_.begin() + static_cast<std::ptrdiff_t>(dof_),
              grad_full_.begin() + static_cast<std::ptrdiff_t>(n_ * dof_), g.begin());
    return f;
  }

  // out = P^-1 g, P the kinetic Hessian (m_i / dt) tridiag(-1, 2, -1) per coordinate.
  void precondition(const std::vector<double>& g, std::vector<double>& out) const {
    out = g;
    for (std::size_t c = 0; c < dof_; ++c) {
      lap_.solve(out.data() + c, dof_);
      const double w = eval_.dt / sys_.mass(c / sys_.dim());
      for (std::size_t j = 0; j + 1 < n_; ++j) out[j * dof_ + c] *= w;
    }
  }

  Curve curve(const std::vector<double>& z, double t0) const {
    std::vector<Configuration> nodes;
    nodes.reserve(n_ + 1);
    for (std::size_t j = 0; j <= n_; ++j) {
      std::vector<double> c(dof_);
      for (std::size_t q = 0; q < dof_; ++q) {
        c[q] = (j == 0 || j == n_) ? full_[j * dof_ + q] : z[(j - 1) * dof_ + q];
      }
      nodes.emplace_back(sys_.bodies(), sys_.dim(), std::move(c));
    }
    return {t0, eval_.dt, std::move(nodes)};
  }

 private:
  const MassSystem& sys_;
  std::size_t n_;
  std::size_t dof_;
  detail::FlatAction eval_;
  std::vector<double> full_;
  std::vector<double> grad_full_;
  Laplacian1D lap_;
};

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

MinimizeResult run_lbfgs(const Curve& start, const MassSystem& sys, const MinimizeOptions& opts) {
  InteriorProblem prob(start, sys, opts.quadrature);
  const std::size_t m = prob.size();
  std::vector<double> z = prob.initial();
  std::vector<double> g(m), gt(m), zt(m), d(m), pg(m), q(m);
  double f = prob(z, g);

  MinimizeResult res{start, f, kInf, 0, false, false, {}};
  if (!std::isfinite(f)) {
    res.message = "initial curve has infinite action";
    return res;
  }

  std::deque<Correction> memory;
  auto two_loop = [&](const std::vector<double>& grad, std::vector<double>& out) {
    q = grad;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * vdot(memory[i].s, q);
      for (std::size_t c = 0; c < m; ++c) q[c] -= alpha[i] * memory[i].y[c];
    }
    prob.precondition(q, out);
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * vdot(memory[i].y, out);
      for (std::size_t c = 0; c < m; ++c) out[c] += memory[i].s[c] * (alpha[i] - beta);
    }
  };

  const double tiny = std::numeric_limits<double>::min();
  std::size_t it = 0;
  double gn = kInf;
  for (; it < opts.max_iter; ++it) {
    prob.precondition(g, pg);
    gn = std::sqrt(std::max(vdot(g, pg), 0.0) / std::max(f, tiny));
    if (gn <= opts.tol) break;

    two_loop(g, d);
    for (double& c : d) c = -c;
    double gd = vdot(g, d);
    if (!(gd < 0.0)) {
      memory.clear();
      for (std::size_t c = 0; c < m; ++c) d[c] = -pg[c];
      gd = vdot(g, d);
    }

    bool accepted = false;
    double step = 1.0;
    double ft = kInf;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t c = 0; c < m; ++c) zt[c] = z[c] + step * d[c];
      ft = prob(zt, gt);
      if (std::isfinite(ft) && ft <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      double next = 0.5 * step;
      if (std::isfinite(ft)) {
        // minimizer of the quadratic through f, gd and ft, kept in [0.1, 0.5] * step
        const double curv = ft - f - gd * step;
        if (curv > 0.0) next = std::clamp(-gd * step * step / (2.0 * curv), 0.1 * step, 0.5 * step);
      }
      step = next;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      res.message = "line search stalled";
      break;
    }

    Correction corr{std::vector<double>(m), std::vector<double>(m), 0.0};
    for (std::size_t c = 0; c < m; ++c) {
      corr.s[c] = zt[c] - z[c];
      corr.y[c] = gt[c] - g[c];
    }
    const double sy = vdot(corr.s, corr.y);
    if (sy > 1e-12 * std::sqrt(vdot(corr.s, corr.s) * vdot(corr.y, corr.y))) {
      corr.rho = 1.0 / sy;
      memory.push_back(std::move(corr));
      if (memory.size() > opts.memory) memory.pop_front();
    }
    z.swap(zt);
    g.swap(gt);
    f = ft;
  }
  if (it == opts.max_iter && gn > opts.tol) {
    prob.precondition(g, pg);
    gn = std::sqrt(std::max(vdot(g, pg), 0.0) / std::max(f, tiny));
    if (res.message.empty() && gn > opts.tol) res.message = "iteration cap reached";
  }
  res.curve = prob.curve(z, start.t0());
  res.value = f;
  res.grad_norm = gn;
  res.iterations = it;
  res.converged = gn <= opts.tol;
  if (res.converged) res.message.clear();
  return res;
}

bool interior_collides(const Curve& c, double floor) {
  for (std::size_t j = 1; j < c.segments(); ++j) {
    if (min_separation(c.node(j)) < floor) return true;
  }
  return false;
}

// Straight segment x -> y, with colliding body pairs pushed apart by a smooth
// transverse bump of size 1e-3 * scale (center of mass kept).
std::pair<Curve, bool> straight_start(const Configuration& x, const Configuration& y, double T,
                                      const MassSystem& sys, const MinimizeOptions& opts) {
  const std::size_t n = opts.nodes;
  Curve c = Curve::segment(x, y, T, n);
  const double scale = query_scale(x, y);
  const double floor = 1e-6 * scale;
  if (!interior_collides(c, floor)) return {std::move(c), false};

  const std::size_t k = sys.dim();
  Rng rng(opts.seed);
  for (int attempt = 0; attempt < 4; ++attempt) {
    for (std::size_t i = 0; i < sys.bodies(); ++i) {
      for (std::size_t l = i + 1; l < sys.bodies(); ++l) {
        Rng pair_rng = rng.fork(i * 1000 + l);
        bool hit = false;
        for (std::size_t j = 1; j < n && !hit; ++j) {
          double d2 = 0.0;
          for (std::size_t a = 0; a < k; ++a) {
            const double d = c.node(j)(i, a) - c.node(j)(l, a);
            d2 += d * d;
          }
          hit = std::sqrt(d2) < floor;
        }
        if (!hit) continue;
        Vec e = random_unit_vector(pair_rng, k);
        // remove the component along the relative displacement of the pair
        Vec rel(k);
        for (std::size_t a = 0; a < k; ++a) rel[a] = (y(l, a) - y(i, a)) - (x(l, a) - x(i, a));
        const double rn = euclidean_norm(rel);
        if (k >= 2 && rn > 0.0) {
          const double p = dot(e, rel) / (rn * rn);
          for (std::size_t a = 0; a < k; ++a) e[a] -= p * rel[a];
          const double en = euclidean_norm(e);
          if (en > 1e-12) {
            for (double& v : e) v /= en;
          } else {
            e = random_unit_vector(pair_rng, k);
          }
        }
        const double eps = 1e-3 * scale;
        const double mi = sys.mass(i);
        const double ml = sys.mass(l);
        for (std::size_t j = 1; j < n; ++j) {
          const double bump =
              eps * std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
          for (std::size_t a = 0; a < k; ++a) {
            c.nodes()[j](i, a) += bump * e[a] * ml / (mi + ml);
            c.nodes()[j](l, a) -= bump * e[a] * mi / (mi + ml);
          }
        }
      }
    }
    if (!interior_collides(c, floor)) return {std::move(c), true};
  }
  throw DomainError("minimize_fixed_time: persistent collision in the initial curve");
}

Curve with_duration(const Curve& c, double T) {
  return {c.t0(), T / static_cast<double>(c.segments()), c.nodes()};
}

}  // namespace

double query_scale(const Configuration& x, const Configuration& y) {
  const double l = std::max({max_norm(y - x), diameter(x), diameter(y)});
  return l > 0.0 ? l : 1.0;
}

double characteristic_time(const Configuration& x, const Configuration& y, const MassSystem& sys) {
  const double l = query_scale(x, y);
  double pairs = 0.0;
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    for (std::size_t j = i + 1; j < sys.bodies(); ++j) pairs += sys.mass(i) * sys.mass(j);
  }
  const double u = pairs * std::pow(l, sys.alpha());
  return std::sqrt(sys.total_mass()) * l / std::sqrt(2.0 * u);
}

MinimizeResult minimize_fixed_time(const Configuration& x, const Configuration& y, double T,
                                   const MassSystem& sys, const MinimizeOptions& opts) {
  sys.check(x);
  sys.check(y);
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("minimize_fixed_time: T must be positive");
  if (opts.nodes < 2) throw InvalidInput("minimize_fixed_time: need at least 2 segments");
  auto [start, perturbed] = straight_start(x, y, T, sys, opts);
  MinimizeResult r = run_lbfgs(start, sys, opts);
  r.perturbed = perturbed;
  return r;
}

MinimizeResult minimize_from(const Curve& initial, const MassSystem& sys,
                             const MinimizeOptions& opts) {
  sys.check(initial.front());
  if (initial.degenerate()) throw InvalidInput("minimize_from: zero-duration curve");
  if (initial.segments() < 2) throw InvalidInput("minimize_from: need at least 2 segments");
  return run_lbfgs(initial, sys, opts);
}

PotentialValue free_time_potential(const Configuration& x, const Configuration& y,
                                   const MassSystem& sys, const MinimizeOptions& opts) {
  sys.check(x);
  sys.check(y);
  if (opts.t_scan < 3) throw InvalidInput("free_time_potential: t_scan must be at least 3");
  PotentialValue pv;
  if (x == y) {
    pv.curve = Curve::point(x);
    pv.converged = true;
    return pv;
  }

  const double tc = characteristic_time(x, y, sys);
  const double log_lo = std::log(tc / opts.t_span);
  const double log_hi = std::log(tc * opts.t_span);
  const double log_step = (log_hi - log_lo) / static_cast<double>(opts.t_scan - 1);

  struct Eval {
    double log_t;
    MinimizeResult res;
  };
  std::deque<Eval> scan;
  for (std::size_t i = 0; i < opts.t_scan; ++i) {
    const double lt = log_lo + log_step * static_cast<double>(i);
    const double T = std::exp(lt);
    MinimizeResult r = scan.empty() ? minimize_fixed_time(x, y, T, sys, opts)
                                    : minimize_from(with_duration(scan.back().res.curve, T), sys, opts);
    scan.push_back({lt, std::move(r)});
  }

  auto best_index = [&]() -> std::optional<std::size_t> {
    std::optional<std::size_t> b;
    for (std::size_t i = 0; i < scan.size(); ++i) {
      if (scan[i].res.converged && (!b || scan[i].res.value < scan[*b].res.value)) b = i;
    }
    return b;
  };

  std::optional<std::size_t> b = best_index();
  std::size_t extensions = 0;
  while (b && extensions < opts.max_bracket_extensions &&
         (*b == 0 || *b + 1 == scan.size())) {
    ++extensions;
    if (*b == 0) {
      const double lt = scan.front().log_t - log_step;
      MinimizeResult r = minimize_from(with_duration(scan.front().res.curve, std::exp(lt)), sys, opts);
      scan.push_front({lt, std::move(r)});
    } else {
      const double lt = scan.back().log_t + log_step;
      MinimizeResult r = minimize_from(with_duration(scan.back().res.curve, std::exp(lt)), sys, opts);
      scan.push_back({lt, std::move(r)});
    }
    b = best_index();
  }

  for (const auto& e : scan) pv.samples.push_back({std::exp(e.log_t), e.res.value, e.res.converged});
  pv.bracket = {std::exp(scan.front().log_t), std::exp(scan.back().log_t)};

  if (!b) {
    pv.message = "no reliable duration sample";
    const auto it = std::min_element(scan.begin(), scan.end(), [](const Eval& a, const Eval& c) {
      return a.res.value < c.res.value;
    });
    pv.value = it->res.value;
    pv.t_star = std::exp(it->log_t);
    pv.curve = it->res.curve;
    return pv;
  }

  pv.at_edge = (*b == 0 || *b + 1 == scan.size());
  MinimizeResult best = scan[*b].res;
  double best_lt = scan[*b].log_t;
  const Curve warm = best.curve;

  // Golden-section search in log T between the neighbours of the best sample.
  double a = scan[*b == 0 ? 0 : *b - 1].log_t;
  double c = scan[std::min(*b + 1, scan.size() - 1)].log_t;
  auto evaluate = [&](double lt) {
    MinimizeResult r = minimize_from(with_duration(warm, std::exp(lt)), sys, opts);
    const double v = r.converged ? r.value : kInf;
    pv.samples.push_back({std::exp(lt), r.value, r.converged});
    if (r.converged && r.value < best.value) {
      best = std::move(r);
      best_lt = lt;
    }
    return v;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = c - inv_phi * (c - a);
  double x2 = a + inv_phi * (c - a);
  double f1 = evaluate(x1);
  double f2 = evaluate(x2);
  while (c - a > opts.t_rel_tol) {
    if (f1 <= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - inv_phi * (c - a);
      f1 = evaluate(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (c - a);
      f2 = evaluate(x2);
    }
  }

  pv.value = best.value;
  pv.t_star = std::exp(best_lt);
  pv.curve = std::move(best.curve);
  pv.converged = true;
  if (pv.at_edge) pv.message = "optimal duration on the edge of the scanned range";
  return pv;
}

double phi_value(const Configuration& x, const Configuration& y, const MassSystem& sys,
                 const MinimizeOptions& opts, PhiCache* cache) {
  if (x == y) return 0.0;
  std::string key;
  if (cache != nullptr) {
    key = PhiCache::make_key(x, y, sys, opts);
    if (auto hit = cache->lookup(key)) return hit->value;
  }
  PotentialValue pv = free_time_potential(x, y, sys, opts);
  if (!pv.converged) throw DomainError("phi: " + pv.message);
  if (cache != nullptr) cache->merge({key, pv.value, pv.t_star, opts.nodes, opts.tol});
  return pv.value;
}

HolderEstimate holder_fit(std::span<const ConfigPair> pairs, std::span<const double> phi) {
  if (pairs.size() != phi.size()) throw InvalidInput("holder_fit: one value per pair required");
  if (pairs.size() < 10) throw InvalidInput("holder_fit: need at least 10 pairs");
  HolderEstimate out;
  out.phi.assign(phi.begin(), phi.end());
  double dmin = kInf;
  double dmax = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double d = max_norm(pairs[i].y - pairs[i].x);
    if (!(d > 0.0)) throw InvalidInput("holder_fit: coincident pair");
    out.distance.push_back(d);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    out.eta_hat = std::max(out.eta_hat, phi[i] / std::sqrt(d));
  }
  if (dmax / dmin < 1e3) throw InvalidInput("holder_fit: pairs must span at least 3 decades");

  // Group pairs into scaling families.
  std::vector<int> family(pairs.size(), -1);
  std::vector<std::vector<std::size_t>> groups;
  auto direction = [&](std::size_t i) {
    Configuration d = pairs[i].y - pairs[i].x;
    return d * (1.0 / euclidean_norm(d.coords()));
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (family[i] >= 0) continue;
    std::vector<std::size_t> members{i};
    const Configuration di = direction(i);
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (family[j] >= 0 || !(pairs[j].x == pairs[i].x)) continue;
      if (max_norm(direction(j) - di) <= 1e-9) members.push_back(j);
    }
    if (members.size() >= 2) {
      for (auto mbr : members) family[mbr] = static_cast<int>(groups.size());
      groups.push_back(std::move(members));
    }
  }
  out.families = groups.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& grp : groups) {
    double mx = 0.0;
    double my = 0.0;
    for (auto i : grp) {
      mx += std::log(out.distance[i]);
      my += std::log(phi[i]);
    }
    mx /= static_cast<double>(grp.size());
    my /= static_cast<double>(grp.size());
    for (auto i : grp) {
      const double dx = std::log(out.distance[i]) - mx;
      sxy += dx * (std::log(phi[i]) - my);
      sxx += dx * dx;
    }
  }
  out.exponent_fit = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  return out;
}

HolderEstimate holder_estimate(std::span<const ConfigPair> pairs, const MassSystem& sys,
                               const MinimizeOptions& opts, PhiCache* cache) {
  std::vector<double> phi;
  phi.reserve(pairs.size());
  for (const auto& p : pairs) phi.push_back(phi_value(p.x, p.y, sys, opts, cache));
  return holder_fit(pairs, phi);
}

double lipschitz_estimate(std::span<const Configuration> samples, double floor,
                          const MassSystem& sys, const MinimizeOptions& opts, PhiCache* cache) {
  if (samples.size() < 2) throw InvalidInput("lipschitz_estimate: need at least two samples");
  for (const auto& x : samples) {
    sys.check(x);
    if (min_separation(x) < floor) {
      throw InvalidInput("lipschitz_estimate: sample closer to a collision than the floor");
    }
  }
  double k = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = max_norm(samples[i] - samples[j]);
      if (d == 0.0) continue;
      k = std::max(k, phi_value(samples[i], samples[j], sys, opts, cache) / d);
    }
  }
  return k;
}

double marchal_check(const MinimizeResult& result) {
  double s = kInf;
  const Curve& c = result.curve;
  for (std::size_t j = 1; j < c.segments(); ++j) s = std::min(s, min_separation(c.node(j)));
  return s;
}

EnergyDiagnostic energy_at_optimum(const PotentialValue& pv, const MassSystem& sys) {
  EnergyDiagnostic out;
  const Curve& c = pv.curve;
  if (c.degenerate() || c.segments() < 2) return out;
  const std::size_t m = c.segments() / 2;
  const Configuration v = (c.node(m + 1) - c.node(m - 1)) * (0.5 / c.dt());
  out.potential_mid = potential(c.node(m), sys);
  out.energy = energy(c.node(m), v, sys);
  out.reliable = pv.converged && !pv.at_edge;
  return out;
}

double fixed_time_slope(const Curve& warm, double T, double h, const MassSystem& sys,
                        const MinimizeOptions& opts) {
  if (!(h > 0.0) || !(T - h > 0.0)) throw InvalidInput("fixed_time_slope: need 0 < h < T");
  const MinimizeResult up = minimize_from(with_duration(warm, T + h), sys, opts);
  const MinimizeResult dn = minimize_from(with_duration(warm, T - h), sys, opts);
  return (up.value - dn.value) / (2.0 * h);
}

}  // namespace nbwk
