#include "nbwk/weak_kam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "nbwk/action.hpp"
#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/phi_cache.hpp"
#include "parallel.hpp"

namespace nbwk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_two_body(const MassSystem& sys, const char* who) {
  if (sys.bodies() != 2) throw InvalidInput(std::string(who) + ": two bodies required");
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed-form fields

KeplerField::KeplerField(const MassSystem& sys, double sign)
    : c_(kepler_solution_constant(sys.mass(0), sys.mass(1), sys.alpha())),
      beta_(kepler_exponent(sys.alpha())),
      sign_(sign) {
  require_two_body(sys, "KeplerField");
  if (sign != 1.0 && sign != -1.0) throw InvalidInput("KeplerField: sign must be +1 or -1");
}

double KeplerField::value(const Configuration& x) const {
  if (x.bodies() != 2) throw InvalidInput("KeplerField: two bodies required");
  return sign_ * c_ * std::pow(min_separation(x), beta_);
}

std::string KeplerField::describe() const {
  return std::string(sign_ > 0 ? "+" : "-") + fmt(c_) + " |r1 - r2|^" + fmt(beta_);
}

LiftedField::LiftedField(std::shared_ptr<const Field> base, Vec r, const MassSystem& sys)
    : base_(std::move(base)), r_(std::move(r)), sys_(sys) {
  if (!base_) throw InvalidInput("LiftedField: null base field");
  if (r_.size() != sys.dim()) throw InvalidInput("LiftedField: r must have the ambient dimension");
}

double LiftedField::value(const Configuration& x) const {
  return base_->value(x) + dot(center_of_mass(x, sys_), r_);
}

std::optional<Covector> LiftedField::differential(const Configuration& x) const {
  auto d = base_->differential(x);
  if (!d) return std::nullopt;
  const double m = sys_.total_mass();
  for (std::size_t i = 0; i < sys_.bodies(); ++i) {
    for (std::size_t a = 0; a < sys_.dim(); ++a) (*d)(i, a) += sys_.mass(i) * r_[a] / m;
  }
  return d;
}

std::string LiftedField::describe() const {
  std::string s = base_->describe() + " + <G(x), (";
  for (std::size_t a = 0; a < r_.size(); ++a) s += (a ? ", " : "") + fmt(r_[a]);
  return s + ")>";
}

// ---------------------------------------------------------------------------
// Polar grid

PolarGrid PolarGrid::geometric(std::vector<double> masses, double r_min, double r_max,
                               std::size_t n_radii, std::size_t angles) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n_radii < 2) {
    throw InvalidInput("PolarGrid: need 0 < r_min < r_max and at least two radii");
  }
  PolarGrid g;
  g.masses = std::move(masses);
  g.angles = angles;
  const double q = std::log(r_max / r_min) / static_cast<double>(n_radii - 1);
  for (std::size_t i = 0; i < n_radii; ++i) {
    g.radii.push_back(i + 1 == n_radii ? r_max : r_min * std::exp(q * static_cast<double>(i)));
  }
  g.validate();
  return g;
}

MassSystem PolarGrid::system() const { return MassSystem(masses, 2, alpha); }

void PolarGrid::validate() const {
  if (masses.size() != 2) throw InvalidInput("PolarGrid: two masses required");
  if (radii.size() < 2 || angles < 3) throw InvalidInput("PolarGrid: need >= 2 radii and >= 3 angles");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw InvalidInput("PolarGrid: radii must be positive and increasing");
    }
  }
  if (shifts.empty()) throw InvalidInput("PolarGrid: at least one center-of-mass shift");
  for (const auto& s : shifts) {
    if (s.size() != 2) throw InvalidInput("PolarGrid: shifts are planar vectors");
  }
  (void)system();
}

Configuration two_body_configuration(const MassSystem& sys, std::span<const double> s,
                                     std::span<const double> com) {
  require_two_body(sys, "two_body_configuration");
  if (s.size() != sys.dim() || com.size() != sys.dim()) {
    throw InvalidInput("two_body_configuration: dimension mismatch");
  }
  const double m = sys.total_mass();
  Configuration x(2, sys.dim());
  for (std::size_t a = 0; a < sys.dim(); ++a) {
    x(0, a) = com[a] - sys.mass(1) / m * s[a];
    x(1, a) = com[a] + sys.mass(0) / m * s[a];
  }
  return x;
}

Configuration PolarGrid::point(std::size_t shift, std::size_t radius, std::size_t angle) const {
  const double th = kTwoPi * static_cast<double>(angle) / static_cast<double>(angles);
  const double s[2] = {radii[radius] * std::cos(th), radii[radius] * std::sin(th)};
  return two_body_configuration(system(), s, shifts[shift]);
}

std::vector<Configuration> PolarGrid::points() const {
  validate();
  std::vector<Configuration> out;
  out.reserve(size());
  for (std::size_t l = 0; l < shifts.size(); ++l) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      for (std::size_t j = 0; j < angles; ++j) out.push_back(point(l, i, j));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampled fields

std::string to_string(Interpolation rule) {
  switch (rule) {
    case Interpolation::nearest: return "nearest";
    case Interpolation::inverse_distance: return "inverse-distance";
    case Interpolation::simplex_linear: return "simplex-linear";
  }
  return "nearest";
}

Interpolation interpolation_from_string(const std::string& name) {
  if (name == "nearest") return Interpolation::nearest;
  if (name == "inverse-distance") return Interpolation::inverse_distance;
  if (name == "simplex-linear") return Interpolation::simplex_linear;
  throw InvalidInput("unknown interpolation rule '" + name + "'");
}

struct SampledField::Cell {
  std::size_t i00, i10, i01, i11;  // (radius, angle) corners
  double a;                        // radial fraction
  double b;                        // angular fraction
  double dr;
  double dth;
  double rho;
  Vec radial;                      // unit separation direction
  Vec tangential;
};

SampledField::SampledField(std::vector<Configuration> points, std::vector<double> values,
                           Interpolation rule, std::optional<PolarGrid> grid)
    : points_(std::move(points)), values_(std::move(values)), rule_(rule), grid_(std::move(grid)) {
  if (points_.empty()) throw InvalidInput("SampledField: no points");
  if (points_.size() != values_.size()) throw InvalidInput("SampledField: one value per point");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("SampledField: values must be finite");
  }
  for (const auto& p : points_) {
    if (!p.same_shape(points_.front())) throw InvalidInput("SampledField: mixed point shapes");
  }
  if (grid_) {
    grid_->validate();
    if (grid_->size() != points_.size()) throw InvalidInput("SampledField: grid/point count mismatch");
    sys_ = grid_->system();
  }
  if (rule_ == Interpolation::simplex_linear && !grid_) {
    throw InvalidInput("SampledField: simplex-linear interpolation needs a polar grid");
  }
}

SampledField SampledField::sample(const Field& u, const PolarGrid& grid, Interpolation rule) {
  std::vector<Configuration> pts = grid.points();
  std::vector<double> vals;
  vals.reserve(pts.size());
  for (const auto& p : pts) vals.push_back(u.value(p));
  return {std::move(pts), std::move(vals), rule, grid};
}

SampledField SampledField::with_values(std::vector<double> values) const {
  return {points_, std::move(values), rule_, grid_};
}

std::optional<SampledField::Cell> SampledField::locate(const Configuration& x) const {
  const PolarGrid& g = *grid_;
  const Vec com = center_of_mass(x, *sys_);
  std::size_t layer = g.shifts.size();
  for (std::size_t l = 0; l < g.shifts.size(); ++l) {
    const double d = std::hypot(com[0] - g.shifts[l][0], com[1] - g.shifts[l][1]);
    if (d <= 1e-9 * (1.0 + std::hypot(g.shifts[l][0], g.shifts[l][1]))) {
      layer = l;
      break;
    }
  }
  if (layer == g.shifts.size()) return std::nullopt;

  const double sx = x(1, 0) - x(0, 0);
  const double sy = x(1, 1) - x(0, 1);
  const double rho = std::hypot(sx, sy);
  const double tol = 1e-12 * g.radii.back();
  if (rho < g.radii.front() - tol || rho > g.radii.back() + tol) return std::nullopt;
  auto it = std::upper_bound(g.radii.begin(), g.radii.end(), rho);
  std::size_t i = it == g.radii.begin() ? 0 : static_cast<std::size_t>(it - g.radii.begin()) - 1;
  i = std::min(i, g.radii.size() - 2);

  double th = std::atan2(sy, sx);
  if (th < 0.0) th += kTwoPi;
  const double dth = kTwoPi / static_cast<double>(g.angles);
  double pos = th / dth;
  auto j = static_cast<std::size_t>(std::floor(pos));
  double b = pos - static_cast<double>(j);
  if (j >= g.angles) {
    j = 0;
    b = 0.0;
  }
  const std::size_t j1 = (j + 1) % g.angles;
  const double dr = g.radii[i + 1] - g.radii[i];
  Cell c{g.index(layer, i, j),
         g.index(layer, i + 1, j),
         g.index(layer, i, j1),
         g.index(layer, i + 1, j1),
         std::clamp((rho - g.radii[i]) / dr, 0.0, 1.0),
         std::clamp(b, 0.0, 1.0),
         dr,
         dth,
         rho,
         {sx / rho, sy / rho},
         {-sy / rho, sx / rho}};
  return c;
}

double SampledField::value(const Configuration& x) const {
  if (!x.same_shape(points_.front())) throw InvalidInput("SampledField: configuration shape mismatch");
  for (std::size_t p = 0; p < points_.size(); ++p) {
    if (points_[p] == x) return values_[p];
  }
  switch (rule_) {
    case Interpolation::nearest: {
      std::size_t best = 0;
      double bd = kInf;
      for (std::size_t p = 0; p < points_.size(); ++p) {
        const double d = euclidean_norm((points_[p] - x).coords());
        if (d < bd) {
          bd = d;
          best = p;
        }
      }
      return values_[best];
    }
    case Interpolation::inverse_distance: {
      double wsum = 0.0;
      double vsum = 0.0;
      for (std::size_t p = 0; p < points_.size(); ++p) {
        const double d = euclidean_norm((points_[p] - x).coords());
        const double w = 1.0 / (d * d);
        wsum += w;
        vsum += w * values_[p];
      }
      return vsum / wsum;
    }
    case Interpolation::simplex_linear: {
      auto c = locate(x);
      if (!c) throw OutOfReach("SampledField: configuration outside the sampled region");
      const double v00 = values_[c->i00];
      const double v10 = values_[c->i10];
      const double v01 = values_[c->i01];
      const double v11 = values_[c->i11];
      if (c->a + c->b <= 1.0) return v00 + c->a * (v10 - v00) + c->b * (v01 - v00);
      return v11 + (1.0 - c->a) * (v01 - v11) + (1.0 - c->b) * (v10 - v11);
    }
  }
  return values_.front();
}

std::optional<Covector> SampledField::differential(const Configuration& x) const {
  if (rule_ != Interpolation::simplex_linear) return std::nullopt;
  auto c = locate(x);
  if (!c) throw OutOfReach("SampledField: configuration outside the sampled region");
  const double v00 = values_[c->i00];
  const double v10 = values_[c->i10];
  const double v01 = values_[c->i01];
  const double v11 = values_[c->i11];
  double da = 0.0;
  double db = 0.0;
  if (c->a + c->b <= 1.0) {
    da = v10 - v00;
    db = v01 - v00;
  } else {
    da = v11 - v01;
    db = v11 - v10;
  }
  // u depends on the separation s = r2 - r1 only
  Covector d(2, 2);
  for (std::size_t a = 0; a < 2; ++a) {
    const double ds = da * c->radial[a] / c->dr + db * c->tangential[a] / (c->rho * c->dth);
    d(1, a) = ds;
    d(0, a) = -ds;
  }
  return d;
}

std::string SampledField::describe() const {
  return "sampled field, " + std::to_string(points_.size()) + " points, " + to_string(rule_);
}

// ---------------------------------------------------------------------------
// Domination

DominationReport domination_check(const Field& u, std::span<const ConfigPair> pairs,
                                  const MassSystem& sys, const MinimizeOptions& opts,
                                  PhiCache* cache) {
  DominationReport rep;
  rep.violation.assign(pairs.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(pairs.size());
  detail::parallel_for(pairs.size(), [&](std::size_t i) {
    try {
      const double phi = phi_value(pairs[i].x, pairs[i].y, sys, opts, cache);
      rep.violation[i] = u.value(pairs[i].y) - u.value(pairs[i].x) - phi;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!errors[i].empty()) {
      rep.skipped.push_back(i);
      rep.messages.push_back("pair " + std::to_string(i) + ": " + errors[i]);
    } else if (rep.violation[i] > rep.max_violation) {
      rep.max_violation = rep.violation[i];
      rep.worst_pair = i;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Lax-Oleinik

FixedTimeKernel fixed_time_kernel(std::span<const Configuration> points, double t,
                                  const MassSystem& sys, const MinimizeOptions& opts) {
  if (!(t > 0.0)) throw InvalidInput("fixed_time_kernel: t must be positive");
  const std::size_t n = points.size();
  FixedTimeKernel K;
  K.t = t;
  K.size = n;
  K.k.assign(n * n, kInf);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n + 1) / 2);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = y; x < n; ++x) pairs.emplace_back(y, x);
  }
  std::vector<double> val(pairs.size(), kInf);
  detail::parallel_for(pairs.size(), [&](std::size_t q) {
    const auto [y, x] = pairs[q];
    const MinimizeResult r = minimize_fixed_time(points[y], points[x], t, sys, opts);
    if (r.converged) val[q] = r.value;
  });
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [y, x] = pairs[q];
    if (!std::isfinite(val[q])) {
      K.failures.push_back(pairs[q]);
      continue;
    }
    K.k[y * n + x] = val[q];
    K.k[x * n + y] = val[q];
  }
  return K;
}

FixedTimeKernel fixed_time_kernel(const PolarGrid& grid, double t, const MinimizeOptions& opts) {
  grid.validate();
  const MassSystem sys = grid.system();
  const std::size_t m = grid.layer_size();
  std::vector<Configuration> centered;
  centered.reserve(m);
  const Vec zero{0.0, 0.0};
  for (std::size_t i = 0; i < grid.radii.size(); ++i) {
    for (std::size_t j = 0; j < grid.angles; ++j) {
      const Configuration p = grid.point(0, i, j);
      const Vec s{p(1, 0) - p(0, 0), p(1, 1) - p(0, 1)};
      centered.push_back(two_body_configuration(sys, s, zero));
    }
  }
  const FixedTimeKernel rel = fixed_time_kernel(centered, t, sys, opts);
  const std::size_t L = grid.shifts.size();
  FixedTimeKernel K;
  K.t = t;
  K.size = m * L;
  K.k.assign(K.size * K.size, kInf);
  const double half_m_over_t = 0.5 * sys.total_mass() / t;
  for (std::size_t la = 0; la < L; ++la) {
    for (std::size_t lb = 0; lb < L; ++lb) {
      const double d0 = grid.shifts[la][0] - grid.shifts[lb][0];
      const double d1 = grid.shifts[la][1] - grid.shifts[lb][1];
      const double drift = half_m_over_t * (d0 * d0 + d1 * d1);
      for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
          K.k[(la * m + p) * K.size + lb * m + q] = rel.k[p * m + q] + drift;
        }
      }
    }
  }
  for (const auto& [p, q] : rel.failures) {
    for (std::size_t la = 0; la < L; ++la) {
      for (std::size_t lb = 0; lb < L; ++lb) K.failures.emplace_back(la * m + p, lb * m + q);
    }
  }
  return K;
}

std::vector<double> lax_oleinik(std::span<const double> u, const FixedTimeKernel& kernel) {
  const std::size_t n = kernel.size;
  if (u.size() != n) throw InvalidInput("lax_oleinik: field and kernel sizes differ");
  std::vector<double> out(n, kInf);
  for (std::size_t y = 0; y < n; ++y) {
    const double* row = kernel.k.data() + y * n;
    for (std::size_t x = 0; x < n; ++x) out[x] = std::min(out[x], u[y] + row[x]);
  }
  return out;
}

SampledField lax_oleinik(const SampledField& u, const FixedTimeKernel& kernel) {
  return u.with_values(lax_oleinik(u.values(), kernel));
}

DominationProbe::DominationProbe(const std::vector<Configuration>& points,
                                 std::vector<std::pair<std::size_t, std::size_t>> pairs,
                                 const MassSystem& sys, const MinimizeOptions& opts,
                                 PhiCache* cache)
    : pairs_(std::move(pairs)), phi_(pairs_.size(), kInf) {
  for (const auto& [i, j] : pairs_) {
    if (i >= points.size() || j >= points.size()) throw InvalidInput("DominationProbe: index out of range");
  }
  detail::parallel_for(pairs_.size(), [&](std::size_t q) {
    try {
      phi_[q] = phi_value(points[pairs_[q].first], points[pairs_[q].second], sys, opts, cache);
    } catch (const DomainError&) {
      phi_[q] = kInf;
    }
  });
  skipped_ = static_cast<std::size_t>(std::count(phi_.begin(), phi_.end(), kInf));
}

double DominationProbe::operator()(std::span<const double> u) const {
  double worst = -kInf;
  for (std::size_t q = 0; q < pairs_.size(); ++q) {
    if (!std::isfinite(phi_[q])) continue;
    worst = std::max(worst, u[pairs_[q].second] - u[pairs_[q].first] - phi_[q]);
  }
  return worst;
}

FixedPointResult fixed_point_iterate(const SampledField& u0, const FixedTimeKernel& kernel,
                                     const FixedPointOptions& fp, const DominationProbe* probe) {
  if (fp.base >= kernel.size) throw InvalidInput("fixed_point_iterate: base index out of range");
  FixedPointResult res{u0, {}, std::numeric_limits<double>::quiet_NaN(), false, false, {}};
  if (probe != nullptr) {
    res.initial_domination = (*probe)(u0.values());
    if (res.initial_domination > fp.domination_tol) {
      throw PreconditionError("fixed_point_iterate: initial field is not dominated (violation " +
                              fmt(res.initial_domination) + ")");
    }
  }
  std::vector<double> u = u0.values();
  for (std::size_t k = 1; k <= fp.max_iter; ++k) {
    std::vector<double> next = lax_oleinik(u, kernel);
    const double base = next[fp.base];
    if (!std::isfinite(base)) {
      res.message = "base point unreachable";
      res.diverged = true;
      break;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] -= base;
      change = std::max(change, std::abs(next[i] - u[i]));
    }
    IterationRecord rec{k, change, std::numeric_limits<double>::quiet_NaN()};
    if (probe != nullptr) rec.domination = (*probe)(next);
    res.history.push_back(rec);
    u.swap(next);
    if (!std::isfinite(change)) {
      res.diverged = true;
      res.message = "non-finite sweep";
      break;
    }
    if (change <= fp.tol) {
      res.converged = true;
      break;
    }
    if (res.history.size() > 10) {
      const double before = res.history[res.history.size() - 11].sup_change;
      if (change > 10.0 * before) {
        res.diverged = true;
        res.message = "sup-change grew tenfold over ten sweeps";
        break;
      }
    }
  }
  if (!res.converged && !res.diverged && res.message.empty()) res.message = "iteration cap reached";
  bool finite = std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); });
  if (finite) res.field = u0.with_values(u);
  return res;
}

// ---------------------------------------------------------------------------
// Busemann

BusemannResult busemann(std::span<const Configuration> ray, const Configuration& x0,
                        std::span<const Configuration> points, const MassSystem& sys,
                        const MinimizeOptions& opts, PhiCache* cache) {
  if (ray.empty()) throw InvalidInput("busemann: empty ray");
  BusemannResult res;
  const double beta = kepler_exponent(sys.alpha());
  for (std::size_t n = 0; n < ray.size(); ++n) {
    const Configuration& z = ray[n];
    if (min_separation(z) == 0.0) throw InvalidInput("busemann: ray point at a collision");
    std::vector<double> phi(points.size() + 1, 0.0);
    std::vector<std::string> err(points.size() + 1);
    detail::parallel_for(points.size() + 1, [&](std::size_t i) {
      const Configuration& x = i == 0 ? x0 : points[i - 1];
      try {
        phi[i] = phi_value(z, x, sys, opts, cache);
      } catch (const DomainError& e) {
        err[i] = e.what();
      }
    });
    auto bad = std::find_if(err.begin(), err.end(), [](const std::string& s) { return !s.empty(); });
    if (bad != err.end()) {
      res.messages.push_back("ray point " + std::to_string(n) + " dropped: " + *bad);
      break;
    }
    std::vector<double> u(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) u[i] = phi[i + 1] - phi[0];
    if (!res.iterates.empty()) {
      double tail = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) tail = std::max(tail, std::abs(u[i] - res.iterates.back()[i]));
      res.tails.push_back(tail);
    }
    res.iterates.push_back(std::move(u));
    res.scales.push_back(mass_norm(split(z, sys).centered, sys));
  }
  res.truncated_at = res.iterates.size();
  if (res.iterates.empty()) return res;

  // Lagrange extrapolation to h = 0 through (h_n, u_n), h_n = scale_n^-beta.
  const std::size_t m = res.iterates.size();
  std::vector<double> h(m);
  for (std::size_t n = 0; n < m; ++n) h[n] = std::pow(res.scales[n], -beta);
  std::vector<double> w(m, 1.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a != b) w[a] *= h[b] / (h[b] - h[a]);
    }
  }
  res.extrapolated.assign(points.size(), 0.0);
  for (std::size_t n = 0; n < m; ++n) {
    for (std::size_t i = 0; i < points.size(); ++i) res.extrapolated[i] += w[n] * res.iterates[n][i];
  }
  return res;
}

// ---------------------------------------------------------------------------
// Supercritical lift

SupercriticalLift supercritical_lift(std::shared_ptr<const Field> u0, Vec r, const MassSystem& sys) {
  const double r2 = dot(r, r);
  auto f = std::make_shared<const LiftedField>(std::move(u0), std::move(r), sys);
  return {std::move(f), 0.5 * r2 / sys.total_mass()};
}

// ---------------------------------------------------------------------------
// Calibrated curves

std::optional<Covector> field_differential(const Field& u, const Configuration& x,
                                           const CalibrationOptions& copts) {
  if (auto d = u.differential(x)) return d;
  double scale = std::max(1.0, diameter(x));
  const double sep = min_separation(x);
  if (sep > 0.0 && sep < scale) scale = sep;
  const double h = copts.fd_step * scale;
  const ScalarFn f = [&u](const Configuration& y) { return u.value(y); };
  const Covector d1 = numerical_differential(f, x, h);
  const Covector d2 = numerical_differential(f, x, 0.5 * h);
  const double size = std::max(max_norm(d2), std::numeric_limits<double>::min());
  if (!d1.all_finite() || !d2.all_finite() || max_norm(d1 - d2) > copts.fd_instability * size) {
    return std::nullopt;
  }
  // Richardson step on the two fourth-order stencils
  return (16.0 / 15.0) * d2 - (1.0 / 15.0) * d1;
}

double field_hj_residual(const Field& u, const Configuration& x, const MassSystem& sys,
                         double level, const CalibrationOptions& copts) {
  auto d = field_differential(u, x, copts);
  if (!d) throw DomainError("field_hj_residual: unstable differential");
  return hamiltonian(x, *d, sys) - level;
}

CalibrationReport calibrated_curve(const Field& u, const Configuration& x, const MassSystem& sys,
                                   const CalibrationOptions& copts) {
  sys.check(x);
  if (min_separation(x) == 0.0) throw InvalidInput("calibrated_curve: start at a collision");
  if (!(copts.horizon >= 0.0) || !(copts.step > 0.0)) {
    throw InvalidInput("calibrated_curve: need horizon >= 0 and step > 0");
  }
  CalibrationReport rep;
  rep.curve = Curve::point(x);
  if (copts.horizon == 0.0) return rep;

  const auto steps = static_cast<std::size_t>(std::ceil(copts.horizon / copts.step - 1e-9));
  const double dt = copts.horizon / static_cast<double>(steps);
  std::vector<Configuration> nodes{x};
  std::vector<double> residual;

  auto velocity = [&](const Configuration& y) -> std::optional<Configuration> {
    if (min_separation(y) == 0.0) return std::nullopt;
    auto d = field_differential(u, y, copts);
    if (!d) return std::nullopt;
    return legendre_inv(*d, sys);
  };

  try {
    for (std::size_t s = 0; s < steps; ++s) {
      const Configuration& y = nodes.back();
      auto k1 = velocity(y);
      if (k1) residual.push_back(std::abs(hamiltonian(y, legendre(*k1, sys), sys)));
      auto k2 = k1 ? velocity(y + (0.5 * dt) * *k1) : std::nullopt;
      auto k3 = k2 ? velocity(y + (0.5 * dt) * *k2) : std::nullopt;
      auto k4 = k3 ? velocity(y + dt * *k3) : std::nullopt;
      if (!k4) {
        rep.aborted = true;
        rep.message = "differential unavailable or unstable at t = " + fmt(dt * static_cast<double>(s));
        break;
      }
      nodes.push_back(y + (dt / 6.0) * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4));
    }
    if (!rep.aborted) {
      auto k = velocity(nodes.back());
      if (k) residual.push_back(std::abs(hamiltonian(nodes.back(), legendre(*k, sys), sys)));
    }
  } catch (const OutOfReach& e) {
    rep.aborted = true;
    rep.message = std::string("left the field's domain: ") + e.what();
  }

  rep.time_reached = dt * static_cast<double>(nodes.size() - 1);
  if (nodes.size() < 2) return rep;
  rep.curve = Curve(0.0, dt, nodes);
  const double a = action(rep.curve, sys).total;
  const double du = u.value(nodes.back()) - u.value(nodes.front());
  rep.u_range = std::abs(du);
  rep.defect = std::abs(du - a);
  const Vec g0 = center_of_mass(nodes.front(), sys);
  double stt = 0.0;
  double std_ = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    Vec g = center_of_mass(nodes[j], sys);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] -= g0[c];
    const double d = euclidean_norm(g);
    rep.com_drift = std::max(rep.com_drift, d);
    const double t = dt * static_cast<double>(j);
    stt += t * t;
    std_ += t * d;
  }
  rep.com_drift_slope = stt > 0.0 ? std_ / stt : 0.0;
  for (double r : residual) rep.energy_residual = std::max(rep.energy_residual, r);
  return rep;
}

double calibration_gap(const CalibrationReport& report, const MassSystem& sys,
                       const MinimizeOptions& opts, PhiCache* cache) {
  if (report.curve.degenerate()) return 0.0;
  return action(report.curve, sys).total -
         phi_value(report.curve.front(), report.curve.back(), sys, opts, cache);
}

// ---------------------------------------------------------------------------
// Invariance and the drift inequality

InvarianceReport translation_invariance_check(const Field& u, std::span<const Vec> shifts,
                                              std::span<const Configuration> points,
                                              const MassSystem& sys) {
  InvarianceReport rep;
  double lo = kInf;
  double hi = -kInf;
  for (const auto& x : points) {
    sys.check(x);
    double ux = 0.0;
    try {
      ux = u.value(x);
    } catch (const OutOfReach&) {
      rep.skipped += shifts.size();
      continue;
    }
    lo = std::min(lo, ux);
    hi = std::max(hi, ux);
    for (const auto& s : shifts) {
      if (s.size() != sys.dim()) throw InvalidInput("translation_invariance_check: shift dimension");
      try {
        rep.max_deviation = std::max(rep.max_deviation, std::abs(u.value(translate(x, s)) - ux));
        ++rep.evaluated;
      } catch (const OutOfReach&) {
        ++rep.skipped;
      }
    }
  }
  rep.oscillation = hi > lo ? hi - lo : 0.0;
  rep.normalized = rep.oscillation > 0.0 ? rep.max_deviation / rep.oscillation : 0.0;
  return rep;
}

LemmaTable lemma_inequality_probe(std::span<const double> v, std::span<const double> t_list,
                                  double eta_hat, const MassSystem& sys) {
  if (v.size() != sys.dim()) throw InvalidInput("lemma_inequality_probe: v dimension");
  if (!(eta_hat > 0.0)) throw InvalidInput("lemma_inequality_probe: eta_hat must be positive");
  const double speed = euclidean_norm(v);
  const double m = sys.total_mass();
  LemmaTable table;
  for (double t : t_list) {
    if (!(t > 0.0)) throw InvalidInput("lemma_inequality_probe: durations must be positive");
    table.rows.push_back({t, 0.5 * t * m * speed * speed, std::sqrt(t) * eta_hat * std::sqrt(speed)});
  }
  if (speed > 0.0) table.crossing = 4.0 * eta_hat * eta_hat / (m * m * speed * speed * speed);
  return table;
}

}  // namespace nbwk
