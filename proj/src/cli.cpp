#include "nbwk/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "nbwk/action.hpp"
#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/phi_cache.hpp"
#include "nbwk/random.hpp"
#include "nbwk/weak_kam.hpp"
#include "parallel.hpp"

namespace nbwk::cli {

namespace {

using io::Check;
using io::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T param(const json& raw, const char* key, T fallback) {
  if (!raw.contains(key)) return fallback;
  try {
    return raw.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("parameter '") + key + "': " + e.what());
  }
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = lo * std::pow(hi / lo, f);
  }
  return out;
}

std::string curve_csv(const Curve& c) {
  std::ostringstream os;
  if (c.degenerate()) {
    // zero-duration curves: header only
    std::ostringstream full;
    write_curve_csv(full, c);
    const std::string s = full.str();
    return s.substr(0, s.find('\n') + 1);
  }
  write_curve_csv(os, c);
  return os.str();
}

Check check(std::string name, double value, double tol, bool pass, std::string statement) {
  return {std::move(name), value, tol, pass, std::move(statement)};
}

double interior_min_separation(const Curve& c) {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < c.segments(); ++j) s = std::min(s, min_separation(c.node(j)));
  return s;
}

// ---------------------------------------------------------------------------
// verify suites

void suite_metric(const RunSpec& spec, const io::Problem& pb, PhiCache& cache, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Rng rng(spec.seed);
  const auto count = param<std::size_t>(pb.raw, "samples", 6);
  std::vector<Configuration> xs;
  for (std::size_t i = 0; i < count; ++i) xs.push_back(random_configuration(rng, sys, 1.0, 0.1));

  double self = 0.0;
  double scale = 0.0;
  for (const auto& x : xs) {
    self = std::max(self, phi_value(x, x, sys, spec.opts, &cache) / query_scale(x, x));
  }
  const std::size_t n = xs.size();
  std::vector<double> phi(n * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> ordered;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) ordered.emplace_back(i, j);
    }
  }
  detail::parallel_for(ordered.size(), [&](std::size_t q) {
    const auto [i, j] = ordered[q];
    phi[i * n + j] = phi_value(xs[i], xs[j], sys, spec.opts, &cache);
  });
  double sym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = phi[i * n + j];
      const double b = phi[j * n + i];
      sym = std::max(sym, std::abs(a - b) / std::max(a, b));
      scale = std::max({scale, a, b});
    }
  }
  double tri = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        tri = std::max(tri, phi[i * n + k] - phi[i * n + j] - phi[j * n + k]);
      }
    }
  }
  rep.checks.push_back(check("self_distance", self, 1e-6, self <= 1e-6,
                             "potential of a configuration to itself vanishes (relative to scale)"));
  rep.checks.push_back(check("symmetry_gap", sym, 1e-3, sym <= 1e-3,
                             "potential is symmetric under swapping endpoints"));
  rep.checks.push_back(check("triangle_excess", tri / scale, 1e-3, tri <= 1e-3 * scale,
                             "potential satisfies the triangle inequality (relative to scale)"));
}

std::vector<ConfigPair> holder_families(const MassSystem& sys, Rng& rng, std::size_t directions,
                                        std::size_t per_family) {
  std::vector<ConfigPair> pairs;
  const Configuration base = sys.zero();
  std::vector<Configuration> dirs;
  Vec e(sys.dim(), 0.0);
  e[0] = 1.0;
  dirs.push_back(diagonal_lift(e, sys));
  for (std::size_t d = 0; d < directions; ++d) {
    Configuration v = random_configuration(rng, sys, 1.0, 0.0);
    v *= 1.0 / max_norm(v);
    dirs.push_back(v);
  }
  for (const auto& d : dirs) {
    for (double r : logspace(1e-2, 1e2, per_family)) pairs.push_back({base, base + r * d});
  }
  return pairs;
}

void suite_holder(const RunSpec& spec, const io::Problem& pb, PhiCache& cache, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Rng rng(spec.seed);
  const auto pairs = holder_families(sys, rng, param<std::size_t>(pb.raw, "directions", 3),
                                     param<std::size_t>(pb.raw, "per_family", 9));
  const HolderEstimate he = holder_estimate(pairs, sys, spec.opts, &cache);
  const double dev = std::abs(he.exponent_fit - 0.5);
  rep.checks.push_back(check("holder_exponent_deviation", dev, 0.05, dev <= 0.05,
                             "log-log slope of the potential over scaling families is 1/2"));
  const auto fresh = param<std::size_t>(pb.raw, "fresh", 10);
  double worst = 0.0;
  for (std::size_t i = 0; i < fresh; ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.0);
    Configuration d = random_configuration(rng, sys, 1.0, 0.0);
    d *= std::exp(std::log(1e-2) + rng.uniform() * std::log(1e4)) / max_norm(d);
    const double phi = phi_value(x, x + d, sys, spec.opts, &cache);
    worst = std::max(worst, phi / (he.eta_hat * std::sqrt(max_norm(d))));
  }
  rep.checks.push_back(check("holder_bound_ratio", worst, 1.0, worst <= 1.0,
                             "fresh samples respect phi <= eta * max_norm^(1/2)"));
  rep.extra["eta_hat"] = he.eta_hat;
  rep.extra["exponent_fit"] = he.exponent_fit;
  rep.extra["families"] = he.families;
}

void suite_marchal(const RunSpec& spec, const io::Problem& pb, PhiCache&, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Rng rng(spec.seed);
  const auto count = param<std::size_t>(pb.raw, "instances", 10);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t converged = 0;
  json sep = json::array();
  for (std::size_t i = 0; i < count; ++i) {
    Configuration x = random_configuration(rng, sys, 1.0, 0.1);
    for (std::size_t a = 0; a < sys.dim(); ++a) x(1, a) = x(0, a);
    const Configuration y = random_configuration(rng, sys, 1.0, 0.1);
    const PotentialValue pv = free_time_potential(x, y, sys, spec.opts);
    if (!pv.converged) continue;
    ++converged;
    const double s = interior_min_separation(pv.curve);
    sep.push_back(s);
    worst = std::min(worst, s);
  }
  rep.checks.push_back(check("interior_min_separation", worst, 0.0, converged > 0 && worst > 0.0,
                             "minimizers from a collision endpoint avoid collisions at interior times"));
  rep.extra["converged"] = converged;
  rep.extra["separations"] = sep;
}

void suite_invariance(const RunSpec& spec, const io::Problem& pb, PhiCache&, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Rng rng(spec.seed);
  auto u0 = std::make_shared<const KeplerField>(sys, 1.0);
  std::vector<Configuration> pts;
  for (std::size_t i = 0; i < param<std::size_t>(pb.raw, "samples", 20); ++i) {
    pts.push_back(random_configuration(rng, sys, 1.0, 0.05));
  }
  std::vector<Vec> shifts;
  for (std::size_t i = 0; i < 10; ++i) {
    Vec s = random_unit_vector(rng, sys.dim());
    for (double& c : s) c *= rng.uniform();
    shifts.push_back(s);
  }
  const InvarianceReport a = translation_invariance_check(*u0, shifts, pts, sys);
  rep.checks.push_back(check("closed_form_deviation", a.normalized, 1e-12, a.normalized <= 1e-12,
                             "two-body closed-form solution is translation invariant"));
  const Vec r = param<Vec>(pb.raw, "r", Vec{0.3, 0.4});
  const SupercriticalLift lift = supercritical_lift(u0, r, sys);
  const InvarianceReport b = translation_invariance_check(*lift.field, shifts, pts, sys);
  double expected = 0.0;
  for (const auto& s : shifts) expected = std::max(expected, std::abs(dot(s, r)));
  rep.checks.push_back(check("lift_deviation", b.max_deviation, 0.5 * expected,
                             b.max_deviation >= 0.5 * expected && expected > 0.0,
                             "lift by <G(x), r> with r != 0 is not translation invariant"));
}

void suite_corollary(const RunSpec& spec, const io::Problem& pb, PhiCache&, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Rng rng(spec.seed);
  const Vec r = param<Vec>(pb.raw, "r", Vec{0.3, 0.4});
  const SupercriticalLift lift = supercritical_lift(std::make_shared<const KeplerField>(sys, 1.0), r, sys);
  std::vector<double> levels;
  for (std::size_t i = 0; i < param<std::size_t>(pb.raw, "samples", 100); ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.05);
    levels.push_back(field_hj_residual(*lift.field, x, sys));
  }
  const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
  double mean = 0.0;
  for (double l : levels) mean += l;
  mean /= static_cast<double>(levels.size());
  const double spread = (*hi - *lo) / std::abs(mean);
  const double r2 = dot(r, r);
  const double m = sys.total_mass();
  const std::vector<std::pair<std::string, double>> candidates{
      {"half_r2", 0.5 * r2}, {"half_M_r2", 0.5 * m * r2}, {"half_r2_over_M", 0.5 * r2 / m}};
  std::vector<std::string> matches;
  json cand = json::object();
  for (const auto& [name, v] : candidates) {
    cand[name] = v;
    if (std::abs(mean - v) <= 1e-4 * std::abs(v)) matches.push_back(name);
  }
  rep.checks.push_back(check("level_spread", spread, 1e-4, spread <= 1e-4,
                             "Hamiltonian of the lifted solution is constant in x"));
  rep.checks.push_back(check("matching_constants", static_cast<double>(matches.size()), 1.0,
                             matches.size() == 1, "exactly one candidate constant matches the level"));
  rep.extra["measured_level"] = mean;
  rep.extra["candidates"] = cand;
  rep.extra["winner"] = matches.size() == 1 ? matches.front() : std::string("none");
  rep.extra["predicted_level"] = lift.predicted_level;
}

void suite_lemma(const RunSpec& spec, const io::Problem& pb, PhiCache& cache, io::Report& rep) {
  const MassSystem& sys = pb.sys;
  Vec v = param<Vec>(pb.raw, "v", Vec(sys.dim(), 0.0));
  if (v.size() != sys.dim()) throw InvalidInput("parameter 'v': ambient dimension required");
  if (euclidean_norm(v) == 0.0 && !pb.raw.contains("v")) v[0] = 1.0;
  double eta = param<double>(pb.raw, "eta_hat", kNaN);
  if (std::isnan(eta)) {
    Rng rng(spec.seed);
    eta = holder_estimate(holder_families(sys, rng, 0, 10), sys, spec.opts, &cache).eta_hat;
  }
  const std::vector<double> ts = logspace(1e-3, 1e3, 13);
  const LemmaTable tab = lemma_inequality_probe(v, ts, eta, sys);
  json rows = json::array();
  std::ostringstream csv;
  csv << "t,lhs,rhs\n";
  bool consistent = true;
  for (const auto& row : tab.rows) {
    rows.push_back({{"t", row.t}, {"lhs", row.lhs}, {"rhs", row.rhs}});
    csv << g17(row.t) << ',' << g17(row.lhs) << ',' << g17(row.rhs) << '\n';
    if (std::isfinite(tab.crossing)) {
      const bool beyond = row.t > tab.crossing * (1.0 + 1e-12);
      const bool before = row.t < tab.crossing * (1.0 - 1e-12);
      if ((beyond && !(row.lhs > row.rhs)) || (before && !(row.lhs <= row.rhs))) consistent = false;
    } else if (row.lhs > row.rhs) {
      consistent = false;
    }
  }
  io::write_text(spec.out / "lemma_table.csv", csv.str());
  rep.checks.push_back(check("crossing_consistent", consistent ? 0.0 : 1.0, 0.0, consistent,
                             "kinetic drift cost exceeds the Hoelder bound exactly beyond the crossing"));
  if (euclidean_norm(v) > 0.0) {
    Vec v2 = v;
    for (double& c : v2) c *= 2.0;
    const double ratio = lemma_inequality_probe(v2, ts, eta, sys).crossing / tab.crossing;
    rep.checks.push_back(check("doubling_ratio_error", std::abs(ratio - 0.125), 1e-12,
                               std::abs(ratio - 0.125) <= 1e-12,
                               "doubling the drift speed divides the crossing duration by 8"));
  }
  rep.extra["eta_hat"] = eta;
  rep.extra["crossing"] = std::isfinite(tab.crossing) ? json(tab.crossing) : json(nullptr);
  rep.extra["rows"] = rows;
}

std::shared_ptr<const Field> field_from_spec(const json& f, const MassSystem& sys, Vec* lift_r) {
  const std::string kind = f.value("kind", std::string("kepler"));
  if (kind == "kepler") return std::make_shared<const KeplerField>(sys, f.value("sign", 1.0));
  if (kind == "lift") {
    auto base = std::make_shared<const KeplerField>(sys, f.value("sign", 1.0));
    Vec r = f.at("r").get<Vec>();
    if (lift_r != nullptr) *lift_r = r;
    return supercritical_lift(base, r, sys).field;
  }
  if (kind == "file") {
    return std::make_shared<const SampledField>(io::field_from_json(io::read_json(f.at("path").get<std::string>())));
  }
  throw InvalidInput("unknown field kind '" + kind + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

Outcome cmd_phi(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "phi";
  out.report.seed = spec.seed;
  const MassSystem& sys = pb.sys;
  if (!pb.raw.contains("target")) throw InvalidInput("phi: problem needs 'target' positions");
  const Configuration y = io::positions_from_json(pb.raw.at("target"), sys);
  PhiCache cache(spec.cache);

  const PotentialValue pv = free_time_potential(pb.x, y, sys, spec.opts);
  out.report.extra["t_star"] = pv.t_star;
  out.report.extra["bracket"] = {pv.bracket.first, pv.bracket.second};
  out.report.extra["at_edge"] = pv.at_edge;
  out.report.extra["samples"] = pv.samples.size();
  if (!pv.message.empty()) out.report.extra["message"] = pv.message;
  out.report.checks.push_back(check("converged", pv.converged ? 1.0 : 0.0, 1.0, pv.converged,
                                    "free-time search found a reliable minimum"));
  if (!pv.converged) {
    out.report.extra["phi"] = pv.value;
    out.code = kNonConvergence;
    log << "phi: no reliable minimum (" << pv.message << ")\n";
    return out;
  }
  double value = pv.value;
  if (!(pb.x == y)) {
    const std::string key = PhiCache::make_key(pb.x, y, sys, spec.opts);
    cache.merge({key, pv.value, pv.t_star, spec.opts.nodes, spec.opts.tol});
    value = cache.lookup(key)->value;
  }
  const double swapped = phi_value(y, pb.x, sys, spec.opts, &cache);
  const double gap = value == swapped ? 0.0 : std::abs(value - swapped) / std::max(value, swapped);
  out.report.checks.push_back(check("symmetry_gap", gap, 1e-3, gap <= 1e-3,
                                    "potential is symmetric under swapping endpoints"));
  out.report.extra["phi"] = value;
  out.report.extra["phi_swapped"] = swapped;
  io::write_text(spec.out / "phi_curve.csv", curve_csv(pv.curve));
  cache.flush();
  log << "phi = " << g17(value) << "  T* = " << g17(pv.t_star) << '\n';
  return out;
}

Outcome cmd_table(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "table";
  out.report.seed = spec.seed;
  const MassSystem& sys = pb.sys;
  if (!pb.raw.contains("configurations")) throw InvalidInput("table: problem needs 'configurations'");
  std::vector<Configuration> xs;
  for (const auto& c : pb.raw.at("configurations")) xs.push_back(io::positions_from_json(c, sys));
  if (xs.size() < 2) throw InvalidInput("table: at least two configurations");
  PhiCache cache(spec.cache);

  const std::size_t n = xs.size();
  std::vector<double> m(n * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> upper;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) upper.emplace_back(i, j);
  }
  std::vector<std::string> errors(upper.size());
  detail::parallel_for(upper.size(), [&](std::size_t q) {
    const auto [i, j] = upper[q];
    try {
      m[i * n + j] = m[j * n + i] = phi_value(xs[i], xs[j], sys, spec.opts, &cache);
    } catch (const DomainError& e) {
      m[i * n + j] = m[j * n + i] = kNaN;
      errors[q] = e.what();
    }
  });
  json failures = json::array();
  for (std::size_t q = 0; q < upper.size(); ++q) {
    if (!errors[q].empty()) failures.push_back({{"i", upper[q].first}, {"j", upper[q].second}, {"error", errors[q]}});
  }

  double scale = 0.0;
  for (double v : m) {
    if (std::isfinite(v)) scale = std::max(scale, v);
  }
  const double tol = param<double>(pb.raw, "triangle_tol", 1e-3);
  std::size_t violations = 0;
  double excess = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        const double e = m[i * n + k] - m[i * n + j] - m[j * n + k];
        if (!std::isfinite(e)) continue;
        excess = std::max(excess, e);
        if (e > tol * scale) ++violations;
      }
    }
  }
  std::ostringstream csv;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) csv << (j ? "," : "") << g17(m[i * n + j]);
    csv << '\n';
  }
  csv << "# triangle_violations=" << violations << " max_excess=" << g17(excess)
      << " tolerance=" << g17(tol * scale) << '\n';
  io::write_text(spec.out / "table.csv", csv.str());
  out.report.checks.push_back(check("triangle_violations", static_cast<double>(violations), 0.0,
                                    violations == 0, "pairwise potentials satisfy the triangle inequality"));
  out.report.extra["failures"] = failures;
  out.report.extra["max_excess"] = excess;
  cache.flush();
  if (!failures.empty()) out.code = kNonConvergence;
  log << "table: " << n << " configurations, " << failures.size() << " failed cells, " << violations
      << " triangle violations\n";
  return out;
}

Outcome cmd_wkam(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "wkam";
  out.report.seed = spec.seed;
  const MassSystem& sys = pb.sys;
  if (!pb.raw.contains("grid")) throw InvalidInput("wkam: problem needs a 'grid'");
  const PolarGrid grid = io::grid_from_json(pb.raw.at("grid"));
  if (!(grid.system() == sys)) throw InvalidInput("wkam: grid masses differ from the problem");
  const json w = pb.raw.value("wkam", json::object());
  const std::string mode = param<std::string>(w, "mode", "fixed-point");
  const std::vector<Configuration> pts = grid.points();
  PhiCache cache(spec.cache);

  if (mode == "fixed-point") {
    const double t = param<double>(w, "t", 1.0);
    FixedPointOptions fp;
    fp.max_iter = param<std::size_t>(w, "max_iter", fp.max_iter);
    fp.tol = param<double>(w, "tol", fp.tol);
    fp.base = param<std::size_t>(w, "base", 0);
    fp.domination_tol = param<double>(w, "domination_tol", fp.domination_tol);
    const std::string seed_field = param<std::string>(w, "seed_field", "zero");
    SampledField u0 = SampledField::sample(KeplerField(sys, -1.0), grid);
    if (seed_field == "zero") {
      u0 = u0.with_values(std::vector<double>(pts.size(), 0.0));
    } else if (seed_field != "kepler") {
      throw InvalidInput("wkam: seed_field must be 'zero' or 'kepler'");
    }
    Rng rng(spec.seed);
    std::vector<std::pair<std::size_t, std::size_t>> probe_pairs;
    const auto n_probe = param<std::size_t>(w, "probe_pairs", 200);
    while (probe_pairs.size() < n_probe) {
      const std::size_t i = rng.next() % pts.size();
      const std::size_t j = rng.next() % pts.size();
      if (i != j) probe_pairs.emplace_back(i, j);
    }
    const DominationProbe probe(pts, probe_pairs, sys, spec.opts, &cache);
    const FixedTimeKernel kernel = fixed_time_kernel(grid, t, spec.opts);
    const FixedPointResult res = fixed_point_iterate(u0, kernel, fp, &probe);

    std::ostringstream hist;
    hist << "iteration,sup_change,domination\n";
    for (const auto& h : res.history) {
      hist << h.iteration << ',' << g17(h.sup_change) << ',' << g17(h.domination) << '\n';
    }
    io::write_text(spec.out / "wkam_history.csv", hist.str());
    io::write_json(spec.out / "wkam_field.json", io::to_json(res.field));

    const double dom = res.history.empty() ? res.initial_domination : res.history.back().domination;
    out.report.checks.push_back(check("converged", res.converged ? 1.0 : 0.0, 1.0, res.converged,
                                      "renormalized Lax-Oleinik iteration reached a fixed point"));
    out.report.checks.push_back(check("domination", dom, fp.domination_tol, dom <= fp.domination_tol,
                                      "fixed point is dominated by the free-time potential"));
    if (grid.shifts.size() > 1) {
      std::vector<Configuration> base(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(grid.layer_size()));
      std::vector<Vec> shifts;
      for (std::size_t l = 1; l < grid.shifts.size(); ++l) {
        Vec s = grid.shifts[l];
        for (std::size_t a = 0; a < s.size(); ++a) s[a] -= grid.shifts[0][a];
        shifts.push_back(s);
      }
      const InvarianceReport inv = translation_invariance_check(res.field, shifts, base, sys);
      out.report.checks.push_back(check("translation_deviation", inv.normalized, 1e-2, inv.normalized <= 1e-2,
                                        "fixed point is invariant under translations"));
    }
    out.report.extra["iterations"] = res.history.size();
    out.report.extra["kernel_failures"] = kernel.failures.size();
    out.report.extra["probe_skipped"] = probe.skipped();
    if (!res.message.empty()) out.report.extra["message"] = res.message;
    if (res.diverged) {
      out.code = kDivergence;
    } else if (!res.converged) {
      out.code = kNonConvergence;
    }
    log << "wkam fixed-point: " << res.history.size() << " sweeps, "
        << (res.converged ? "converged" : res.message) << '\n';
  } else if (mode == "busemann") {
    const auto scales = param<std::vector<double>>(w, "ray", {4.0, 16.0, 64.0});
    const double angle = param<double>(w, "ray_angle", 0.0);
    const Vec zero(2, 0.0);
    std::vector<Configuration> ray;
    for (double l : scales) ray.push_back(two_body_configuration(sys, Vec{l * std::cos(angle), l * std::sin(angle)}, zero));
    const BusemannResult b = busemann(ray, pb.x, pts, sys, spec.opts, &cache);
    std::ostringstream hist;
    hist << "ray_index,scale,tail\n";
    for (std::size_t n = 0; n < b.iterates.size(); ++n) {
      hist << n << ',' << g17(b.scales[n]) << ',' << (n == 0 ? std::string("nan") : g17(b.tails[n - 1])) << '\n';
    }
    io::write_text(spec.out / "wkam_history.csv", hist.str());
    if (!b.iterates.empty()) {
      io::write_json(spec.out / "wkam_field.json",
                     io::to_json(SampledField(pts, b.extrapolated, Interpolation::simplex_linear, grid)));
    }
    bool decreasing = b.tails.size() + 1 == scales.size();
    for (std::size_t n = 1; n < b.tails.size(); ++n) decreasing = decreasing && b.tails[n] < b.tails[n - 1];
    out.report.checks.push_back(check("tails_decreasing", decreasing ? 1.0 : 0.0, 1.0, decreasing,
                                      "Cauchy tails of the ray iterates decrease"));
    out.report.extra["tails"] = b.tails;
    out.report.extra["messages"] = b.messages;
    if (b.truncated_at < scales.size()) out.code = kNonConvergence;
    log << "wkam busemann: " << b.truncated_at << " ray points\n";
  } else {
    throw InvalidInput("wkam: mode must be 'fixed-point' or 'busemann'");
  }
  cache.flush();
  return out;
}

Outcome cmd_verify(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "verify";
  out.report.seed = spec.seed;
  const std::string suite = param<std::string>(pb.raw, "suite", "");
  out.report.extra["suite"] = suite;
  PhiCache cache(spec.cache);
  if (suite == "metric") {
    suite_metric(spec, pb, cache, out.report);
  } else if (suite == "holder") {
    suite_holder(spec, pb, cache, out.report);
  } else if (suite == "marchal") {
    suite_marchal(spec, pb, cache, out.report);
  } else if (suite == "invariance") {
    suite_invariance(spec, pb, cache, out.report);
  } else if (suite == "corollary") {
    suite_corollary(spec, pb, cache, out.report);
  } else if (suite == "lemma") {
    suite_lemma(spec, pb, cache, out.report);
  } else {
    throw InvalidInput("verify: unknown suite '" + suite +
                       "' (metric, holder, marchal, invariance, corollary, lemma)");
  }
  cache.flush();
  for (const auto& c : out.report.checks) {
    log << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << g17(c.value) << '\n';
  }
  if (!out.report.all_pass()) out.code = kNonConvergence;
  return out;
}

Outcome cmd_calibrate(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "calibrate";
  out.report.seed = spec.seed;
  const MassSystem& sys = pb.sys;
  Vec lift_r;
  const auto u = field_from_spec(pb.raw.value("field", json::object()), sys, &lift_r);
  CalibrationOptions co;
  co.horizon = param<double>(pb.raw, "horizon", co.horizon);
  co.step = param<double>(pb.raw, "step", co.step);
  const CalibrationReport rep = calibrated_curve(*u, pb.x, sys, co);
  io::write_text(spec.out / "calibrate_curve.csv", curve_csv(rep.curve));
  const double range_tol = 1e-4 * rep.u_range;
  const bool invariant = lift_r.empty() || euclidean_norm(lift_r) == 0.0;
  if (invariant) {
    out.report.checks.push_back(check("calibration_defect", rep.defect, range_tol, rep.defect <= range_tol,
                                      "action along the curve equals the increase of u"));
    out.report.checks.push_back(check("com_drift", rep.com_drift, 1e-6, rep.com_drift <= 1e-6,
                                      "calibrated curves of an invariant solution keep the center of mass"));
    out.report.checks.push_back(check("energy_residual", rep.energy_residual, 1e-6, rep.energy_residual <= 1e-6,
                                      "H(x, du) vanishes along the curve"));
  } else {
    out.report.extra["expected_slope"] = euclidean_norm(lift_r) / sys.total_mass();
  }
  out.report.extra["field"] = u->describe();
  out.report.extra["defect"] = rep.defect;
  out.report.extra["u_range"] = rep.u_range;
  out.report.extra["com_drift"] = rep.com_drift;
  out.report.extra["com_drift_slope"] = rep.com_drift_slope;
  out.report.extra["energy_residual"] = rep.energy_residual;
  out.report.extra["time_reached"] = rep.time_reached;
  if (rep.aborted) {
    out.report.extra["message"] = rep.message;
    out.code = kCalibrationAbort;
  }
  log << "calibrate: defect " << g17(rep.defect) << ", com drift " << g17(rep.com_drift) << '\n';
  return out;
}

Outcome cmd_kepler(const RunSpec& spec, const io::Problem& pb, std::ostream& log) {
  Outcome out;
  out.report.command = "kepler";
  out.report.seed = spec.seed;
  const MassSystem& sys = pb.sys;
  const KeplerField u(sys, 1.0);
  Rng rng(spec.seed);
  double worst = 0.0;
  const auto samples = param<std::size_t>(pb.raw, "samples", 1000);
  for (std::size_t i = 0; i < samples; ++i) {
    const Configuration x = random_configuration(rng, sys, 1.0, 0.05);
    worst = std::max(worst, std::abs(field_hj_residual(u, x, sys)));
  }
  out.report.checks.push_back(check("hj_residual", worst, 1e-9, worst <= 1e-9,
                                    "closed-form two-body function solves H(x, du) = 0"));
  out.report.extra["constant"] = u.constant();
  out.report.extra["exponent"] = kepler_exponent(sys.alpha());
  log << "c = " << g17(u.constant()) << "  beta = " << g17(kepler_exponent(sys.alpha()))
      << "  max |H| = " << g17(worst) << '\n';
  return out;
}

int execute(const RunSpec& spec, std::ostream& log, std::ostream& err) {
  Outcome out;
  try {
    std::filesystem::create_directories(spec.out);
    const io::Problem pb = io::read_problem(spec.problem);
    if (spec.command == "phi") {
      out = cmd_phi(spec, pb, log);
    } else if (spec.command == "table") {
      out = cmd_table(spec, pb, log);
    } else if (spec.command == "wkam") {
      out = cmd_wkam(spec, pb, log);
    } else if (spec.command == "verify") {
      out = cmd_verify(spec, pb, log);
    } else if (spec.command == "calibrate") {
      out = cmd_calibrate(spec, pb, log);
    } else if (spec.command == "kepler") {
      out = cmd_kepler(spec, pb, log);
    } else {
      err << "unknown command '" << spec.command << "'\n";
      return kUsage;
    }
    io::write_json(spec.out / (spec.command + "_report.json"), out.report.to_json());
  } catch (const DomainError& e) {
    err << spec.command << ": " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << spec.command << ": " << e.what() << '\n';
    return kUsage;
  }
  return out.code;
}

int main(int argc, char** argv) {
  CLI::App app{"Free-time action potentials and weak KAM diagnostics for the N-body problem",
               "nbody-wkam"};
  RunSpec spec;
  app.add_option("command", spec.command, "phi | table | wkam | verify | calibrate | kepler")
      ->required()
      ->check(CLI::IsMember({"phi", "table", "wkam", "verify", "calibrate", "kepler"}));
  app.add_option("--problem", spec.problem, "problem JSON file")->required();
  app.add_option("--out", spec.out, "output directory");
  app.add_option("--seed", spec.seed, "random seed");
  app.add_option("--nodes", spec.opts.nodes, "segments per discrete curve")->check(CLI::Range(2, 1 << 20));
  app.add_option("--tol", spec.opts.tol, "relative gradient tolerance")->check(CLI::PositiveNumber);
  app.add_option("--t-scan", spec.opts.t_scan, "duration samples in the coarse scan")->check(CLI::Range(3, 10000));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kUsage;
  }
  spec.opts.seed = spec.seed;
  if (const char* env = std::getenv("NBODY_WKAM_CACHE"); env != nullptr && *env != '\0') {
    spec.cache = env;
  } else {
    spec.cache = spec.out / "phi_cache.jsonl";
  }
  return execute(spec, std::cout, std::cerr);
}

}  // namespace nbwk::cli
