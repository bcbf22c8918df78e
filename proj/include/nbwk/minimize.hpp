#pragma once

// Direct-method minimization of the discrete action.
//
//   phi(x, y, T)  fixed endpoints, fixed duration      -> minimize_fixed_time
//   phi(x, y)     = inf_T phi(x, y, T), free duration   -> free_time_potential
//
// Every returned value is the action of an explicit discrete curve, hence an
// upper bound on the continuous minimum that converges as the node count grows.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nbwk/action.hpp"
#include "nbwk/config_space.hpp"
#include "nbwk/curve.hpp"

namespace nbwk {

class PhiCache;

struct MinimizeOptions {
  std::size_t nodes = 64;        // segments per curve
  double tol = 1e-6;             // on the relative gradient norm, see MinimizeResult
  std::size_t max_iter = 4000;
  std::size_t memory = 12;       // L-BFGS pairs
  std::size_t t_scan = 24;       // coarse log-spaced duration samples
  double t_span = 100.0;         // scan covers [T_c / t_span, T_c * t_span]
  double t_rel_tol = 1e-4;       // golden-section stop: bracket width in log T
  std::size_t max_bracket_extensions = 8;
  Quadrature quadrature = Quadrature::midpoint;
  double sep_floor = 1e-6;       // relative interior separation floor (marchal_check)
  std::uint64_t seed = 0x6e626f6479ULL;
};

struct MinimizeResult {
  Curve curve;
  double value = 0.0;       // action(curve).total
  /// sqrt(g . P^-1 g / value) with P the kinetic Hessian; its square estimates
  /// twice the relative gap to the local minimum.
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool perturbed = false;   // straight initial segment had to be pushed off a collision
  std::string message;
};

/// Characteristic length of a query: max(max_norm(y - x), diameter(x), diameter(y)), or 1.
double query_scale(const Configuration& x, const Configuration& y);

/// Characteristic duration sqrt(M) L / sqrt(2 U_L), U_L = sum m_i m_j L^alpha.
double characteristic_time(const Configuration& x, const Configuration& y, const MassSystem& sys);

/// Minimizes the discrete action over interior nodes starting from the straight
/// segment x -> y of duration T (perturbed off collisions when needed).
MinimizeResult minimize_fixed_time(const Configuration& x, const Configuration& y, double T,
                                   const MassSystem& sys, const MinimizeOptions& opts = {});

/// Same, starting from the nodes of `initial` (endpoints and duration taken from it).
MinimizeResult minimize_from(const Curve& initial, const MassSystem& sys,
                             const MinimizeOptions& opts = {});

struct TSample {
  double t = 0.0;
  double value = 0.0;
  bool reliable = false;
};

struct PotentialValue {
  double value = 0.0;
  double t_star = 0.0;
  Curve curve = Curve::point(Configuration(1, 1));
  std::pair<double, double> bracket{0.0, 0.0};
  bool converged = false;   // at least one reliable sample and a finished search
  bool at_edge = false;     // best duration sits on the scanned range boundary
  std::vector<TSample> samples;
  std::string message;
};

PotentialValue free_time_potential(const Configuration& x, const Configuration& y,
                                   const MassSystem& sys, const MinimizeOptions& opts = {});

/// phi(x, y) value only, served from and stored into `cache` when given.
/// Throws DomainError if the free-time search finds no reliable sample.
double phi_value(const Configuration& x, const Configuration& y, const MassSystem& sys,
                 const MinimizeOptions& opts = {}, PhiCache* cache = nullptr);

struct ConfigPair {
  Configuration x;
  Configuration y;
};

struct HolderEstimate {
  double eta_hat = 0.0;
  double exponent_fit = 0.0;     // NaN when the pair set holds no scaling family
  std::size_t families = 0;
  std::vector<double> phi;
  std::vector<double> distance;  // max_norm(y - x)
};

/// Fits the sampled potential against max_norm(y - x)^(1/2). Scaling families
/// are groups of pairs with a common left endpoint whose displacements y - x
/// are positive multiples of one another; the exponent is the pooled log-log
/// slope with one intercept per family.
HolderEstimate holder_fit(std::span<const ConfigPair> pairs, std::span<const double> phi);

HolderEstimate holder_estimate(std::span<const ConfigPair> pairs, const MassSystem& sys,
                               const MinimizeOptions& opts = {}, PhiCache* cache = nullptr);

/// max over sample pairs of phi(x, y) / max_norm(x - y). Samples closer to a
/// collision than `floor` are rejected with InvalidInput.
double lipschitz_estimate(std::span<const Configuration> samples, double floor,
                          const MassSystem& sys, const MinimizeOptions& opts = {},
                          PhiCache* cache = nullptr);

/// Smallest min_separation over the strictly interior nodes of the minimizer.
double marchal_check(const MinimizeResult& result);

struct EnergyDiagnostic {
  double energy = 0.0;         // 1/2 |v|^2 - U at the middle node, central-difference velocity
  double potential_mid = 0.0;  // U at that node
  bool reliable = false;       // false when T* is on the edge of the searched range
};

EnergyDiagnostic energy_at_optimum(const PotentialValue& pv, const MassSystem& sys);

/// Central difference (phi(x,y,T+h) - phi(x,y,T-h)) / 2h, both sides warm-started from `warm`.
double fixed_time_slope(const Curve& warm, double T, double h, const MassSystem& sys,
                        const MinimizeOptions& opts = {});

}  // namespace nbwk
