#pragma once

// Dominated functions, the Lax-Oleinik operator on sampled fields and the
// diagnostics built on it.
//
// Sign conventions. u is dominated when u(y) - u(x) <= phi(x, y). The operator
//   T_t u(x) = min_y u(y) + phi(y, x, t)
// has the infall branch u = -c s^beta of the two-body problem as a fixed point
// (calibrating curves arrive at x from infinity). Time reversal maps it to the
// escape branch u = +c s^beta, whose calibrated curves leave x forward in time
// along x' = legendre_inv(d_x u); calibrated_curve integrates that direction.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbwk/config_space.hpp"
#include "nbwk/curve.hpp"
#include "nbwk/minimize.hpp"

namespace nbwk {

class PhiCache;

/// A real function on configuration space.
class Field {
 public:
  virtual ~Field() = default;
  /// Throws OutOfReach when x lies outside the region the field is defined on.
  virtual double value(const Configuration& x) const = 0;
  /// Exact differential when the representation provides one.
  virtual std::optional<Covector> differential(const Configuration& /*x*/) const {
    return std::nullopt;
  }
  virtual std::string describe() const = 0;
};

/// u(x) = sign * c * |r_1 - r_2|^beta for two bodies, c = kepler_solution_constant.
class KeplerField final : public Field {
 public:
  explicit KeplerField(const MassSystem& sys, double sign = 1.0);
  double value(const Configuration& x) const override;
  std::string describe() const override;
  double constant() const { return c_; }
  double sign() const { return sign_; }

 private:
  double c_;
  double beta_;
  double sign_;
};

/// u_r(x) = u_0(x) + <G(x), r>.
class LiftedField final : public Field {
 public:
  LiftedField(std::shared_ptr<const Field> base, Vec r, const MassSystem& sys);
  double value(const Configuration& x) const override;
  std::optional<Covector> differential(const Configuration& x) const override;
  std::string describe() const override;
  const Vec& r() const { return r_; }

 private:
  std::shared_ptr<const Field> base_;
  Vec r_;
  MassSystem sys_;
};

/// Two-body sample grid: separation vectors rho (cos theta, sin theta) with
/// radii x angles in the reduced chart, embedded as configurations whose
/// center of mass sits at each of the listed shifts (first shift usually 0).
/// Point order: shift-major, then radius, then angle.
struct PolarGrid {
  std::vector<double> masses;
  std::vector<double> radii;       // increasing, positive
  std::size_t angles = 16;         // theta_j = 2 pi j / angles
  std::vector<Vec> shifts{Vec{0.0, 0.0}};
  double alpha = -1.0;

  /// Radii geometrically spaced over [r_min, r_max].
  static PolarGrid geometric(std::vector<double> masses, double r_min, double r_max,
                             std::size_t n_radii, std::size_t angles);

  MassSystem system() const;
  std::size_t layer_size() const { return radii.size() * angles; }
  std::size_t size() const { return layer_size() * shifts.size(); }
  std::size_t index(std::size_t shift, std::size_t radius, std::size_t angle) const {
    return (shift * radii.size() + radius) * angles + angle;
  }
  Configuration point(std::size_t shift, std::size_t radius, std::size_t angle) const;
  std::vector<Configuration> points() const;
  void validate() const;
};

/// Configuration with separation r_2 - r_1 = s and center of mass `com`.
Configuration two_body_configuration(const MassSystem& sys, std::span<const double> s,
                                     std::span<const double> com);

enum class Interpolation { nearest, inverse_distance, simplex_linear };

std::string to_string(Interpolation rule);
Interpolation interpolation_from_string(const std::string& name);

/// Values on a finite point set. Grid points return their stored value
/// exactly; elsewhere the interpolation rule applies. simplex_linear needs a
/// PolarGrid and interpolates linearly on the two triangles of each
/// (radius, angle) cell within the layer whose shift matches the center of
/// mass; anything else is OutOfReach.
class SampledField final : public Field {
 public:
  SampledField(std::vector<Configuration> points, std::vector<double> values,
               Interpolation rule = Interpolation::nearest,
               std::optional<PolarGrid> grid = std::nullopt);
  /// Field sampled from u at every grid point.
  static SampledField sample(const Field& u, const PolarGrid& grid,
                             Interpolation rule = Interpolation::simplex_linear);

  double value(const Configuration& x) const override;
  std::optional<Covector> differential(const Configuration& x) const override;
  std::string describe() const override;

  const std::vector<Configuration>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }
  Interpolation rule() const { return rule_; }
  const std::optional<PolarGrid>& grid() const { return grid_; }
  SampledField with_values(std::vector<double> values) const;

 private:
  struct Cell;
  std::optional<Cell> locate(const Configuration& x) const;

  std::vector<Configuration> points_;
  std::vector<double> values_;
  Interpolation rule_;
  std::optional<PolarGrid> grid_;
  std::optional<MassSystem> sys_;
};

// ---------------------------------------------------------------------------
// Domination

struct DominationReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  std::size_t worst_pair = 0;
  std::vector<double> violation;          // per pair, NaN when skipped
  std::vector<std::size_t> skipped;       // pairs whose phi failed
  std::vector<std::string> messages;
};

/// max over pairs of u(y) - u(x) - phi(x, y).
DominationReport domination_check(const Field& u, std::span<const ConfigPair> pairs,
                                  const MassSystem& sys, const MinimizeOptions& opts = {},
                                  PhiCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Lax-Oleinik operator

/// phi(y, x, t) for every ordered pair of a point set; +inf marks pairs whose
/// minimization failed (listed in `failures`).
struct FixedTimeKernel {
  double t = 0.0;
  std::size_t size = 0;
  std::vector<double> k;                  // k[y * size + x]
  std::vector<std::pair<std::size_t, std::size_t>> failures;

  double operator()(std::size_t y, std::size_t x) const { return k[y * size + x]; }
};

/// Kernel on arbitrary points (symmetric: each unordered pair is minimized once).
FixedTimeKernel fixed_time_kernel(std::span<const Configuration> points, double t,
                                  const MassSystem& sys, const MinimizeOptions& opts = {});

/// Kernel on a PolarGrid. The discrete action splits exactly into the centered
/// motion and a linear center-of-mass drift, so only the first layer is
/// minimized and other layers add 1/2 M |a - b|^2 / t.
FixedTimeKernel fixed_time_kernel(const PolarGrid& grid, double t, const MinimizeOptions& opts = {});

/// Values of T_t u on the kernel's points: min over y of u(y) + k(y, x).
std::vector<double> lax_oleinik(std::span<const double> u, const FixedTimeKernel& kernel);
SampledField lax_oleinik(const SampledField& u, const FixedTimeKernel& kernel);

struct IterationRecord {
  std::size_t iteration = 0;
  double sup_change = 0.0;
  double domination = std::numeric_limits<double>::quiet_NaN();  // NaN when not probed
};

struct FixedPointResult {
  SampledField field;
  std::vector<IterationRecord> history;
  double initial_domination = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool diverged = false;
  std::string message;
};

/// Free-time potential on a fixed list of grid index pairs, used to probe
/// domination of grid fields without recomputing phi at every sweep.
class DominationProbe {
 public:
  DominationProbe(const std::vector<Configuration>& points,
                  std::vector<std::pair<std::size_t, std::size_t>> pairs, const MassSystem& sys,
                  const MinimizeOptions& opts = {}, PhiCache* cache = nullptr);
  /// max over probed pairs (i, j) of u_j - u_i - phi(x_i, x_j).
  double operator()(std::span<const double> u) const;
  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }
  const std::vector<double>& phi() const { return phi_; }
  std::size_t skipped() const { return skipped_; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<double> phi_;
  std::size_t skipped_ = 0;
};

struct FixedPointOptions {
  std::size_t max_iter = 200;
  double tol = 1e-6;
  std::size_t base = 0;                   // renormalization point
  double domination_tol = 1e-2;           // precondition on u0 when a probe is given; absolute
};

/// u_{k+1} = T_t u_k - (T_t u_k)(x_base) until the sup-change drops to tol,
/// the cap is hit, or the sup-change grows tenfold over ten sweeps.
/// Throws PreconditionError when the probe finds u0 undominated.
FixedPointResult fixed_point_iterate(const SampledField& u0, const FixedTimeKernel& kernel,
                                     const FixedPointOptions& fp = {},
                                     const DominationProbe* probe = nullptr);

// ---------------------------------------------------------------------------
// Busemann construction

struct BusemannResult {
  std::vector<std::vector<double>> iterates;   // u_n on the grid, one per ray point used
  std::vector<double> tails;                   // sup |u_{n+1} - u_n|
  std::vector<double> scales;                  // mass norm of the centered ray point
  std::vector<double> extrapolated;            // polynomial limit in scale^-beta
  std::size_t truncated_at = 0;                // number of ray points that succeeded
  std::vector<std::string> messages;
};

/// u_n(x) = phi(z_n, x) - phi(z_n, x0) on `points`. The limit is estimated by
/// polynomial extrapolation in h_n = scale_n^-beta, the order of the
/// leading correction for homothetic rays.
BusemannResult busemann(std::span<const Configuration> ray, const Configuration& x0,
                        std::span<const Configuration> points, const MassSystem& sys,
                        const MinimizeOptions& opts = {}, PhiCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Supercritical lift

struct SupercriticalLift {
  std::shared_ptr<const LiftedField> field;
  /// 1/2 |d<G, r>|^2 in the dual norm = 1/2 |r|^2 / M; the cross term with a
  /// translation-invariant u_0 vanishes.
  double predicted_level = 0.0;
};

SupercriticalLift supercritical_lift(std::shared_ptr<const Field> u0, Vec r, const MassSystem& sys);

// ---------------------------------------------------------------------------
// Calibrated curves

struct CalibrationOptions {
  double horizon = 10.0;
  double step = 1e-2;
  double fd_step = 1e-3;        // relative to min(max(1, diameter), min_separation)
  double fd_instability = 0.1;  // abort when h and h/2 differentials disagree by more
};

struct CalibrationReport {
  Curve curve = Curve::point(Configuration(1, 1));
  double defect = 0.0;            // |u(end) - u(start) - A|
  double u_range = 0.0;           // |u(end) - u(start)|
  double com_drift = 0.0;         // max_t |G(gamma(t)) - G(gamma(0))|
  double com_drift_slope = 0.0;   // least-squares slope of that distance in t
  double energy_residual = 0.0;   // max_t |H(gamma(t), d u)|
  bool aborted = false;
  double time_reached = 0.0;
  std::string message;
};

/// RK4 on x' = legendre_inv(d_x u) from x. Differentials come from the field
/// when exact, else from central differences checked at h against h/2.
CalibrationReport calibrated_curve(const Field& u, const Configuration& x, const MassSystem& sys,
                                   const CalibrationOptions& copts = {});

/// A(curve) - phi(curve start, curve end); nonnegative up to discretization,
/// and small when the curve is calibrated.
double calibration_gap(const CalibrationReport& report, const MassSystem& sys,
                       const MinimizeOptions& opts = {}, PhiCache* cache = nullptr);

/// d_x u exactly or by the checked central difference; nullopt when unstable.
std::optional<Covector> field_differential(const Field& u, const Configuration& x,
                                           const CalibrationOptions& copts = {});

/// H(x, d_x u) - level.
double field_hj_residual(const Field& u, const Configuration& x, const MassSystem& sys,
                         double level = 0.0, const CalibrationOptions& copts = {});

// ---------------------------------------------------------------------------
// Translation invariance and the drift inequality

struct InvarianceReport {
  double max_deviation = 0.0;   // max |u(x + delta(s)) - u(x)|
  double oscillation = 0.0;     // max - min of u over the evaluated base points
  double normalized = 0.0;      // max_deviation / oscillation (0 when oscillation is 0)
  std::size_t evaluated = 0;
  std::size_t skipped = 0;      // out-of-reach evaluations
};

InvarianceReport translation_invariance_check(const Field& u, std::span<const Vec> shifts,
                                              std::span<const Configuration> points,
                                              const MassSystem& sys);

struct LemmaRow {
  double t = 0.0;
  double lhs = 0.0;   // 1/2 T M |v|^2
  double rhs = 0.0;   // T^(1/2) eta |v|^(1/2)
};

struct LemmaTable {
  std::vector<LemmaRow> rows;
  double crossing = std::numeric_limits<double>::infinity();  // 4 eta^2 / (M^2 |v|^3)
};

LemmaTable lemma_inequality_probe(std::span<const double> v, std::span<const double> t_list,
                                  double eta_hat, const MassSystem& sys);

}  // namespace nbwk
