#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "netfrag/mfd.hpp"

namespace netfrag {

/// Integration horizon; unbounded horizons use the analytic t -> infinity limit.
class Horizon {
 public:
  static constexpr Horizon unbounded() { return Horizon(std::numeric_limits<double>::infinity()); }
  static Horizon seconds(double t);

  constexpr bool is_unbounded() const { return value_ == std::numeric_limits<double>::infinity(); }
  constexpr double value() const { return value_; }

 private:
  constexpr explicit Horizon(double t) : value_(t) {}
  double value_;
};

// Closed-form motion along a single cut under dn/dt = m0 - (a n + b).

/// Accumulation after `dt` seconds on `cut`, starting from `n1`.
double state_after(double n1, double dt, const Cut& cut, double base_demand);

/// Time to move from n1 to n2 on `cut`. Throws UnreachableStateError when the
/// equilibrium of the cut separates the two states.
double time_between(double n1, double n2, const Cut& cut, double base_demand);

/// Vehicle-time integral of n over `dt` seconds on `cut`, starting from n_start.
double tts_on_cut(double n_start, double dt, const Cut& cut, double base_demand);

/// Disruption kind.
enum class DisruptionKind { kDemand, kSupply };

/// One piece of a recovery trajectory that stays on a single cut.
struct Segment {
  std::size_t cut = 0;
  double n_entry = 0.0;
  double n_exit = 0.0;
  double t_entry = 0.0;
  double duration = 0.0;  // infinite for an unbounded final approach
  double tts = 0.0;       // absolute vehicle-time; infinite when unbounded and n0 > 0
  double excess_tts = 0.0;  // tts minus n0 * duration
};

/// Time at which the trajectory passes the breakpoint between two cuts.
struct CriticalCrossing {
  std::size_t breakpoint = 0;
  double time = 0.0;
};

struct RecoveryResult {
  double n_start = 0.0;
  double base_demand = 0.0;
  double equilibrium = 0.0;  // n0
  double horizon = 0.0;      // infinity when unbounded
  std::vector<Segment> segments;
  std::vector<CriticalCrossing> crossings;
  double tts = 0.0;          // absolute, sum of segment tts
  double excess_tts = 0.0;   // sum of segment excess
  double n_end = 0.0;        // state at the horizon

  /// Accumulation at time t along the closed-form trajectory.
  double state_at(double t, const PiecewiseLinearMfd& mfd) const;
};

/// Piecewise closed-form recovery from an arbitrary starting accumulation.
///
/// The trajectory moves monotonically towards the stable (uncongested)
/// equilibrium of `base_demand`. Only Assumption 2 is checked: the start
/// must lie below the unstable congested equilibrium.
RecoveryResult recover(const PiecewiseLinearMfd& mfd, double n_start, double base_demand,
                       Horizon horizon);

/// Stable equilibrium accumulation n0 for a base demand below m_max.
double equilibrium_accumulation(const PiecewiseLinearMfd& mfd, double base_demand);

/// Breakpoint crossing times t_c,i from a demand disruption n' back towards n0.
std::vector<CriticalCrossing> times_to_critical(double n_prime, const PiecewiseLinearMfd& mfd,
                                                double base_demand);

/// Demand disruption: validates Assumptions 2 and 3 and integrates the recovery.
/// A disruption equal to n0 is the undisrupted state and yields zero excess.
RecoveryResult total_tts_demand(double n_prime, Horizon horizon, const PiecewiseLinearMfd& mfd,
                                double base_demand);

/// Disrupted equilibrium n'(r) on the uncongested branch of (1 - r) M(n),
/// with m0 = M(n0).
double supply_equilibrium(double r, double n0, const PiecewiseLinearMfd& mfd);

/// Supply disruption: recovery on the restored MFD from n'(r) back to n0.
RecoveryResult total_tts_supply(double r, Horizon horizon, const PiecewiseLinearMfd& mfd,
                                double base_demand);

struct DemandCurvature {
  double value = 0.0;           // d^2 TTS / dn'^2
  std::optional<double> p_constant;
  std::size_t entry_cut = 0;    // y
  std::size_t current_cut = 0;  // z
  double state = 0.0;           // n(t)
};

/// Closed-form second derivative of TTS over a horizon t with respect to n'.
/// Zero when the trajectory has not left the entry cut by time t.
DemandCurvature second_derivative_demand(double n_prime, const PiecewiseLinearMfd& mfd,
                                         double base_demand, double t);

struct SupplyCurvature {
  double d2tts_dr2 = 0.0;  // finite difference
  double dn_dr = 0.0;      // closed form
  double d2n_dr2 = 0.0;    // closed form
  std::size_t supply_cut = 0;  // cut j carrying n'(r)
  bool central = true;     // false when a forward stencil was used at r < h
};

/// Finite-difference d^2 TTS / dr^2 plus the closed-form derivatives of n'(r).
SupplyCurvature second_derivative_supply_fd(double r, const PiecewiseLinearMfd& mfd,
                                            double base_demand,
                                            Horizon horizon = Horizon::unbounded(),
                                            double h = 1e-3);

struct TrajectoryPoint {
  double t = 0.0;
  double n = 0.0;
  double m = 0.0;
  std::size_t cut = 0;
};

/// Samples the closed-form trajectory every `dt` seconds. Unbounded horizons
/// stop once |n - n0| drops below `settle_tolerance` vehicles.
std::vector<TrajectoryPoint> sample_trajectory(const RecoveryResult& result,
                                               const PiecewiseLinearMfd& mfd, double dt,
                                               double settle_tolerance = 1e-3);

}  // namespace netfrag
