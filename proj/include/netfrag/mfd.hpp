#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace netfrag {

/// Physical description of a homogeneous signalized region.
///
/// Speeds in m/s, lengths in m, densities in veh/m, times in s. The lane
/// capacity is the saturation flow of a single lane in veh/s.
struct NetworkParams {
  double free_flow_speed = 0.0;      // u_l
  double backward_wave_speed = 0.0;  // w_l, positive magnitude
  double max_density = 0.0;          // k_max
  double lane_capacity = 0.0;        // c_l
  double total_lane_length = 0.0;    // D
  double avg_lane_length = 0.0;      // l
  double avg_trip_length = 0.0;      // L
  double cycle_time = 0.0;           // C
  double green_time = 0.0;           // mean green G
  double green_time_std = 0.0;       // sigma_G
  double offset = 0.0;               // delta

  /// Permit a backward wave faster than free flow.
  bool allow_fast_backward_wave = false;

  /// City-center Zurich values.
  static NetworkParams zurich();

  /// Throws ParameterError naming the first offending field.
  void validate() const;
};

enum class Coordinates { kFlowDensity, kCompletionAccumulation };

/// One linear bound `slope * x + intercept` of the fundamental diagram.
struct Cut {
  double slope = 0.0;
  double intercept = 0.0;
  Coordinates coords = Coordinates::kCompletionAccumulation;

  constexpr double at(double x) const { return slope * x + intercept; }
};

struct FlowDensity {
  double density = 0.0;  // veh/m
  double flow = 0.0;     // veh/s
};

struct CompletionAccumulation {
  double accumulation = 0.0;  // n, veh
  double completion = 0.0;    // m, veh/s
};

/// n = k D, m = q D / L.
CompletionAccumulation convert_qk_to_mn(FlowDensity qk, double total_lane_length,
                                        double avg_trip_length);
FlowDensity convert_mn_to_qk(CompletionAccumulation mn, double total_lane_length,
                             double avg_trip_length);
/// Maps a flow-density cut onto completion-accumulation coordinates.
Cut convert_cut_to_mn(const Cut& cut, double total_lane_length, double avg_trip_length);
Cut convert_cut_to_qk(const Cut& cut, double total_lane_length, double avg_trip_length);

struct Evaluation {
  double completion = 0.0;
  std::size_t cut = 0;
};

/// Direction of travel used to resolve the active cut at a breakpoint.
enum class Heading { kDecreasing, kIncreasing };

/// Concave lower envelope of linear cuts in completion-accumulation form.
///
/// Cut 0 is the most congested (backward wave) cut and passes through
/// (n_max, 0); the last cut is the free-flow cut through the origin. Slopes
/// strictly increase and intercepts strictly decrease with the index.
/// Breakpoint j (0 <= j <= N) is the accumulation where cut j-1 meets cut j,
/// with breakpoint 0 = n_max and breakpoint N = 0, so cut k is active on
/// (breakpoint(k+1), breakpoint(k)]. Adjacent breakpoints may coincide when a
/// cut only touches the envelope.
class PiecewiseLinearMfd {
 public:
  /// Validates the envelope; throws ConstructionError.
  PiecewiseLinearMfd(std::vector<Cut> cuts, double n_max);

  std::span<const Cut> cuts() const { return cuts_; }
  const Cut& cut(std::size_t k) const { return cuts_.at(k); }
  std::size_t size() const { return cuts_.size(); }
  double n_max() const { return n_max_; }

  double breakpoint(std::size_t j) const { return breakpoints_.at(j); }
  std::span<const double> breakpoints() const { return breakpoints_; }
  /// Completion at breakpoint j.
  double breakpoint_completion(std::size_t j) const;

  /// Maximum trip completion.
  double m_max() const { return m_max_; }
  /// Smallest accumulation attaining m_max.
  double critical_accumulation() const { return n_critical_; }

  /// Throws DomainError outside [0, n_max].
  Evaluation evaluate(double n) const;
  /// Envelope value without domain checks.
  double completion(double n) const;
  /// Cut governing motion from n in the given direction.
  std::size_t active_cut(double n, Heading heading) const;

  /// Smallest n with M(n) = m (uncongested branch). Requires 0 <= m <= m_max.
  double uncongested_accumulation(double m) const;
  /// Largest n with M(n) = m (congested branch). Requires 0 <= m <= m_max.
  double congested_accumulation(double m) const;

  /// Samples `count` evenly spaced points over [0, n_max].
  std::vector<std::pair<double, Evaluation>> sample(std::size_t count) const;

 private:
  std::vector<Cut> cuts_;
  double n_max_;
  std::vector<double> breakpoints_;
  double m_max_ = 0.0;
  double n_critical_ = 0.0;
};

/// Per-block signal delay experienced by a moving observer.
enum class SignalDelay {
  kFullRed,        // waits the whole red at every block
  kMeanStop,       // waits half a red at every block
  kRandomArrival,  // R^2 / (2C): uniformly random arrival phase
};

struct MocOptions {
  SignalDelay delay = SignalDelay::kMeanStop;
};

/// The three cuts (backward, stationary, forward) of a signalized corridor
/// for the given green time, without envelope validation.
std::array<Cut, 3> moc_cuts(const NetworkParams& params, double green_time,
                            const MocOptions& options = {});

/// Three-cut Method-of-Cuts MFD; throws ParameterError for green outside (0, C).
PiecewiseLinearMfd build_moc_mfd(const NetworkParams& params, double green_time,
                                 const MocOptions& options = {});

inline constexpr double kUnitNMax = 10000.0;

/// Trapezoidal MFD with n_max = 10000 veh:
/// m = a_f n, m = m_max, m = |a_w| (10000 - n).
PiecewiseLinearMfd build_unit_mfd(double a_f, double a_w_abs, double m_max);

/// (1 - r) M(n); n_max unchanged. Requires 0 <= r < 1.
PiecewiseLinearMfd scale_supply(const PiecewiseLinearMfd& mfd, double r);

struct UnitScaling {
  PiecewiseLinearMfd mfd;
  double gamma;
};

/// gamma M(n / gamma) with gamma = 10000 / n_max.
UnitScaling scale_to_unit(const PiecewiseLinearMfd& mfd);

}  // namespace netfrag
