#include "netfrag/mfd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "netfrag/error.hpp"

namespace netfrag {
namespace {

// Relative tolerance for envelope checks, applied after normalization.
constexpr double kEnvelopeTol = 1e-9;

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << field << " must be strictly positive and finite (got " << value << ")";
    throw ParameterError(os.str());
  }
}

}  // namespace

NetworkParams NetworkParams::zurich() {
  NetworkParams p;
  p.free_flow_speed = 12.5;
  p.backward_wave_speed = 6.0;
  p.max_density = 0.145;
  p.lane_capacity = 0.51;
  p.total_lane_length = 68631.0;
  p.avg_lane_length = 167.0;
  p.avg_trip_length = 7110.0;
  p.cycle_time = 50.0;
  p.green_time = 14.8;
  p.green_time_std = 2.5;
  p.offset = 0.0;
  return p;
}

void NetworkParams::validate() const {
  require_positive(free_flow_speed, "free_flow_speed");
  require_positive(backward_wave_speed, "backward_wave_speed");
  require_positive(max_density, "max_density");
  require_positive(lane_capacity, "lane_capacity");
  require_positive(total_lane_length, "total_lane_length");
  require_positive(avg_lane_length, "avg_lane_length");
  require_positive(avg_trip_length, "avg_trip_length");
  require_positive(cycle_time, "cycle_time");
  require_positive(green_time, "green_time");
  if (!(green_time < cycle_time)) {
    throw ParameterError("green_time must be smaller than cycle_time");
  }
  if (!(green_time_std >= 0.0) || !std::isfinite(green_time_std)) {
    throw ParameterError("green_time_std must be nonnegative and finite");
  }
  if (!(offset >= 0.0) || !std::isfinite(offset)) {
    throw ParameterError("offset must be nonnegative and finite");
  }
  if (backward_wave_speed > free_flow_speed && !allow_fast_backward_wave) {
    throw ParameterError(
        "backward_wave_speed exceeds free_flow_speed; set allow_fast_backward_wave to "
        "override");
  }
}

CompletionAccumulation convert_qk_to_mn(FlowDensity qk, double total_lane_length,
                                        double avg_trip_length) {
  require_positive(total_lane_length, "total_lane_length");
  require_positive(avg_trip_length, "avg_trip_length");
  return {qk.density * total_lane_length, qk.flow * total_lane_length / avg_trip_length};
}

FlowDensity convert_mn_to_qk(CompletionAccumulation mn, double total_lane_length,
                             double avg_trip_length) {
  require_positive(total_lane_length, "total_lane_length");
  require_positive(avg_trip_length, "avg_trip_length");
  return {mn.accumulation / total_lane_length,
          mn.completion * avg_trip_length / total_lane_length};
}

Cut convert_cut_to_mn(const Cut& cut, double total_lane_length, double avg_trip_length) {
  require_positive(total_lane_length, "total_lane_length");
  require_positive(avg_trip_length, "avg_trip_length");
  if (cut.coords == Coordinates::kCompletionAccumulation) return cut;
  return {cut.slope / avg_trip_length, cut.intercept * total_lane_length / avg_trip_length,
          Coordinates::kCompletionAccumulation};
}

Cut convert_cut_to_qk(const Cut& cut, double total_lane_length, double avg_trip_length) {
  require_positive(total_lane_length, "total_lane_length");
  require_positive(avg_trip_length, "avg_trip_length");
  if (cut.coords == Coordinates::kFlowDensity) return cut;
  return {cut.slope * avg_trip_length, cut.intercept * avg_trip_length / total_lane_length,
          Coordinates::kFlowDensity};
}

PiecewiseLinearMfd::PiecewiseLinearMfd(std::vector<Cut> cuts, double n_max)
    : cuts_(std::move(cuts)), n_max_(n_max) {
  if (!(n_max_ > 0.0) || !std::isfinite(n_max_)) {
    throw ConstructionError("n_max must be strictly positive");
  }
  if (cuts_.size() < 2) {
    throw ConstructionError("an MFD needs at least a backward and a free-flow cut");
  }
  double scale = 0.0;
  for (const Cut& c : cuts_) {
    if (c.coords != Coordinates::kCompletionAccumulation) {
      throw ConstructionError("cuts must be given in completion-accumulation coordinates");
    }
    if (!std::isfinite(c.slope) || !std::isfinite(c.intercept)) {
      throw ConstructionError("cut coefficients must be finite");
    }
    scale = std::max({scale, std::abs(c.intercept), std::abs(c.slope) * n_max_});
  }
  const double tol = kEnvelopeTol * scale;
  const std::size_t count = cuts_.size();

  for (std::size_t k = 0; k + 1 < count; ++k) {
    if (!(cuts_[k + 1].slope > cuts_[k].slope)) {
      std::ostringstream os;
      os << "cut slopes must strictly increase (cut " << k << " -> " << k + 1 << ")";
      throw ConstructionError(os.str());
    }
    if (!(cuts_[k].intercept > cuts_[k + 1].intercept)) {
      std::ostringstream os;
      os << "cut intercepts must strictly decrease (cut " << k << " -> " << k + 1 << ")";
      throw ConstructionError(os.str());
    }
  }
  if (std::abs(cuts_.back().intercept) > tol) {
    throw ConstructionError("the free-flow cut must pass through the origin");
  }
  cuts_.back().intercept = 0.0;
  if (std::abs(cuts_.front().at(n_max_)) > tol) {
    throw ConstructionError("the backward-wave cut must vanish at n_max");
  }

  breakpoints_.assign(count + 1, 0.0);
  breakpoints_.front() = n_max_;
  const double n_tol = kEnvelopeTol * n_max_;
  for (std::size_t j = 1; j < count; ++j) {
    const Cut& lo = cuts_[j - 1];
    const Cut& hi = cuts_[j];
    double n = (lo.intercept - hi.intercept) / (hi.slope - lo.slope);
    if (n > breakpoints_[j - 1]) {
      if (n > breakpoints_[j - 1] + n_tol) {
        std::ostringstream os;
        os << "cut " << j - 1 << " lies above the envelope (degenerate cut ordering)";
        throw ConstructionError(os.str());
      }
      n = breakpoints_[j - 1];
    }
    breakpoints_[j] = n;
  }
  // The free-flow cut must be active on (0, breakpoint(N-1)].
  if (breakpoints_[count - 1] < -n_tol) {
    throw ConstructionError("cut intersections fall below zero accumulation");
  }
  breakpoints_[count - 1] = std::max(breakpoints_[count - 1], 0.0);
  for (std::size_t j = 1; j < count; ++j) {
    breakpoints_[j] = std::min(breakpoints_[j], breakpoints_[j - 1]);
  }

  m_max_ = 0.0;
  n_critical_ = 0.0;
  for (std::size_t j = count; j-- > 0;) {
    const double m = breakpoint_completion(j);
    if (m > m_max_) {
      m_max_ = m;
      n_critical_ = breakpoints_[j];
    }
  }
}

double PiecewiseLinearMfd::breakpoint_completion(std::size_t j) const {
  if (j == 0) return 0.0;
  if (j >= cuts_.size()) return 0.0;
  return cuts_[j].at(breakpoints_[j]);
}

double PiecewiseLinearMfd::completion(double n) const {
  double m = cuts_.front().at(n);
  for (const Cut& c : cuts_) m = std::min(m, c.at(n));
  return m;
}

std::size_t PiecewiseLinearMfd::active_cut(double n, Heading heading) const {
  const std::size_t count = cuts_.size();
  if (heading == Heading::kDecreasing) {
    for (std::size_t k = 0; k < count; ++k) {
      if (breakpoints_[k + 1] < n && n <= breakpoints_[k]) return k;
    }
    return n > n_max_ ? 0 : count - 1;
  }
  for (std::size_t k = count; k-- > 0;) {
    if (breakpoints_[k + 1] <= n && n < breakpoints_[k]) return k;
  }
  return n < 0.0 ? count - 1 : 0;
}

Evaluation PiecewiseLinearMfd::evaluate(double n) const {
  if (!(n >= 0.0 && n <= n_max_)) {
    std::ostringstream os;
    os << "accumulation " << n << " outside [0, " << n_max_ << "]";
    throw DomainError(os.str());
  }
  return {completion(n), active_cut(n, Heading::kDecreasing)};
}

double PiecewiseLinearMfd::uncongested_accumulation(double m) const {
  if (!(m >= 0.0 && m <= m_max_)) {
    throw DomainError("completion outside [0, m_max]");
  }
  for (std::size_t k = cuts_.size(); k-- > 0;) {
    const Cut& c = cuts_[k];
    if (c.slope > 0.0 && breakpoint_completion(k) >= m) {
      const double n = (m - c.intercept) / c.slope;
      return std::clamp(n, breakpoints_[k + 1], breakpoints_[k]);
    }
  }
  return n_critical_;
}

double PiecewiseLinearMfd::congested_accumulation(double m) const {
  if (!(m >= 0.0 && m <= m_max_)) {
    throw DomainError("completion outside [0, m_max]");
  }
  for (std::size_t k = 0; k < cuts_.size(); ++k) {
    if (breakpoint_completion(k + 1) >= m) {
      const Cut& c = cuts_[k];
      if (c.slope < 0.0) {
        const double n = (m - c.intercept) / c.slope;
        return std::clamp(n, breakpoints_[k + 1], breakpoints_[k]);
      }
      return breakpoints_[k];
    }
  }
  return n_critical_;
}

std::vector<std::pair<double, Evaluation>> PiecewiseLinearMfd::sample(std::size_t count) const {
  std::vector<std::pair<double, Evaluation>> out;
  if (count == 0) return out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double n =
        count == 1 ? 0.0 : n_max_ * static_cast<double>(i) / static_cast<double>(count - 1);
    out.emplace_back(n, evaluate(std::min(n, n_max_)));
  }
  return out;
}

std::array<Cut, 3> moc_cuts(const NetworkParams& params, double green_time,
                            const MocOptions& options) {
  const double red = params.cycle_time - green_time;
  double delay = red;
  switch (options.delay) {
    case SignalDelay::kFullRed:
      delay = red;
      break;
    case SignalDelay::kMeanStop:
      delay = 0.5 * red;
      break;
    case SignalDelay::kRandomArrival:
      delay = red * red / (2.0 * params.cycle_time);
      break;
  }
  const double block = params.avg_lane_length;
  const double forward_speed = block / (block / params.free_flow_speed + delay);
  const double backward_speed = block / (block / params.backward_wave_speed + delay);
  const double stationary_flow = params.lane_capacity * green_time / params.cycle_time;

  const std::array<Cut, 3> qk{
      Cut{-backward_speed, backward_speed * params.max_density, Coordinates::kFlowDensity},
      Cut{0.0, stationary_flow, Coordinates::kFlowDensity},
      Cut{forward_speed, 0.0, Coordinates::kFlowDensity},
  };
  std::array<Cut, 3> mn{};
  for (std::size_t k = 0; k < qk.size(); ++k) {
    mn[k] = convert_cut_to_mn(qk[k], params.total_lane_length, params.avg_trip_length);
  }
  return mn;
}

PiecewiseLinearMfd build_moc_mfd(const NetworkParams& params, double green_time,
                                 const MocOptions& options) {
  params.validate();
  if (!(green_time > 0.0 && green_time < params.cycle_time)) {
    std::ostringstream os;
    os << "green time " << green_time << " outside (0, " << params.cycle_time << ")";
    throw ParameterError(os.str());
  }
  const auto cuts = moc_cuts(params, green_time, options);
  return PiecewiseLinearMfd({cuts.begin(), cuts.end()},
                            params.max_density * params.total_lane_length);
}

PiecewiseLinearMfd build_unit_mfd(double a_f, double a_w_abs, double m_max) {
  require_positive(a_f, "a_f");
  require_positive(a_w_abs, "a_w_abs");
  require_positive(m_max, "m_max");
  if (!(a_f > 1.0 / kUnitNMax)) {
    throw ParameterError("a_f must exceed 1e-4 so that the critical accumulation stays below n_max");
  }
  if (!(a_f * kUnitNMax > m_max) || !(a_w_abs * kUnitNMax > m_max)) {
    throw ConstructionError("unit MFD trapezoid is degenerate: m_max too large for the slopes");
  }
  if (m_max / a_f > kUnitNMax - m_max / a_w_abs + kEnvelopeTol * kUnitNMax) {
    throw ConstructionError(
        "unit MFD trapezoid is degenerate: stationary cut lies above the intersection of the "
        "forward and backward cuts");
  }
  return PiecewiseLinearMfd({Cut{-a_w_abs, a_w_abs * kUnitNMax}, Cut{0.0, m_max}, Cut{a_f, 0.0}},
                            kUnitNMax);
}

PiecewiseLinearMfd scale_supply(const PiecewiseLinearMfd& mfd, double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    std::ostringstream os;
    os << "supply disruption coefficient r = " << r << " outside [0, 1)";
    throw ParameterError(os.str());
  }
  std::vector<Cut> cuts(mfd.cuts().begin(), mfd.cuts().end());
  for (Cut& c : cuts) {
    c.slope *= 1.0 - r;
    c.intercept *= 1.0 - r;
  }
  return PiecewiseLinearMfd(std::move(cuts), mfd.n_max());
}

UnitScaling scale_to_unit(const PiecewiseLinearMfd& mfd) {
  const double gamma = kUnitNMax / mfd.n_max();
  std::vector<Cut> cuts(mfd.cuts().begin(), mfd.cuts().end());
  for (Cut& c : cuts) c.intercept *= gamma;
  return {PiecewiseLinearMfd(std::move(cuts), kUnitNMax), gamma};
}

}  // namespace netfrag
