#include "netfrag/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netfrag/error.hpp"

namespace netfrag {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double drift(double n, const Cut& cut, double base_demand) {
  return base_demand - cut.at(n);
}

// (1 - e^{-x}) / x
double phi1(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

// (e^{-x} - 1 + x) / x^2
double psi(double x) {
  if (std::abs(x) < 1e-3) {
    return 0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 + x * (-1.0 / 120.0 + x / 720.0)));
  }
  return (std::expm1(-x) + x) / (x * x);
}

// log1p(y) / y
double log1p_ratio(double y) {
  if (std::abs(y) < 1e-8) return 1.0 - 0.5 * y;
  return std::log1p(y) / y;
}

void check_base_demand(const PiecewiseLinearMfd& mfd, double base_demand) {
  if (!(base_demand >= 0.0) || !std::isfinite(base_demand)) {
    throw ParameterError("base demand must be nonnegative and finite");
  }
  if (!(base_demand < mfd.m_max())) {
    std::ostringstream os;
    os << "base demand m0 = " << base_demand << " is not below the maximal completion "
       << mfd.m_max() << "; the network cannot recover";
    throw AssumptionError(2, os.str());
  }
}

void check_accumulation(const PiecewiseLinearMfd& mfd, double n, const char* what) {
  if (!(n >= 0.0 && n <= mfd.n_max())) {
    std::ostringstream os;
    os << what << " = " << n << " outside [0, " << mfd.n_max() << "]";
    throw DomainError(os.str());
  }
}

// Assumptions 2 and 3 for a demand disruption that differs from n0.
void check_demand_assumptions(double n_prime, const PiecewiseLinearMfd& mfd,
                              double base_demand) {
  if (!(n_prime > mfd.critical_accumulation())) {
    std::ostringstream os;
    os << "demand disruption n' = " << n_prime
       << " must exceed the critical accumulation n_c = " << mfd.critical_accumulation()
       << " (disruption must lie on the congested side)";
    throw AssumptionError(3, os.str());
  }
  if (!(base_demand < mfd.completion(n_prime))) {
    std::ostringstream os;
    os << "base demand m0 = " << base_demand << " is not below the outflow M(n') = "
       << mfd.completion(n_prime) << "; the network would gridlock";
    throw AssumptionError(2, os.str());
  }
}

}  // namespace

Horizon Horizon::seconds(double t) {
  if (!(t >= 0.0) || std::isnan(t)) {
    throw ParameterError("horizon must be nonnegative");
  }
  return Horizon(t);
}

double state_after(double n1, double dt, const Cut& cut, double base_demand) {
  const double v = drift(n1, cut, base_demand);
  return n1 + v * dt * phi1(cut.slope * dt);
}

double time_between(double n1, double n2, const Cut& cut, double base_demand) {
  if (n1 == n2) return 0.0;
  const double v1 = drift(n1, cut, base_demand);
  const double v2 = drift(n2, cut, base_demand);
  const double dn = n2 - n1;
  if (v1 == 0.0 || v2 == 0.0 || (v1 > 0.0) != (v2 > 0.0) || (v1 > 0.0) != (dn > 0.0)) {
    std::ostringstream os;
    os << "accumulation " << n2 << " is unreachable from " << n1
       << " on this cut (the cut equilibrium lies between them or the drift points away)";
    throw UnreachableStateError(os.str());
  }
  if (cut.slope == 0.0) return dn / v1;
  const double y = -cut.slope * dn / v1;
  return dn / v1 * log1p_ratio(y);
}

double tts_on_cut(double n_start, double dt, const Cut& cut, double base_demand) {
  if (dt == 0.0) return 0.0;
  if (std::isinf(dt)) {
    if (cut.slope > 0.0) {
      const double equilibrium = (base_demand - cut.intercept) / cut.slope;
      if (equilibrium == 0.0) return n_start / cut.slope;
      return equilibrium > 0.0 ? kInf : -kInf;
    }
    return kInf;
  }
  const double v = drift(n_start, cut, base_demand);
  return n_start * dt + v * dt * dt * psi(cut.slope * dt);
}

double equilibrium_accumulation(const PiecewiseLinearMfd& mfd, double base_demand) {
  check_base_demand(mfd, base_demand);
  return mfd.uncongested_accumulation(base_demand);
}

RecoveryResult recover(const PiecewiseLinearMfd& mfd, double n_start, double base_demand,
                       Horizon horizon) {
  check_accumulation(mfd, n_start, "starting accumulation");
  check_base_demand(mfd, base_demand);
  const double n0 = mfd.uncongested_accumulation(base_demand);
  const double unstable = mfd.congested_accumulation(base_demand);
  if (n_start >= unstable) {
    std::ostringstream os;
    os << "base demand m0 = " << base_demand << " is not below the outflow M(n') = "
       << mfd.completion(n_start) << " at n' = " << n_start << "; the network would gridlock";
    throw AssumptionError(2, os.str());
  }

  RecoveryResult result;
  result.n_start = n_start;
  result.base_demand = base_demand;
  result.equilibrium = n0;
  result.horizon = horizon.value();

  const double total = horizon.value();
  double n = n_start;
  double t = 0.0;

  if (n == n0) {
    if (!horizon.is_unbounded() && total > 0.0) {
      result.segments.push_back(
          {mfd.active_cut(n0, Heading::kDecreasing), n0, n0, 0.0, total, n0 * total, 0.0});
    }
    result.n_end = n0;
  }

  while (n != n0 && t < total) {
    const Heading heading = n > n0 ? Heading::kDecreasing : Heading::kIncreasing;
    const std::size_t k = mfd.active_cut(n, heading);
    const Cut& cut = mfd.cut(k);
    const bool down = heading == Heading::kDecreasing;
    const double bound = down ? mfd.breakpoint(k + 1) : mfd.breakpoint(k);
    const bool final_cut = down ? n0 >= bound : n0 <= bound;

    Segment seg;
    seg.cut = k;
    seg.n_entry = n;
    seg.t_entry = t;

    if (final_cut) {
      // Exponential approach to n0, which is this cut's own equilibrium.
      const double tau = total - t;
      seg.duration = tau;
      if (horizon.is_unbounded()) {
        seg.n_exit = n0;
        seg.excess_tts = (n - n0) / cut.slope;
        seg.tts = n0 == 0.0 ? seg.excess_tts : kInf;
      } else {
        seg.n_exit = n0 + (n - n0) * std::exp(-cut.slope * tau);
        seg.excess_tts = (n - n0) * tau * phi1(cut.slope * tau);
        seg.tts = n0 * tau + seg.excess_tts;
      }
      result.segments.push_back(seg);
      n = seg.n_exit;
      t = total;
      break;
    }

    const double dt = time_between(n, bound, cut, base_demand);
    if (!horizon.is_unbounded() && t + dt >= total) {
      const double tau = total - t;
      seg.duration = tau;
      seg.n_exit = state_after(n, tau, cut, base_demand);
      seg.tts = tts_on_cut(n, tau, cut, base_demand);
      seg.excess_tts = seg.tts - n0 * tau;
      result.segments.push_back(seg);
      n = seg.n_exit;
      t = total;
      break;
    }
    seg.duration = dt;
    seg.n_exit = bound;
    seg.tts = tts_on_cut(n, dt, cut, base_demand);
    seg.excess_tts = seg.tts - n0 * dt;
    result.segments.push_back(seg);
    result.crossings.push_back({down ? k + 1 : k, t + dt});
    t += dt;
    n = bound;
  }
  if (!result.segments.empty()) result.n_end = n;
  if (result.segments.empty()) result.n_end = n_start;

  for (const Segment& s : result.segments) {
    result.tts += s.tts;
    result.excess_tts += s.excess_tts;
  }
  if (horizon.is_unbounded() && n0 > 0.0) result.tts = kInf;
  return result;
}

double RecoveryResult::state_at(double t, const PiecewiseLinearMfd& mfd) const {
  if (t <= 0.0 || segments.empty()) return n_start;
  for (const Segment& s : segments) {
    if (t < s.t_entry + s.duration) {
      return state_after(s.n_entry, t - s.t_entry, mfd.cut(s.cut), base_demand);
    }
  }
  return n_end;
}

std::vector<CriticalCrossing> times_to_critical(double n_prime, const PiecewiseLinearMfd& mfd,
                                                double base_demand) {
  check_accumulation(mfd, n_prime, "demand disruption n'");
  check_base_demand(mfd, base_demand);
  if (!(base_demand < mfd.completion(n_prime))) {
    std::ostringstream os;
    os << "base demand m0 = " << base_demand << " is not below the outflow M(n') = "
       << mfd.completion(n_prime) << "; gridlock risk along the recovery path";
    throw AssumptionError(2, os.str());
  }
  const RecoveryResult res = recover(mfd, n_prime, base_demand, Horizon::unbounded());
  std::vector<CriticalCrossing> out;
  for (std::size_t j = 1; j < mfd.size(); ++j) {
    if (mfd.breakpoint(j) == n_prime && n_prime > res.equilibrium) {
      out.push_back({j, 0.0});
      break;
    }
  }
  for (const CriticalCrossing& c : res.crossings) {
    if (!(base_demand < mfd.breakpoint_completion(c.breakpoint))) {
      throw AssumptionError(2, "base demand reaches a critical completion on the path");
    }
    out.push_back(c);
  }
  return out;
}

RecoveryResult total_tts_demand(double n_prime, Horizon horizon, const PiecewiseLinearMfd& mfd,
                                double base_demand) {
  check_accumulation(mfd, n_prime, "demand disruption n'");
  check_base_demand(mfd, base_demand);
  const double n0 = mfd.uncongested_accumulation(base_demand);
  if (n_prime != n0) check_demand_assumptions(n_prime, mfd, base_demand);
  return recover(mfd, n_prime, base_demand, horizon);
}

double supply_equilibrium(double r, double n0, const PiecewiseLinearMfd& mfd) {
  if (!(r >= 0.0 && r < 1.0)) {
    std::ostringstream os;
    os << "supply disruption coefficient r = " << r << " outside [0, 1)";
    throw ParameterError(os.str());
  }
  check_accumulation(mfd, n0, "equilibrium accumulation n0");
  if (n0 > mfd.critical_accumulation()) {
    throw AssumptionError(3, "the undisrupted equilibrium n0 must lie on the uncongested branch");
  }
  if (r == 0.0) return n0;
  const double base_demand = mfd.completion(n0);
  const double target = base_demand / (1.0 - r);
  if (!(target < mfd.m_max())) {
    std::ostringstream os;
    os << "base demand m0 = " << base_demand << " is not below the disrupted capacity (1-r) m_max = "
       << (1.0 - r) * mfd.m_max();
    throw AssumptionError(2, os.str());
  }
  return mfd.uncongested_accumulation(target);
}

RecoveryResult total_tts_supply(double r, Horizon horizon, const PiecewiseLinearMfd& mfd,
                                double base_demand) {
  check_base_demand(mfd, base_demand);
  const double n0 = mfd.uncongested_accumulation(base_demand);
  const double n_prime = supply_equilibrium(r, n0, mfd);
  return recover(mfd, n_prime, base_demand, horizon);
}

DemandCurvature second_derivative_demand(double n_prime, const PiecewiseLinearMfd& mfd,
                                         double base_demand, double t) {
  if (!(t > 0.0)) {
    throw DomainError("curvature horizon must be strictly positive");
  }
  check_accumulation(mfd, n_prime, "demand disruption n'");
  check_base_demand(mfd, base_demand);
  check_demand_assumptions(n_prime, mfd, base_demand);

  const Horizon horizon = std::isinf(t) ? Horizon::unbounded() : Horizon::seconds(t);
  const RecoveryResult res = recover(mfd, n_prime, base_demand, horizon);
  const double m0 = base_demand;

  DemandCurvature out;
  out.entry_cut = res.segments.front().cut;
  out.current_cut = res.segments.back().cut;
  out.state = res.n_end;
  if (out.entry_cut == out.current_cut) {
    out.value = 0.0;
    return out;
  }

  const Cut& cy = mfd.cut(out.entry_cut);
  const Cut& cz = mfd.cut(out.current_cut);
  const double m_prime = cy.at(n_prime);
  const double excess = m_prime - m0;
  const double reduced = (cy.intercept - cz.intercept + (cy.slope - cz.slope) * out.state) /
                         (excess * excess);
  if (cy.slope == 0.0 || cz.slope == 0.0) {
    out.value = reduced;
    return out;
  }

  const double ay = cy.slope;
  const double az = cz.slope;
  // log P = -(a_z / a_y) log(m_c,y - m0) + sum over intermediate cuts.
  const double m_cy = mfd.breakpoint_completion(out.entry_cut + 1);
  double log_p = -(az / ay) * std::log(m_cy - m0);
  for (std::size_t s = 1; s + 1 < res.segments.size(); ++s) {
    const Segment& seg = res.segments[s];
    const Cut& ci = mfd.cut(seg.cut);
    if (ci.slope == 0.0) {
      log_p += az * seg.duration;
    } else {
      const double upper = ci.at(seg.n_entry) - m0;
      const double lower = ci.at(seg.n_exit) - m0;
      log_p += -(az / ci.slope) * std::log(lower / upper);
    }
  }
  const double m_cz = cz.at(res.segments.back().n_entry);
  double transient = 0.0;
  if (!(std::isinf(t) && az > 0.0)) {
    const double log_term = -az * t + log_p + (az / ay) * std::log(excess);
    transient = std::exp(log_term) / az * (az - ay) * (m_cz - m0);
  }
  out.p_constant = std::exp(log_p);
  out.value = (cy.intercept - m0 - transient - ay * (cz.intercept - m0) / az) / (excess * excess);
  return out;
}

SupplyCurvature second_derivative_supply_fd(double r, const PiecewiseLinearMfd& mfd,
                                            double base_demand, Horizon horizon, double h) {
  if (!(h > 0.0)) throw ParameterError("finite-difference step must be positive");
  if (!(r >= 0.0 && r < 1.0)) {
    throw DomainError("supply disruption coefficient outside [0, 1)");
  }
  auto excess_at = [&](double x) {
    try {
      return total_tts_supply(x, horizon, mfd, base_demand).excess_tts;
    } catch (const AssumptionError& e) {
      std::ostringstream os;
      os << "finite-difference stencil leaves the feasible region at r = " << x << ": "
         << e.what();
      throw DomainError(os.str());
    } catch (const ParameterError& e) {
      std::ostringstream os;
      os << "finite-difference stencil leaves the feasible region at r = " << x << ": "
         << e.what();
      throw DomainError(os.str());
    }
  };

  SupplyCurvature out;
  if (r - h >= 0.0) {
    out.central = true;
    out.d2tts_dr2 = (excess_at(r + h) - 2.0 * excess_at(r) + excess_at(r - h)) / (h * h);
  } else {
    out.central = false;
    out.d2tts_dr2 = (excess_at(r + 2.0 * h) - 2.0 * excess_at(r + h) + excess_at(r)) / (h * h);
  }

  const double n0 = mfd.uncongested_accumulation(base_demand);
  const double n_prime = supply_equilibrium(r, n0, mfd);
  out.supply_cut = mfd.active_cut(n_prime, Heading::kDecreasing);
  const double slope = mfd.cut(out.supply_cut).slope;
  const double one_minus_r = 1.0 - r;
  out.dn_dr = base_demand / (slope * one_minus_r * one_minus_r);
  out.d2n_dr2 = 2.0 * base_demand / (slope * one_minus_r * one_minus_r * one_minus_r);
  return out;
}

std::vector<TrajectoryPoint> sample_trajectory(const RecoveryResult& result,
                                               const PiecewiseLinearMfd& mfd, double dt,
                                               double settle_tolerance) {
  if (!(dt > 0.0)) throw ParameterError("trajectory sampling step must be positive");
  constexpr std::size_t kMaxPoints = 10'000'000;
  std::vector<TrajectoryPoint> out;
  const bool unbounded = std::isinf(result.horizon);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < kMaxPoints; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (!unbounded && t > result.horizon) break;
    while (seg + 1 < result.segments.size() &&
           t >= result.segments[seg].t_entry + result.segments[seg].duration) {
      ++seg;
    }
    double n = result.n_start;
    std::size_t cut = mfd.active_cut(n, Heading::kDecreasing);
    if (!result.segments.empty()) {
      const Segment& s = result.segments[seg];
      const double local = std::min(t - s.t_entry, s.duration);
      n = state_after(s.n_entry, local, mfd.cut(s.cut), result.base_demand);
      cut = s.cut;
    }
    out.push_back({t, n, mfd.completion(std::clamp(n, 0.0, mfd.n_max())), cut});
    if (unbounded && std::abs(n - result.equilibrium) < settle_tolerance) break;
  }
  return out;
}

}  // namespace netfrag
