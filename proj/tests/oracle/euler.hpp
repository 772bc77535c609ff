#pragma once

// Independent reference integrator for the recovery ODE dn/dt = m0 - M(n).
// Explicit Euler on the state with trapezoidal accumulation of n dt; it only
// evaluates the envelope, never the closed forms.

#include <cmath>
#include <cstddef>
#include <vector>

#include "netfrag/mfd.hpp"

namespace oracle {

struct EulerResult {
  double tts = 0.0;
  double n_end = 0.0;
  std::vector<double> crossing_times;  // first time below each interior breakpoint
};

inline EulerResult integrate(const netfrag::PiecewiseLinearMfd& mfd, double n_start,
                             double base_demand, double horizon, double dt = 0.01,
                             double scale = 1.0) {
  EulerResult r;
  const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<double> bps;
  for (std::size_t j = 1; j < mfd.size(); ++j) bps.push_back(mfd.breakpoint(j));
  r.crossing_times.assign(bps.size(), NAN);
  double n = n_start;
  for (std::size_t k = 0; k < steps; ++k) {
    const double next = n + dt * (base_demand - scale * mfd.completion(n));
    for (std::size_t b = 0; b < bps.size(); ++b) {
      if (std::isnan(r.crossing_times[b]) && n > bps[b] && next <= bps[b]) {
        r.crossing_times[b] = (static_cast<double>(k) + (n - bps[b]) / (n - next)) * dt;
      }
    }
    r.tts += 0.5 * (n + next) * dt;
    n = next;
  }
  r.n_end = n;
  return r;
}

}  // namespace oracle
