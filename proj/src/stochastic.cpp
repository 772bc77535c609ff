#include "netfrag/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "netfrag/error.hpp"
#include "netfrag/indicator.hpp"
#include "netfrag/parallel.hpp"
#include "netfrag/recovery.hpp"

namespace netfrag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double completion_of(const std::array<Cut, 3>& cuts, double n) {
  return std::min({cuts[0].at(n), cuts[1].at(n), cuts[2].at(n)});
}

double mean_green_start(double r, const StochasticConfig& config) {
  const PiecewiseLinearMfd mean_mfd =
      build_moc_mfd(config.params, config.params.green_time, config.moc);
  const double n0 = equilibrium_accumulation(mean_mfd, config.base_demand);
  return supply_equilibrium(r, n0, mean_mfd);
}

std::pair<double, double> magnitude_range(ExperimentKind kind, const StochasticConfig& config) {
  return kind == ExperimentKind::kDemand ? std::pair{config.demand_lo, config.demand_hi}
                                         : std::pair{config.supply_lo, config.supply_hi};
}

}  // namespace

void StochasticConfig::validate() const {
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be positive");
  steps();
  if (!(demand_lo >= 0.0 && demand_lo <= demand_hi)) {
    throw ParameterError("demand range must satisfy 0 <= demand_lo <= demand_hi");
  }
  if (!(supply_lo >= 0.0 && supply_lo <= supply_hi && supply_hi < 1.0)) {
    throw ParameterError("supply range must satisfy 0 <= supply_lo <= supply_hi < 1");
  }
  if (!(base_demand >= 0.0) || !std::isfinite(base_demand)) {
    throw ParameterError("base_demand must be nonnegative");
  }
  if (!(truncation >= 0.0 && 2.0 * truncation < params.cycle_time)) {
    throw ParameterError("truncation must lie in [0, cycle_time / 2)");
  }
  if (curve_points < 2) throw ParameterError("curve_points must be at least 2");
  if (fallback_grid < 3) throw ParameterError("fallback_grid must be at least 3");
  const double sigma = params.green_time_std;
  if (!(params.green_time - sigma > 0.0)) {
    throw ParameterError("green_time - green_time_std must be positive");
  }
  if (!(params.green_time + sigma < params.cycle_time)) {
    throw ParameterError("green_time + green_time_std must be below cycle_time");
  }
}

std::size_t StochasticConfig::steps() const {
  const double ratio = horizon / dt;
  const double k = std::nearbyint(ratio);
  if (!(std::abs(k - ratio) <= 1e-9 * std::max(1.0, ratio)) || k < 1.0) {
    std::ostringstream os;
    os << "horizon " << horizon << " is not a positive multiple of dt " << dt;
    throw ParameterError(os.str());
  }
  return static_cast<std::size_t>(k);
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double sample_green(std::mt19937_64& rng, const NetworkParams& params, double eps) {
  if (params.green_time_std == 0.0) return params.green_time;
  std::normal_distribution<double> normal(params.green_time, params.green_time_std);
  const double lo = eps;
  const double hi = params.cycle_time - eps;
  for (;;) {
    const double g = normal(rng);
    if (g > lo && g < hi) return g;
  }
}

StochasticRun stochastic_recovery(double magnitude, ExperimentKind kind,
                                  const StochasticConfig& config, std::mt19937_64& rng,
                                  bool record) {
  const std::size_t steps = config.steps();
  const double n_max = config.params.max_density * config.params.total_lane_length;
  double n = kind == ExperimentKind::kDemand ? magnitude : mean_green_start(magnitude, config);
  if (!(n >= 0.0 && n < n_max)) {
    std::ostringstream os;
    os << "starting accumulation " << n << " outside [0, " << n_max << ")";
    throw DomainError(os.str());
  }

  StochasticRun run;
  if (record) {
    run.n.reserve(steps + 1);
    run.green.reserve(steps);
    run.n.push_back(n);
  }
  const double m0 = config.base_demand;
  const double dt = config.dt;
  for (std::size_t k = 0; k < steps; ++k) {
    const double g = sample_green(rng, config.params, config.truncation);
    const auto cuts = moc_cuts(config.params, g, config.moc);
    run.tts += n * dt;
    n += dt * (m0 - completion_of(cuts, n));
    if (n >= n_max) {
      std::ostringstream os;
      os << "trajectory reached gridlock (n = " << n << ") at t = "
         << static_cast<double>(k + 1) * dt << " s";
      throw GridlockError(os.str());
    }
    if (record) {
      run.n.push_back(n);
      run.green.push_back(g);
    }
  }
  return run;
}

double deterministic_tts(double magnitude, ExperimentKind kind, const StochasticConfig& config,
                         double green) {
  const PiecewiseLinearMfd mfd = build_moc_mfd(config.params, green, config.moc);
  const Horizon horizon = Horizon::seconds(config.horizon);
  if (kind == ExperimentKind::kDemand) {
    return recover(mfd, magnitude, config.base_demand, horizon).tts;
  }
  return total_tts_supply(magnitude, horizon, mfd, config.base_demand).tts;
}

ExperimentResult run_experiment(ExperimentKind kind, const StochasticConfig& config) {
  config.validate();
  const auto [lo, hi] = magnitude_range(kind, config);
  const double mu = config.params.green_time;
  const double sigma = config.params.green_time_std;

  ExperimentResult out;
  out.kind = kind;
  out.greens = {mu - sigma, mu, mu + sigma};
  out.grid = linspace(lo, hi, config.curve_points);
  for (std::size_t c = 0; c < 3; ++c) {
    out.curves[c].resize(out.grid.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      out.curves[c][i] = deterministic_tts(out.grid[i], kind, config, out.greens[c]);
    }
  }

  const std::size_t count = config.sample_count;
  out.magnitudes.assign(count, 0.0);
  out.tts.assign(count, kNaN);
  out.matched.assign(count, 0.0);
  std::vector<std::string> failures(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        std::mt19937_64 rng = sample_rng(config.seed, i);
        // One uniform draw per equal-width stratum.
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double x = lo + (hi - lo) * (static_cast<double>(i) + u) / static_cast<double>(count);
        out.magnitudes[i] = x;
        out.matched[i] = deterministic_tts(x, kind, config, mu);
        try {
          out.tts[i] = stochastic_recovery(x, kind, config, rng).tts;
        } catch (const GridlockError& e) {
          failures[i] = e.what();
        }
      },
      config.threads);

  std::vector<double> stoch;
  std::vector<double> det;
  for (std::size_t i = 0; i < count; ++i) {
    if (std::isnan(out.tts[i])) {
      ++out.discarded;
      std::clog << "netfrag: discarded sample " << i << ": " << failures[i] << '\n';
      continue;
    }
    stoch.push_back(out.tts[i]);
    det.push_back(out.matched[i]);
  }
  if (stoch.size() >= 3) {
    out.s_stoch = skewness(stoch);
    out.s_det = skewness(det);
  } else {
    out.s_stoch = kNaN;
    std::vector<double> fallback;
    for (double x : linspace(lo, hi, config.fallback_grid)) {
      fallback.push_back(deterministic_tts(x, kind, config, mu));
    }
    out.s_det = skewness(fallback);
  }
  return out;
}

ExperimentResult run_demand_experiment(const StochasticConfig& config) {
  return run_experiment(ExperimentKind::kDemand, config);
}

ExperimentResult run_supply_experiment(const StochasticConfig& config) {
  return run_experiment(ExperimentKind::kSupply, config);
}

}  // namespace netfrag
