#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "netfrag/mfd.hpp"

namespace netfrag {

enum class ExperimentKind { kDemand, kSupply };

struct StochasticConfig {
  NetworkParams params = NetworkParams::zurich();  // mean and std of G live here
  double horizon = 7200.0;  // s
  double dt = 1.0;          // s
  std::size_t sample_count = 1000;
  double demand_lo = 1000.0;
  double demand_hi = 8000.0;
  double supply_lo = 0.0;
  double supply_hi = 0.5;
  double base_demand = 0.6;  // veh/s
  std::uint64_t seed = 42;
  double truncation = 0.1;         // green kept inside (eps, C - eps)
  std::size_t curve_points = 71;   // deterministic curve grid
  std::size_t fallback_grid = 1000;  // s_det grid when too few samples survive
  MocOptions moc;
  unsigned threads = 0;

  /// Throws ParameterError naming the offending field.
  void validate() const;
  std::size_t steps() const;
};

/// Independent stream for sample `index`.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index);

/// Normal draw truncated to (eps, C - eps) by rejection.
double sample_green(std::mt19937_64& rng, const NetworkParams& params, double eps = 0.1);

struct StochasticRun {
  double tts = 0.0;  // sum of n dt over the horizon, veh s
  std::vector<double> n;      // recorded states at t = k dt, k = 0..steps
  std::vector<double> green;  // green drawn for each step
};

/// Euler recovery on an MFD redrawn every step. Demand mode starts at
/// `magnitude` veh; supply mode starts at the disrupted equilibrium n'(r)
/// of the mean-green MFD with r = `magnitude`. Throws GridlockError when
/// the state reaches n_max.
StochasticRun stochastic_recovery(double magnitude, ExperimentKind kind,
                                  const StochasticConfig& config, std::mt19937_64& rng,
                                  bool record = false);

/// Closed-form absolute TTS over the horizon on the deterministic MFD of `green`.
double deterministic_tts(double magnitude, ExperimentKind kind, const StochasticConfig& config,
                         double green);

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::kDemand;
  std::array<double, 3> greens{};  // mu - sigma, mu, mu + sigma
  std::vector<double> grid;
  std::array<std::vector<double>, 3> curves;  // TTS on `grid`, one per green
  std::vector<double> magnitudes;  // per sample
  std::vector<double> tts;         // per sample; NaN when discarded
  std::vector<double> matched;     // mean-green closed form at each sample magnitude
  std::size_t discarded = 0;
  double s_det = 0.0;
  double s_stoch = 0.0;
};

ExperimentResult run_experiment(ExperimentKind kind, const StochasticConfig& config);
ExperimentResult run_demand_experiment(const StochasticConfig& config);
ExperimentResult run_supply_experiment(const StochasticConfig& config);

}  // namespace netfrag
