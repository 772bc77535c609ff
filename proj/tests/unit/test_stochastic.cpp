#include <doctest.h>

#include <cmath>

#include "netfrag/error.hpp"
#include "netfrag/recovery.hpp"
#include "netfrag/stochastic.hpp"

using namespace netfrag;

namespace {

StochasticConfig small_config() {
  StochasticConfig c;
  c.sample_count = 40;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("green draws follow the truncated normal") {
  const NetworkParams p = NetworkParams::zurich();
  auto rng = sample_rng(7, 0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0, lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < n; ++i) {
    const double g = sample_green(rng, p);
    sum += g;
    sq += g * g;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(mean == doctest::Approx(p.green_time).epsilon(0.03 / p.green_time));
  CHECK(std::abs(sd - p.green_time_std) < 0.03);
  CHECK(lo > 0.0);
  CHECK(hi < p.cycle_time);

  NetworkParams fixed = p;
  fixed.green_time_std = 0.0;
  CHECK(sample_green(rng, fixed) == p.green_time);
}

TEST_CASE("per-sample streams are reproducible") {
  auto a = sample_rng(42, 17);
  auto b = sample_rng(42, 17);
  auto c = sample_rng(42, 18);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}

TEST_CASE("zero green variance reproduces the closed form") {
  StochasticConfig c = small_config();
  c.params.green_time_std = 0.0;
  for (double mag : {2000.0, 5000.0, 8000.0}) {
    auto rng = sample_rng(1, 0);
    const auto run = stochastic_recovery(mag, ExperimentKind::kDemand, c, rng);
    const double exact = deterministic_tts(mag, ExperimentKind::kDemand, c, c.params.green_time);
    CHECK(run.tts == doctest::Approx(exact).epsilon(0.005));
  }
  for (double r : {0.1, 0.4}) {
    auto rng = sample_rng(1, 0);
    const auto run = stochastic_recovery(r, ExperimentKind::kSupply, c, rng);
    const double exact = deterministic_tts(r, ExperimentKind::kSupply, c, c.params.green_time);
    CHECK(run.tts == doctest::Approx(exact).epsilon(0.005));
  }
}

TEST_CASE("equilibrium start stays put without variance") {
  StochasticConfig c = small_config();
  c.params.green_time_std = 0.0;
  const auto mfd = build_moc_mfd(c.params, c.params.green_time, c.moc);
  const double n0 = equilibrium_accumulation(mfd, c.base_demand);
  auto rng = sample_rng(3, 0);
  const auto run = stochastic_recovery(n0, ExperimentKind::kDemand, c, rng, true);
  REQUIRE(run.n.size() == c.steps() + 1);
  for (double n : run.n) CHECK(n == doctest::Approx(n0).epsilon(1e-9));
  CHECK(run.tts == doctest::Approx(n0 * c.horizon).epsilon(1e-9));
}

TEST_CASE("euler step refinement") {
  StochasticConfig c = small_config();
  c.params.green_time_std = 0.0;
  auto r1 = sample_rng(1, 0);
  const double coarse = stochastic_recovery(6000.0, ExperimentKind::kDemand, c, r1).tts;
  c.dt = 0.5;
  auto r2 = sample_rng(1, 0);
  const double fine = stochastic_recovery(6000.0, ExperimentKind::kDemand, c, r2).tts;
  CHECK(std::abs(coarse - fine) / fine < 0.002);
}

TEST_CASE("experiments are deterministic for a seed") {
  StochasticConfig c = small_config();
  const auto a = run_demand_experiment(c);
  c.threads = 3;
  const auto b = run_demand_experiment(c);
  REQUIRE(a.tts.size() == b.tts.size());
  for (std::size_t i = 0; i < a.tts.size(); ++i) CHECK(a.tts[i] == b.tts[i]);
  CHECK(a.s_stoch == b.s_stoch);
  CHECK(a.s_det == b.s_det);
  c.seed = 43;
  const auto d = run_demand_experiment(c);
  CHECK(d.s_stoch != a.s_stoch);
}

TEST_CASE("deterministic curves are ordered by green time") {
  const auto res = run_supply_experiment(small_config());
  CHECK(res.greens[0] < res.greens[1]);
  CHECK(res.greens[1] < res.greens[2]);
  for (std::size_t i = 0; i < res.grid.size(); ++i) {
    // More green gives more capacity and less delay.
    CHECK(res.curves[0][i] >= res.curves[1][i]);
    CHECK(res.curves[1][i] >= res.curves[2][i]);
  }
  for (std::size_t i = 1; i < res.grid.size(); ++i) CHECK(res.curves[1][i] >= res.curves[1][i - 1]);
}

TEST_CASE("variance collapse recovers deterministic skewness") {
  StochasticConfig c = small_config();
  c.params.green_time_std = 1e-6;
  c.dt = 0.1;
  const auto res = run_demand_experiment(c);
  CHECK(res.discarded == 0);
  CHECK(res.s_stoch == doctest::Approx(res.s_det).epsilon(0.01));
}

TEST_CASE("zero samples still give deterministic curves") {
  StochasticConfig c = small_config();
  c.sample_count = 0;
  const auto res = run_demand_experiment(c);
  CHECK(res.tts.empty());
  CHECK(res.curves[1].size() == c.curve_points);
  CHECK(std::isnan(res.s_stoch));
  CHECK(std::isfinite(res.s_det));
}

TEST_CASE("config validation") {
  StochasticConfig c;
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = StochasticConfig{};
  c.supply_hi = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}
