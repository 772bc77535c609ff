#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <random>

#include "../oracle/euler.hpp"
#include "netfrag/error.hpp"
#include "netfrag/recovery.hpp"

using namespace netfrag;

namespace {

// Five cuts with one stationary cut in the middle.
PiecewiseLinearMfd five_cut() {
  return PiecewiseLinearMfd({Cut{-8e-4, 8.0}, Cut{-2e-4, 3.5}, Cut{0.0, 2.5}, Cut{9e-4, 0.7},
                             Cut{1.6e-3, 0.0}},
                            10000.0);
}

double tts_at(double n_prime, double t, const PiecewiseLinearMfd& mfd, double m0) {
  return total_tts_demand(n_prime, Horizon::seconds(t), mfd, m0).tts;
}

}  // namespace

TEST_CASE("state_after") {
  const Cut c{1e-3, 0.0};
  CHECK(state_after(1000.0, 0.0, c, 0.0) == 1000.0);
  CHECK(state_after(1000.0, 1000.0, c, 0.0) == doctest::Approx(1000.0 * std::exp(-1.0)));
  // Fixed point of the cut.
  CHECK(state_after(500.0, 1234.0, c, 0.5) == doctest::Approx(500.0).epsilon(1e-14));
  // Stationary cut moves linearly.
  CHECK(state_after(8000.0, 100.0, Cut{0.0, 2.0}, 0.5) == doctest::Approx(7850.0));

  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const auto euler = oracle::integrate(mfd, 1000.0, 0.0, 1000.0, 0.001);
  CHECK(euler.n_end == doctest::Approx(367.879441).epsilon(1e-3));
}

TEST_CASE("time_between") {
  const Cut back{-1e-3, 10.0};
  CHECK(time_between(9000.0, 9000.0, back, 0.5) == 0.0);
  CHECK(time_between(9000.0, 8000.0, back, 0.5) == doctest::Approx(1000.0 * std::log(3.0)));
  CHECK(time_between(8000.0, 2000.0, Cut{0.0, 2.0}, 0.5) == doctest::Approx(4000.0));
  // Equilibrium of the free-flow cut at 500 separates the two states.
  CHECK_THROWS_AS(time_between(1000.0, 200.0, Cut{1e-3, 0.0}, 0.5), UnreachableStateError);
  // Moving against the drift.
  CHECK_THROWS_AS(time_between(8000.0, 9000.0, back, 0.5), UnreachableStateError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Cut c{(u(rng) - 0.5) * 2e-3, 1.0 + 5.0 * u(rng)};
    const double n1 = 2000.0 + 3000.0 * u(rng);
    const double m0 = 0.2 * u(rng);
    const double dt = 10.0 + 500.0 * u(rng);
    const double n2 = state_after(n1, dt, c, m0);
    CHECK(time_between(n1, n2, c, m0) == doctest::Approx(dt).epsilon(1e-9));
  }
}

TEST_CASE("tts_on_cut") {
  const Cut back{-1e-3, 10.0};
  CHECK(tts_on_cut(9000.0, 0.0, back, 0.5) == 0.0);
  CHECK(tts_on_cut(9000.0, 1098.6, back, 0.5) == doctest::Approx(9.437e6).epsilon(1e-3));
  CHECK(tts_on_cut(1000.0, INFINITY, Cut{1e-3, 0.0}, 0.0) == doctest::Approx(1e6));
  // Stationary cut: n t + (m0 - b) t^2 / 2.
  CHECK(tts_on_cut(8000.0, 100.0, Cut{0.0, 2.0}, 0.5) ==
        doctest::Approx(8000.0 * 100.0 - 1.5 * 5000.0));

  // Trapezoidal integration of the closed-form path.
  const double dt = 1098.6;
  double sum = 0.0;
  const int steps = 100000;
  for (int k = 0; k < steps; ++k) {
    const double a = state_after(9000.0, dt * k / steps, back, 0.5);
    const double b = state_after(9000.0, dt * (k + 1) / steps, back, 0.5);
    sum += 0.5 * (a + b) * dt / steps;
  }
  CHECK(tts_on_cut(9000.0, dt, back, 0.5) == doctest::Approx(sum).epsilon(1e-9));
}

TEST_CASE("times to critical") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const auto t = times_to_critical(9000.0, mfd, 0.5);
  REQUIRE(t.size() == 2);
  CHECK(t[0].breakpoint == 1);
  CHECK(t[0].time == doctest::Approx(1000.0 * std::log(3.0)));
  CHECK(t[1].time == doctest::Approx(1000.0 * std::log(3.0) + 4000.0));

  const auto at_bp = times_to_critical(8000.0, mfd, 0.5);
  REQUIRE(at_bp.size() == 2);
  CHECK(at_bp[0].time == 0.0);
  CHECK(at_bp[1].time == doctest::Approx(4000.0));

  const auto five = five_cut();
  const auto chain = times_to_critical(9500.0, five, 0.3);
  const auto euler = oracle::integrate(five, 9500.0, 0.3, 20000.0, 0.01);
  REQUIRE(chain.size() == 4);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i > 0) CHECK(chain[i].time > chain[i - 1].time);
    CHECK(chain[i].time ==
          doctest::Approx(euler.crossing_times[chain[i].breakpoint - 1]).epsilon(1e-3));
  }
  CHECK_THROWS_AS(times_to_critical(9500.0, mfd, 1.0), AssumptionError);
}

TEST_CASE("demand recovery against the Euler oracle") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const auto r = total_tts_demand(9000.0, Horizon::unbounded(), mfd, 0.5);
  REQUIRE(r.segments.size() == 3);
  CHECK(r.segments[0].cut == 0);
  CHECK(r.segments[2].cut == 2);
  CHECK(r.n_end == 500.0);
  const double horizon = 40000.0;
  const auto euler = oracle::integrate(mfd, 9000.0, 0.5, horizon);
  CHECK(r.excess_tts == doctest::Approx(euler.tts - 500.0 * horizon).epsilon(1e-3));

  const auto finite = total_tts_demand(9000.0, Horizon::seconds(7200.0), mfd, 0.5);
  const auto euler_finite = oracle::integrate(mfd, 9000.0, 0.5, 7200.0);
  CHECK(finite.tts == doctest::Approx(euler_finite.tts).epsilon(1e-3));
  CHECK(finite.n_end == doctest::Approx(euler_finite.n_end).epsilon(1e-3));

  double total = 0.0;
  for (const Segment& s : finite.segments) {
    CHECK(s.duration >= 0.0);
    CHECK(s.n_entry >= s.n_exit);
    total += s.tts;
  }
  CHECK(total == doctest::Approx(finite.tts).epsilon(1e-15));
}

TEST_CASE("no disruption scores zero excess") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const auto r = total_tts_demand(500.0, Horizon::seconds(3600.0), mfd, 0.5);
  CHECK(r.excess_tts == 0.0);
  CHECK(r.tts == doctest::Approx(500.0 * 3600.0));
  const auto inf = total_tts_demand(500.0, Horizon::unbounded(), mfd, 0.5);
  CHECK(inf.excess_tts == 0.0);
}

TEST_CASE("assumption violations are typed") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  try {
    total_tts_demand(1500.0, Horizon::unbounded(), mfd, 0.5);
    FAIL("expected an assumption error");
  } catch (const AssumptionError& e) {
    CHECK(e.assumption() == 3);
    CHECK(std::string(e.what()).find("Assumption 3") != std::string::npos);
  }
  try {
    total_tts_demand(9000.0, Horizon::unbounded(), mfd, 1.5);
    FAIL("expected an assumption error");
  } catch (const AssumptionError& e) {
    CHECK(e.assumption() == 2);
  }
  try {
    total_tts_supply(0.5, Horizon::unbounded(), mfd, 1.5);
    FAIL("expected an assumption error");
  } catch (const AssumptionError& e) {
    CHECK(e.assumption() == 2);
  }
  CHECK_THROWS_AS(total_tts_demand(9000.0, Horizon::unbounded(), mfd, 2.0), AssumptionError);
  CHECK_THROWS_AS(total_tts_demand(10001.0, Horizon::unbounded(), mfd, 0.5), DomainError);
  CHECK_THROWS_AS(Horizon::seconds(-1.0), ParameterError);
}

TEST_CASE("segment additivity") {
  const auto five = five_cut();
  for (double split : {100.0, 1500.0, 4000.0, 9000.0}) {
    const double t2 = 3000.0;
    const auto whole = recover(five, 9600.0, 0.3, Horizon::seconds(split + t2));
    const auto first = recover(five, 9600.0, 0.3, Horizon::seconds(split));
    const auto rest = recover(five, first.n_end, 0.3, Horizon::seconds(t2));
    CHECK(whole.tts == doctest::Approx(first.tts + rest.tts).epsilon(1e-9));
    CHECK(whole.n_end == doctest::Approx(rest.n_end).epsilon(1e-9));
  }
}

TEST_CASE("intermediate segments do not depend on n'") {
  const auto five = five_cut();
  const auto a = total_tts_demand(9500.0, Horizon::unbounded(), five, 0.3);
  const auto b = total_tts_demand(9100.0, Horizon::unbounded(), five, 0.3);
  REQUIRE(a.segments.size() == b.segments.size());
  REQUIRE(a.segments.front().cut == b.segments.front().cut);
  for (std::size_t s = 1; s + 1 < a.segments.size(); ++s) {
    CHECK(a.segments[s].tts == b.segments[s].tts);
    CHECK(a.segments[s].duration == b.segments[s].duration);
  }
  CHECK(a.segments.back().excess_tts == b.segments.back().excess_tts);
}

TEST_CASE("monotone recovery") {
  const auto five = five_cut();
  const auto r = total_tts_demand(9500.0, Horizon::seconds(20000.0), five, 0.3);
  const auto path = sample_trajectory(r, five, 5.0);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i].n < path[i - 1].n);
}

TEST_CASE("demand curvature") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const double m0 = 0.5;
  // Still on the entry cut: no curvature.
  const auto early = second_derivative_demand(9000.0, mfd, m0, 500.0);
  CHECK(early.value == 0.0);
  CHECK(early.entry_cut == early.current_cut);

  for (double t : {3000.0, 6000.0, 7200.0, 20000.0}) {
    const double n = 9000.0;
    const auto c = second_derivative_demand(n, mfd, m0, t);
    CHECK(c.value > 0.0);
    const double h = 1.0;
    const double fd =
        (tts_at(n + h, t, mfd, m0) - 2.0 * tts_at(n, t, mfd, m0) + tts_at(n - h, t, mfd, m0)) /
        (h * h);
    CHECK(c.value == doctest::Approx(fd).epsilon(1e-2));
    if (c.p_constant) {
      const Cut& y = mfd.cut(c.entry_cut);
      const Cut& z = mfd.cut(c.current_cut);
      const double e = y.at(n) - m0;
      const double reduced = (y.intercept - z.intercept + (y.slope - z.slope) * c.state) / (e * e);
      CHECK(c.value == doctest::Approx(reduced).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(second_derivative_demand(9000.0, mfd, m0, 0.0), DomainError);

  const auto five = five_cut();
  for (double t : std::initializer_list<double>{4000.0, 5000.0, 10000.0, INFINITY}) {
    const auto c = second_derivative_demand(9500.0, five, 0.3, t);
    CHECK(c.value > 0.0);
  }
}

TEST_CASE("supply equilibrium") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 4.0);
  CHECK(supply_equilibrium(0.0, 600.0, mfd) == 600.0);
  CHECK(supply_equilibrium(0.5, 600.0, mfd) == doctest::Approx(1200.0));
  double prev = 600.0;
  for (double r = 0.01; r <= 0.5; r += 0.01) {
    const double n = supply_equilibrium(r, 600.0, mfd);
    CHECK(n > prev);
    prev = n;
  }
  CHECK_THROWS_AS(supply_equilibrium(0.9, 600.0, mfd), AssumptionError);
  CHECK_THROWS_AS(supply_equilibrium(1.0, 600.0, mfd), ParameterError);
}

TEST_CASE("supply recovery") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  CHECK(total_tts_supply(0.0, Horizon::unbounded(), mfd, 0.6).excess_tts == 0.0);
  double prev = 0.0;
  std::vector<double> tts;
  for (int i = 0; i <= 50; ++i) {
    const double r = 0.01 * i;
    const double v = total_tts_supply(r, Horizon::seconds(7200.0), mfd, 0.6).tts;
    CHECK(v >= prev);
    prev = v;
    tts.push_back(v);
  }
  for (std::size_t i = 1; i + 1 < tts.size(); ++i) {
    CHECK(tts[i + 1] - 2.0 * tts[i] + tts[i - 1] >= -1e-6 * tts[i]);
  }
  const auto r = total_tts_supply(0.3, Horizon::seconds(7200.0), mfd, 0.6);
  const auto euler = oracle::integrate(mfd, r.n_start, 0.6, 7200.0);
  CHECK(r.tts == doctest::Approx(euler.tts).epsilon(1e-3));
}

TEST_CASE("supply curvature") {
  const auto mfd = build_unit_mfd(1e-3, 1e-3, 2.0);
  const double m0 = 0.6;
  const auto at0 = second_derivative_supply_fd(0.0, mfd, m0);
  CHECK_FALSE(at0.central);
  CHECK(at0.dn_dr == doctest::Approx(600.0));  // n0 on the origin cut
  for (double r = 0.0; r <= 0.5 + 1e-12; r += 0.05) {
    const auto c = second_derivative_supply_fd(r, mfd, m0);
    CHECK(c.d2tts_dr2 >= 0.0);
    CHECK(c.d2n_dr2 == doctest::Approx(2.0 * c.dn_dr / (1.0 - r)).epsilon(1e-14));
    const double h = 1e-4;
    const double n0 = 600.0;
    const double fd1 = (supply_equilibrium(r + h, n0, mfd) - supply_equilibrium(std::max(r - h, 0.0), n0, mfd)) /
                       (r >= h ? 2.0 * h : h);
    CHECK(c.dn_dr == doctest::Approx(fd1).epsilon(1e-2));
  }
  CHECK_THROWS_AS(second_derivative_supply_fd(0.695, mfd, m0, Horizon::unbounded(), 0.01), DomainError);
}

TEST_CASE("random scenarios against the Euler oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const double af = 3e-4 + 1e-3 * u(rng);
    const double aw = 3e-4 + 1e-3 * u(rng);
    const double cap = af * aw * 10000.0 / (af + aw);
    const auto mfd = build_unit_mfd(af, aw, cap * (0.3 + 0.6 * u(rng)));
    const double m0 = mfd.m_max() * 0.6 * u(rng);
    const double nu = mfd.congested_accumulation(m0);
    const double n_prime = mfd.critical_accumulation() + (nu - mfd.critical_accumulation()) * (0.05 + 0.9 * u(rng));
    const double horizon = 2000.0 + 8000.0 * u(rng);
    const auto r = total_tts_demand(n_prime, Horizon::seconds(horizon), mfd, m0);
    const auto e = oracle::integrate(mfd, n_prime, m0, horizon);
    CHECK(r.tts == doctest::Approx(e.tts).epsilon(1e-3));
  }
}
