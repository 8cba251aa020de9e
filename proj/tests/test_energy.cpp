#include <catch_amalgamated.hpp>

#include <random>

#include "warp/energy.hpp"

using namespace warp;
using Catch::Approx;

TEST_CASE("software-only energy is active processor power plus static power") {
  const EnergyParams p;
  const EnergyReport e = compute_energy(TimeBreakdown::software_only(2.0), p);
  CHECK(e.e_mb == Approx(0.30 * 2.0));
  CHECK(e.e_hw == 0.0);
  CHECK(e.e_static == Approx(0.10 * 2.0));
  CHECK(e.e_total == Approx(0.8));
}

TEST_CASE("energy terms follow their definitions for random times and powers") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 10'000; ++i) {
    EnergyParams p;
    p.p_mb_idle = u(rng);
    p.p_mb_active = u(rng);
    p.p_hw = u(rng);
    p.p_static = u(rng);
    p.active_time = i % 2 ? EnergyParams::ActiveTime::Split : EnergyParams::ActiveTime::Shared;
    TimeBreakdown t;
    t.t_cpu_active = u(rng);
    t.t_cpu_idle = u(rng);
    t.t_hw_active = u(rng);
    t.t_total = t.t_cpu_active + t.t_cpu_idle;
    const EnergyReport e = compute_energy(t, p);
    const double hw_time = i % 2 ? t.t_hw_active : t.t_cpu_active;
    REQUIRE(e.e_mb == Approx(p.p_mb_idle * t.t_cpu_idle + p.p_mb_active * t.t_cpu_active));
    REQUIRE(e.e_hw == Approx(p.p_hw * hw_time));
    REQUIRE(e.e_static == Approx(p.p_static * t.t_total));
    REQUIRE(e.e_total == Approx(e.e_mb + e.e_hw + e.e_static));
    REQUIRE(e.e_total >= 0);
  }
}

TEST_CASE("cycle counts convert at each side's clock") {
  EnergyParams p;
  p.cpu_clock_hz = 100;
  p.hw_clock_hz = 400;
  const TimeBreakdown t = TimeBreakdown::from_cycles(50, 30, 200, p);
  CHECK(t.t_cpu_active == Approx(0.5));
  CHECK(t.t_cpu_idle == Approx(0.3));
  CHECK(t.t_hw_active == Approx(0.5));
  CHECK(t.t_total == Approx(0.8));
}

TEST_CASE("reduction compares totals") {
  EnergyReport before, after;
  before.e_total = 4.0;
  after.e_total = 1.0;
  CHECK(compare(before, after) == Approx(0.75));
  after.e_total = 6.0;
  CHECK(compare(before, after) == Approx(-0.5));
  before.e_total = 0.0;
  CHECK_THROWS_AS(compare(before, after), std::invalid_argument);
}

TEST_CASE("negative or non-finite inputs are refused") {
  EnergyParams p;
  TimeBreakdown t = TimeBreakdown::software_only(1.0);
  t.t_cpu_idle = -1e-9;
  CHECK_THROWS_AS(compute_energy(t, p), std::invalid_argument);
  t = TimeBreakdown::software_only(std::nan(""));
  CHECK_THROWS_AS(compute_energy(t, p), std::invalid_argument);
  p.p_hw = -0.1;
  CHECK_THROWS_AS(compute_energy(TimeBreakdown::software_only(1.0), p), std::invalid_argument);
  p = EnergyParams{};
  p.hw_clock_hz = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("moving work to faster idle-heavy hardware lowers energy") {
  const EnergyParams p;
  const EnergyReport before = compute_energy(TimeBreakdown::from_cycles(1'000'000, 0, 0, p), p);
  const EnergyReport after = compute_energy(TimeBreakdown::from_cycles(100'000, 100'000, 300'000, p), p);
  CHECK(compare(before, after) > 0.5);
}
