#include "warp/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace warp {

namespace {

void non_negative(double v, const char* what) {
  if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be a finite value >= 0");
}

}  // namespace

void EnergyParams::validate() const {
  non_negative(p_mb_idle, "p_mb_idle");
  non_negative(p_mb_active, "p_mb_active");
  non_negative(p_hw, "p_hw");
  non_negative(p_static, "p_static");
  if (cpu_clock_hz == 0 || hw_clock_hz == 0) throw std::invalid_argument("clock frequencies must be > 0");
}

TimeBreakdown TimeBreakdown::software_only(double seconds) {
  TimeBreakdown t;
  t.t_cpu_active = seconds;
  t.t_total = seconds;
  return t;
}

TimeBreakdown TimeBreakdown::from_cycles(std::uint64_t cpu_active, std::uint64_t cpu_idle, std::uint64_t hw_active,
                                         const EnergyParams& p) {
  TimeBreakdown t;
  const double fc = static_cast<double>(p.cpu_clock_hz);
  t.t_cpu_active = static_cast<double>(cpu_active) / fc;
  t.t_cpu_idle = static_cast<double>(cpu_idle) / fc;
  t.t_hw_active = static_cast<double>(hw_active) / static_cast<double>(p.hw_clock_hz);
  t.t_total = t.t_cpu_active + t.t_cpu_idle;
  return t;
}

void TimeBreakdown::validate() const {
  non_negative(t_cpu_active, "t_cpu_active");
  non_negative(t_cpu_idle, "t_cpu_idle");
  non_negative(t_hw_active, "t_hw_active");
  non_negative(t_total, "t_total");
}

EnergyReport compute_energy(const TimeBreakdown& t, const EnergyParams& p) {
  t.validate();
  p.validate();
  EnergyReport r;
  r.e_mb = p.p_mb_idle * t.t_cpu_idle + p.p_mb_active * t.t_cpu_active;
  const double hw_time = p.active_time == EnergyParams::ActiveTime::Split ? t.t_hw_active : t.t_cpu_active;
  r.e_hw = p.p_hw * hw_time;
  r.e_static = p.p_static * t.t_total;
  r.e_total = r.e_mb + r.e_hw + r.e_static;
  return r;
}

double compare(const EnergyReport& before, const EnergyReport& after) {
  if (!(before.e_total > 0)) throw std::invalid_argument("baseline energy must be > 0");
  return 1.0 - after.e_total / before.e_total;
}

}  // namespace warp
