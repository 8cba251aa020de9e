// energy.hpp - processor, fabric and static energy accounting.
#pragma once

#include <cstdint>

namespace warp {

struct EnergyParams {
  // How the active time of the hardware term is taken: from the hardware's own
  // busy time (Split), or from the processor's active time (Shared).
  enum class ActiveTime { Split, Shared };

  double p_mb_idle = 0.10;    // W
  double p_mb_active = 0.30;  // W
  double p_hw = 0.15;         // W
  double p_static = 0.10;     // W
  std::uint64_t cpu_clock_hz = 85'000'000;
  std::uint64_t hw_clock_hz = 250'000'000;
  ActiveTime active_time = ActiveTime::Split;

  void validate() const;
  bool operator==(const EnergyParams&) const = default;
};

struct TimeBreakdown {
  double t_cpu_active = 0;
  double t_cpu_idle = 0;
  double t_hw_active = 0;
  double t_total = 0;

  static TimeBreakdown software_only(double seconds);
  static TimeBreakdown from_cycles(std::uint64_t cpu_active, std::uint64_t cpu_idle, std::uint64_t hw_active,
                                   const EnergyParams& params);
  void validate() const;
};

struct EnergyReport {
  double e_mb = 0;
  double e_hw = 0;
  double e_static = 0;
  double e_total = 0;
  double reduction_vs_baseline = 0;
};

// e_mb = p_mb_idle*t_idle + p_mb_active*t_active, e_hw = p_hw*t_hw,
// e_static = p_static*t_total, e_total = e_mb + e_hw + e_static.
// Throws std::invalid_argument for negative times or powers.
EnergyReport compute_energy(const TimeBreakdown& times, const EnergyParams& params);

// 1 - after/before; negative when `after` uses more energy. Throws on a zero baseline.
double compare(const EnergyReport& before, const EnergyReport& after);

}  // namespace warp
