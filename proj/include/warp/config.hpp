// config.hpp - run settings and their key=value file format.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "warp/cpu.hpp"
#include "warp/energy.hpp"
#include "warp/fabric.hpp"
#include "warp/isa.hpp"

namespace warp {

struct OverheadParams {
  std::uint64_t config_cycles = 10'000;  // once, when the fabric is configured
  std::uint64_t invoke_cycles = 20;      // per accelerator start
  bool operator==(const OverheadParams&) const = default;
};

struct WarpSettings {
  CpuFeatures features;
  LatencyTable latencies;
  FabricModel fabric;
  EnergyParams energy;
  OverheadParams overhead;
  int cpu_count = 1;
  std::uint64_t cycle_limit = 200'000'000;
  std::size_t profiler_capacity = 16;
  bool wcla_overlap = false;
  bool profitability_check = true;
  std::uint32_t mmio_base = kDefaultMmioBase;

  void validate() const;
  bool operator==(const WarpSettings&) const = default;
};

// One `key = value` per line, `#` starts a comment. Unknown keys and malformed
// values throw std::invalid_argument naming the line.
WarpSettings parse_settings(std::string_view text, WarpSettings base = {});
WarpSettings load_settings(const std::string& path, WarpSettings base = {});
std::string format_settings(const WarpSettings& settings);

}  // namespace warp
