// warp.hpp - end-to-end warp flow: profile, partition, implement, patch, co-simulate.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warp/config.hpp"
#include "warp/cpu.hpp"
#include "warp/decompile.hpp"
#include "warp/energy.hpp"
#include "warp/fabric.hpp"
#include "warp/netlist.hpp"
#include "warp/wcla.hpp"

namespace warp {

// Binary with the loop header replaced by a jump to an appended stub that hands
// the live-in registers to the accelerator, starts it, polls for completion,
// reads the live-out registers back and resumes after the loop.
struct PatchedProgram {
  Program program;
  Instruction original_header;  // replaced instruction, restored by unpatch
  std::size_t original_words = 0;
  std::uint32_t header_pc = 0;
  std::uint32_t exit_pc = 0;
  std::uint32_t stub_start = 0;
  std::uint32_t start_pc = 0;  // store that starts the accelerator
  std::uint32_t poll_pc = 0;   // status load; the poll branch follows it
  int scratch_reg = 1;
};

class RelocationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws RelocationError when the stub does not fit below the data segment.
PatchedProgram patch_binary(const Program& program, const LoopRegion& region, const WclaConfig& wcla);
Program unpatch(const PatchedProgram& patched);

// Everything the partitioning module produces for one hot loop.
struct Partition {
  HotRegion hot;
  LoopRegion region;
  Cdfg cdfg;
  EligibilityVerdict verdict;
  LutNetlist netlist;
  FabricConfig fabric;
  WclaConfig wcla;
};

// A stage that refused the loop. `reason` is set for partitioning rejections.
struct StageRejection {
  std::string stage;  // profile, partition, cad, patch, cosim, profitability, share
  std::optional<RejectReason> reason;
  std::string detail;
};

// Extraction, decompilation, eligibility, synthesis and technology mapping.
// Throws PartitionError.
Partition analyze(const Program& program, const HotRegion& hot, const WarpSettings& settings);
// Place and route on `fabric` and build the accelerator configuration. Throws CadError.
void build_hardware(Partition& p, const WarpSettings& settings, const FabricModel& fabric);

struct CoRunResult {
  RunResult run;
  std::uint64_t idle_cycles = 0;  // start write plus poll loop
  std::uint64_t hw_cycles = 0;
  std::uint64_t starts = 0;
  std::uint64_t wall_cycles = 0;  // independent per-event cycle tally
  std::string fault;              // accelerator fault, empty when none
};

CoRunResult co_run(const PatchedProgram& patched, const WclaConfig& wcla, const WarpSettings& settings);

struct CycleBreakdown {
  std::uint64_t sw_cycles = 0;        // CPU cycles outside the accelerator wait
  std::uint64_t idle_cycles = 0;      // CPU cycles spent waiting for the accelerator
  std::uint64_t overhead_cycles = 0;  // configuration plus per-start handshakes
  std::uint64_t hw_cycles = 0;        // accelerator cycles at the hardware clock
  std::uint64_t starts = 0;
  std::uint64_t total_cpu_cycles() const { return sw_cycles + idle_cycles + overhead_cycles; }
};

struct PartitionRecord {
  bool hot_region = false;
  std::uint32_t region_start = 0;
  std::uint32_t region_end = 0;
  std::uint32_t region_count = 0;
  bool eligible = false;
  std::size_t estimated_luts = 0;
  std::size_t luts = 0;
  std::size_t wires = 0;
  std::size_t mac_ops = 0;
  double critical_path_ns = 0;
  std::uint32_t compute_cycles = 0;
  int route_iterations = 0;
  std::size_t routed_segments = 0;
  int fabric_columns = 0;
  std::optional<StageRejection> rejection;
};

struct WarpReport {
  std::string name;
  std::uint64_t cpu_clock_hz = kDefaultCpuHz;
  std::uint64_t hw_clock_hz = kDefaultHwHz;
  OverheadParams overhead;
  std::uint64_t baseline_cycles = 0;
  std::uint64_t kernel_cycles = 0;  // baseline cycles spent inside the hot region
  bool warped = false;
  bool equivalent = true;  // warped final data memory equals the baseline
  CycleBreakdown breakdown;
  double t_baseline = 0;
  double t_nonkernel = 0;
  double t_warped = 0;
  double speedup = 1.0;
  TimeBreakdown times_before;
  TimeBreakdown times_after;
  EnergyReport energy_before;
  EnergyReport energy_after;
  PartitionRecord partition;

  // t_baseline / t_warped recomputed from baseline_cycles and the breakdown.
  double recomputed_speedup() const;
};

// Stage failures are recorded in the report. Throws only when the unmodified
// program faults or exceeds the cycle limit.
WarpReport warp(const Program& program, const WarpSettings& settings, const std::string& name = "program");

// Full flow plus the patched binary and configuration, for re-running with other data.
struct WarpOutcome {
  WarpReport report;
  std::optional<Partition> partition;
  std::optional<PatchedProgram> patched;
};
WarpOutcome warp_detailed(const Program& program, const WarpSettings& settings, const std::string& name,
                          std::optional<FabricModel> fabric = std::nullopt);

// Columns per request in service order; 0 marks a request that did not fit.
// Each request needs ceil(luts / height) columns (at least one); leftover
// columns are spread over the accepted requests in proportion to their needs.
std::vector<int> allocate_columns(const std::vector<std::size_t>& lut_requests, const FabricModel& fabric);

struct MultiReport {
  std::vector<WarpReport> cpus;
  std::vector<int> service_log;  // CPU index per DPM service, in order
  std::vector<int> columns;      // fabric columns granted per CPU
};

// One DPM serves the CPUs round robin over a shared fabric split into column shares.
MultiReport warp_multi(const std::vector<Program>& programs, const WarpSettings& settings,
                       const std::vector<std::string>& names = {});

}  // namespace warp
