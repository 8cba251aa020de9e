// cpu.hpp - latency-charging model of the three-stage soft core.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "warp/isa.hpp"

namespace warp {

// Per-class cycle costs. `long_branch_mask` selects branch opcodes (bit = opcode
// value) whose taken case costs `branch_long`; empty by default.
struct LatencyTable {
  std::uint32_t alu1 = 1;
  std::uint32_t mul3 = 3;
  std::uint32_t div = 32;
  std::uint32_t load = 2;
  std::uint32_t store = 1;
  std::uint32_t branch_taken = 2;
  std::uint32_t branch_not_taken = 1;
  std::uint32_t branch_long = 3;
  std::uint32_t long_branch_mask = 0;
  std::uint32_t jump = 2;
  std::uint32_t mmio = 2;

  std::uint32_t max_latency() const;
  void validate() const;
  bool operator==(const LatencyTable&) const = default;
};

inline constexpr std::uint32_t kDefaultMmioBase = 0xFFFF0000u;
inline constexpr std::uint32_t kMmioWindowBytes = 0x100;

struct CpuState {
  std::uint32_t pc = 0;
  std::array<std::uint32_t, kNumRegs> regs{};
  std::vector<std::uint8_t> data_mem;
  std::uint32_t data_base = kDataBase;
  std::uint64_t cycle_count = 0;
  bool halted = false;

  static CpuState initial(const Program& program);
  std::uint32_t load_word(std::uint32_t addr) const;
  void store_word(std::uint32_t addr, std::uint32_t value);
  bool in_data(std::uint32_t addr) const {
    return addr >= data_base && static_cast<std::uint64_t>(addr) + 4 <= data_base + data_mem.size();
  }
  bool operator==(const CpuState&) const = default;
};

struct TraceEvent {
  std::uint32_t pc = 0;
  Opcode op = Opcode::Add;
  std::optional<bool> taken;  // set for conditional branches
  std::uint32_t next_pc = 0;
  std::uint32_t cycles = 1;
  bool operator==(const TraceEvent&) const = default;
};

// Peripheral reached through lw/sw in the MMIO window.
class MmioDevice {
 public:
  virtual ~MmioDevice() = default;
  virtual std::uint32_t read(std::uint32_t offset, CpuState& cpu) = 0;
  virtual void write(std::uint32_t offset, std::uint32_t value, CpuState& cpu) = 0;
};

struct StepContext {
  MmioDevice* device = nullptr;
  std::uint32_t mmio_base = kDefaultMmioBase;
};

// Executes one instruction in place and returns its trace event. Throws SimFault.
TraceEvent step(CpuState& state, const Program& program, const LatencyTable& latencies,
                const StepContext& ctx = {});

struct RunOptions {
  std::uint64_t cycle_limit = 200'000'000;
  bool record_trace = false;
  std::function<void(const TraceEvent&)> observer;
  MmioDevice* device = nullptr;
  std::uint32_t mmio_base = kDefaultMmioBase;
};

struct RunResult {
  CpuState final_state;
  std::vector<TraceEvent> trace;  // empty unless record_trace
  std::uint64_t total_cycles = 0;
  std::uint64_t instructions = 0;
  std::vector<std::uint64_t> pc_counts;  // indexed by (pc - text_base) / 4
  bool limit_exceeded = false;
  bool operator==(const RunResult&) const = default;
};

RunResult run(const Program& program, const LatencyTable& latencies, const RunOptions& options = {});
RunResult run_from(CpuState state, const Program& program, const LatencyTable& latencies,
                   const RunOptions& options = {});

// Line format `cycle pc opcode cycles [T|N]`; cycle is the count before the instruction.
std::string format_trace(std::span<const TraceEvent> trace);
std::string format_pc_counts(const Program& program, std::span<const std::uint64_t> counts);

}  // namespace warp
