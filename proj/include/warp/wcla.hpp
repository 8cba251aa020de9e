// wcla.hpp - runtime model of the loop accelerator: address generators, loop
// control, three data registers, MAC and the configured fabric.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "warp/cdfg.hpp"
#include "warp/cpu.hpp"
#include "warp/fabric.hpp"

namespace warp {

inline constexpr std::uint64_t kDefaultCpuHz = 85'000'000;
inline constexpr std::uint64_t kDefaultHwHz = 250'000'000;

// MMIO register map, byte offsets from the window base.
namespace mmio {
inline constexpr std::uint32_t kStart = 0x00;
inline constexpr std::uint32_t kStatus = 0x04;
inline constexpr std::uint32_t kAccumulator = 0x08;
inline constexpr std::uint32_t kRegWindow = 0x40;  // + 4*r: live-in write, final value read
inline constexpr std::uint32_t kStatusDone = 1u;
inline constexpr std::uint32_t kStatusError = 2u;
}  // namespace mmio

struct DadgProgram {
  Affine address;  // address at iteration k
  Direction dir = Direction::Read;
  std::int32_t stride() const { return static_cast<std::int32_t>(address.iter); }
};

struct MacBinding {
  int reg = 0;
  Affine init;
};

struct WclaConfig {
  FabricConfig fabric;
  std::vector<DadgProgram> dadg;  // Reg0..Reg2
  LoopHeader lch;
  std::vector<Induction> inductions;
  std::optional<MacBinding> mac;
  std::uint16_t live_ins = 0;
  std::uint16_t live_outs = 0;
  std::uint64_t hw_clock_hz = kDefaultHwHz;
  std::uint32_t compute_cycles = 1;
  bool overlap = false;  // overlap the read phase with the compute phase
  std::uint32_t mmio_base = kDefaultMmioBase;

  double period_ns() const { return 1e9 / static_cast<double>(hw_clock_hz); }
  std::size_t reads() const;
  std::size_t writes() const;
  std::uint64_t cycles_per_iteration() const;
};

// Builds the accelerator program for a decompiled loop and its routed fabric.
WclaConfig make_wcla_config(const Cdfg& cdfg, const FabricConfig& fabric, std::uint64_t hw_clock_hz = kDefaultHwHz,
                            bool overlap = false);

class WclaFault : public std::runtime_error {
 public:
  WclaFault(std::uint64_t iteration, const std::string& msg)
      : std::runtime_error("accelerator fault in iteration " + std::to_string(iteration) + ": " + msg),
        iteration_(iteration) {}
  std::uint64_t iteration() const { return iteration_; }

 private:
  std::uint64_t iteration_;
};

struct HwRunResult {
  std::uint64_t hw_cycles = 0;
  std::uint64_t iterations = 0;
  std::uint64_t memory_reads = 0;
  std::uint64_t memory_writes = 0;
  std::uint32_t accumulator = 0;
  RegFile final_regs{};  // live-in values updated with inductions and accumulator
};

// Depends only on the configuration and the trip count.
std::uint64_t hw_cycles_for(const WclaConfig& config, std::uint64_t trips);

// Throws WclaFault for out-of-range addresses or a trip count the loop control cannot represent.
HwRunResult execute(const WclaConfig& config, const RegFile& live_ins, std::vector<std::uint8_t>& data_mem,
                    std::uint32_t data_base = kDataBase);
// Same, reusing a simulator built from config.fabric.
HwRunResult execute(const WclaConfig& config, const FabricSimulator& fabric, const RegFile& live_ins,
                    std::vector<std::uint8_t>& data_mem, std::uint32_t data_base = kDataBase);

// CPU cycles until a job of `hw_cycles` finishes, rounded up.
std::uint64_t cpu_cycles_for(std::uint64_t hw_cycles, std::uint64_t cpu_hz, std::uint64_t hw_hz);

// The accelerator as seen from the CPU's MMIO window. A start executes the
// kernel immediately; status reads report busy until the cross-clock delay passes.
class WclaDevice : public MmioDevice {
 public:
  WclaDevice(WclaConfig config, std::uint64_t cpu_hz = kDefaultCpuHz);

  std::uint32_t read(std::uint32_t offset, CpuState& cpu) override;
  void write(std::uint32_t offset, std::uint32_t value, CpuState& cpu) override;

  const WclaConfig& config() const { return config_; }
  std::uint64_t starts() const { return starts_; }
  std::uint64_t hw_cycles() const { return hw_cycles_; }
  std::uint64_t iterations() const { return iterations_; }
  bool error() const { return status_ & mmio::kStatusError; }
  const std::string& fault() const { return fault_; }
  std::uint64_t done_at() const { return done_at_; }

 private:
  bool busy(const CpuState& cpu) const { return running_ && cpu.cycle_count < done_at_; }

  WclaConfig config_;
  FabricSimulator fabric_;
  std::uint64_t cpu_hz_;
  RegFile window_{};
  std::uint32_t status_ = mmio::kStatusDone;
  bool running_ = false;
  std::uint64_t done_at_ = 0;
  std::uint64_t starts_ = 0;
  std::uint64_t hw_cycles_ = 0;
  std::uint64_t iterations_ = 0;
  std::uint32_t accumulator_ = 0;
  std::string fault_;
};

}  // namespace warp
