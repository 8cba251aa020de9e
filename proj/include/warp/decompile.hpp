// decompile.hpp - hot loop extraction, CDFG recovery and hardware eligibility.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warp/cdfg.hpp"
#include "warp/error.hpp"
#include "warp/isa.hpp"
#include "warp/profiler.hpp"

namespace warp {

struct TripCountExpr {
  enum class Kind { Constant, RegisterBound, Unknown };
  Kind kind = Kind::Unknown;
  int induction_reg = 0;
  std::int32_t step = 0;
  int bound_reg = 0;            // RegisterBound
  std::uint32_t constant = 0;   // Constant: iteration count
};

struct LoopRegion {
  std::uint32_t start = 0;  // branch target
  std::uint32_t end = 0;    // backward branch pc
  std::vector<Instruction> body;  // [start, end] inclusive
  TripCountExpr trip_count_expr;
  // Register values known on every entry to the loop (straight-line preheader).
  std::array<std::optional<std::uint32_t>, kNumRegs> entry_constants{};
  std::uint16_t live_after = 0;  // registers read after the loop exits
};

// Registers that may be read before being written on some path from `addr`.
// Calls and indirect jumps are treated as reading every register.
std::uint16_t live_registers(const Program& program, std::uint32_t addr);

// Throws PartitionError (NestedBackwardBranch, ContainsCall, UnsupportedOp) or
// std::invalid_argument when `hot` does not name a backward branch in text.
LoopRegion extract_region(const Program& program, const HotRegion& hot);

// Throws PartitionError (UnsupportedOp, IrregularAccess, UnboundedTrip).
Cdfg decompile(const LoopRegion& region);

struct FabricLimits {
  std::size_t lut_capacity = 256;
  std::size_t array_registers = 3;
};

struct EligibilityVerdict {
  struct Reason {
    RejectReason reason;
    std::string detail;
  };
  bool eligible = true;
  std::vector<Reason> reasons;
  std::size_t estimated_luts = 0;

  void reject(RejectReason r, std::string detail) {
    eligible = false;
    reasons.push_back({r, std::move(detail)});
  }
};

// LUT estimate comes from running synthesis and technology mapping.
EligibilityVerdict check_eligibility(const Cdfg& cdfg, const FabricLimits& limits);

}  // namespace warp
