// lowering.hpp - software replacements for optional functional units.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "warp/isa.hpp"

namespace warp {

// Registers clobbered by the emitted software routines. Programs that need
// lowering must leave r10..r15 alone.
inline constexpr int kFirstReservedReg = 10;

struct LoweringResult {
  std::vector<Instruction> text;
  // new address of the first instruction expanded from each input instruction
  std::vector<std::uint32_t> new_address;
  bool emitted_routines = false;
};

LoweringResult lower_with_map(std::span<const Instruction> body, const CpuFeatures& features,
                              std::uint32_t base = kTextBase);

// Without a barrel shifter, `sll rd, ra, n` becomes a move plus n self-adds and
// right shifts call a doubling-and-compare routine. Without a multiplier or
// divider, mul/div call shift-add / restoring-division routines appended to
// the text. Branch targets inside the body are relocated.
std::vector<Instruction> lower_missing_features(std::span<const Instruction> body,
                                                const CpuFeatures& features,
                                                std::uint32_t base = kTextBase);

}  // namespace warp
