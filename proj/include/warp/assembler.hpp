// assembler.hpp - two-pass assembler and disassembler for WarpRISC-32.
#pragma once

#include <string>
#include <string_view>

#include "warp/isa.hpp"

namespace warp {

// Assembles `source`. Shift, multiply and divide instructions the target core
// lacks are lowered to software sequences (see lowering.hpp). Throws AsmError.
Program assemble(std::string_view source, const CpuFeatures& features = {});

// Emits assembly that reassembles to the identical binary image.
std::string disassemble(const Program& program);

}  // namespace warp
