// isa.hpp - WarpRISC-32 instruction set: opcodes, instructions, programs, encoding.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace warp {

inline constexpr int kNumRegs = 16;
inline constexpr std::uint32_t kTextBase = 0x00000000;
inline constexpr std::uint32_t kDataBase = 0x00010000;
inline constexpr std::uint32_t kMaxTextBytes = kDataBase - kTextBase;
inline constexpr std::uint32_t kMaxDataBytes = 0x00010000;

// Immediate field is 18 bits, two's complement.
inline constexpr std::int32_t kImmMin = -(1 << 17);
inline constexpr std::int32_t kImmMax = (1 << 17) - 1;
inline constexpr std::int32_t kLuiMax = (1 << 18) - 1;
inline constexpr int kLuiShift = 14;

struct CpuFeatures {
  bool barrel_shifter = true;
  bool multiplier = true;
  bool divider = true;

  static CpuFeatures all_on() { return {}; }
  static CpuFeatures all_off() { return {false, false, false}; }
  bool operator==(const CpuFeatures&) const = default;
};

enum class Opcode : std::uint8_t {
  Add = 1, Addi, Sub, And, Or, Xor,
  Sll, Srl, Sra,
  Mul, Div,
  Lw, Sw, Li, Lui,
  Beq, Bne, Blt,
  Jmp, Jal, Jr,
  Halt,
};
inline constexpr int kFirstOpcode = static_cast<int>(Opcode::Add);
inline constexpr int kLastOpcode = static_cast<int>(Opcode::Halt);

enum class LatencyClass : std::uint8_t { Alu1, Mul3, DivN, Load, Store, Branch, Jump, Mmio };

enum class Format : std::uint8_t {
  R,       // rd, ra, rb
  I,       // rd, ra, imm
  Shift,   // rd, ra, shamt
  Store,   // rb -> imm(ra)
  Li,      // rd, imm
  Lui,     // rd, imm (unsigned)
  Branch,  // ra, rb, target
  Jump,    // target
  Jal,     // target, link in r15
  Jr,      // ra
  None,
};

struct OpcodeInfo {
  Opcode op;
  std::string_view mnemonic;
  Format format;
  LatencyClass latency;
};

const OpcodeInfo& info(Opcode op);
std::string_view mnemonic(Opcode op);
LatencyClass latency_class(Opcode op);
bool is_branch(Opcode op);
bool is_control(Opcode op);

inline constexpr int kLinkReg = 15;

struct Instruction {
  Opcode op = Opcode::Add;
  std::uint8_t rd = 0;
  std::uint8_t ra = 0;
  std::uint8_t rb = 0;
  std::int32_t imm = 0;  // branch/jump: absolute byte address of target

  LatencyClass latency() const { return latency_class(op); }
  bool operator==(const Instruction&) const = default;
};

Instruction make_nop();
bool is_nop(const Instruction& i);

// Throws std::invalid_argument when an operand does not fit its encoding field.
std::uint32_t encode(const Instruction& instr);
// Throws DecodeError for illegal opcode fields or non-zero reserved bits.
Instruction decode(std::uint32_t word);
// True when encode() accepts the instruction (fields in range, unused fields zero).
bool is_canonical(const Instruction& instr);

struct Program {
  std::uint32_t text_base = kTextBase;
  std::vector<Instruction> text;
  std::uint32_t data_base = kDataBase;
  std::vector<std::uint8_t> data;
  std::map<std::string, std::uint32_t> labels;
  std::uint32_t entry = kTextBase;

  std::uint32_t text_end() const { return text_base + static_cast<std::uint32_t>(text.size() * 4); }
  bool in_text(std::uint32_t addr) const {
    return addr >= text_base && addr < text_end() && (addr & 3u) == 0;
  }
  const Instruction& at(std::uint32_t addr) const { return text[(addr - text_base) / 4]; }
  Instruction& at(std::uint32_t addr) { return text[(addr - text_base) / 4]; }
  std::uint32_t label(const std::string& name) const;

  // Validates word alignment, Harvard disjointness and branch targets.
  void validate() const;
};

// Binary image: "WRSC", version byte, text length (words), data length (bytes),
// entry address, then text words and data words, all little-endian.
inline constexpr std::uint8_t kBinaryVersion = 1;
std::vector<std::uint8_t> to_binary(const Program& program);
Program from_binary(std::span<const std::uint8_t> bytes);

std::string to_string(const Instruction& instr);

}  // namespace warp
