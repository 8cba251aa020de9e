// support.hpp - shared helpers and independent oracles for the test suites.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "warp/corpus.hpp"
#include "warp/isa.hpp"

namespace testing {

inline std::string corpus_dir() { return WARP_CORPUS_DIR; }

inline const std::vector<warp::Benchmark>& corpus() {
  static const std::vector<warp::Benchmark> c = warp::load_corpus(corpus_dir());
  return c;
}

inline const warp::Benchmark& bench(const std::string& name) {
  for (const auto& b : corpus())
    if (b.name == name) return b;
  throw std::runtime_error("no benchmark " + name);
}

struct RefResult {
  std::uint32_t regs[16] = {};
  std::vector<std::uint8_t> mem;
  std::uint64_t steps = 0;
  bool halted = false;
};

// Architectural interpreter with no timing model, written against the
// instruction semantics only. Memory faults throw std::out_of_range.
inline RefResult reference_run(const warp::Program& p, std::uint64_t max_steps = 50'000'000) {
  using warp::Opcode;
  RefResult s;
  s.mem = p.data;
  std::uint32_t pc = p.entry;
  auto word_at = [&](std::uint32_t addr) -> std::size_t {
    if (addr < p.data_base || addr % 4 || addr - p.data_base + 4ull > s.mem.size())
      throw std::out_of_range("data access");
    return addr - p.data_base;
  };
  while (s.steps < max_steps) {
    if (pc < p.text_base || (pc - p.text_base) / 4 >= p.text.size()) throw std::out_of_range("pc");
    const warp::Instruction& in = p.text[(pc - p.text_base) / 4];
    ++s.steps;
    const std::uint32_t a = s.regs[in.ra], b = s.regs[in.rb];
    const auto imm = static_cast<std::uint32_t>(in.imm);
    std::uint32_t next = pc + 4;
    std::int64_t result = -1;
    switch (in.op) {
      case Opcode::Add: result = a + b; break;
      case Opcode::Addi: result = a + imm; break;
      case Opcode::Sub: result = a - b; break;
      case Opcode::And: result = a & b; break;
      case Opcode::Or: result = a | b; break;
      case Opcode::Xor: result = a ^ b; break;
      case Opcode::Sll: result = static_cast<std::uint32_t>(static_cast<std::uint64_t>(a) << imm); break;
      case Opcode::Srl: result = a >> imm; break;
      case Opcode::Sra: result = static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> imm); break;
      case Opcode::Mul: result = static_cast<std::uint32_t>(static_cast<std::uint64_t>(a) * b); break;
      case Opcode::Div: result = b ? a / b : 0xffffffffu; break;
      case Opcode::Li: result = imm; break;
      case Opcode::Lui: result = static_cast<std::uint32_t>(imm << 14); break;
      case Opcode::Lw: {
        const std::size_t o = word_at(a + imm);
        result = s.mem[o] | (s.mem[o + 1] << 8) | (s.mem[o + 2] << 16) | (static_cast<std::uint32_t>(s.mem[o + 3]) << 24);
        break;
      }
      case Opcode::Sw: {
        const std::size_t o = word_at(a + imm);
        for (int k = 0; k < 4; ++k) s.mem[o + k] = static_cast<std::uint8_t>(b >> (8 * k));
        break;
      }
      case Opcode::Beq: if (a == b) next = imm; break;
      case Opcode::Bne: if (a != b) next = imm; break;
      case Opcode::Blt: if (static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b)) next = imm; break;
      case Opcode::Jmp: next = imm; break;
      case Opcode::Jal: s.regs[warp::kLinkReg] = pc + 4; next = imm; break;
      case Opcode::Jr: next = a; break;
      case Opcode::Halt: s.halted = true; return s;
    }
    if (result >= 0 && in.rd != 0) s.regs[in.rd] = static_cast<std::uint32_t>(result);
    pc = next;
  }
  return s;
}

inline std::uint32_t word(const std::vector<std::uint8_t>& mem, std::size_t off) {
  return mem[off] | (mem[off + 1] << 8) | (mem[off + 2] << 16) | (static_cast<std::uint32_t>(mem[off + 3]) << 24);
}

}  // namespace testing
