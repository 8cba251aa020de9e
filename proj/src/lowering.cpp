#include "warp/lowering.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace warp {
namespace {

constexpr std::uint8_t kSaveLink = 10;
constexpr std::uint8_t kCount = 11;
constexpr std::uint8_t kAcc = 12;
constexpr std::uint8_t kArgA = 13;
constexpr std::uint8_t kArgB = 14;

Instruction rrr(Opcode op, int rd, int ra, int rb) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(ra), static_cast<std::uint8_t>(rb), 0};
}
Instruction rri(Opcode op, int rd, int ra, std::int32_t imm) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(ra), 0, imm};
}
Instruction mov(int rd, int ra) { return rrr(Opcode::Add, rd, ra, 0); }

enum class Routine { Srl, Sra, Mul, Div };

// Small assembler for the routines: local labels patched once the routine is laid out.
class RoutineBuilder {
 public:
  explicit RoutineBuilder(std::uint32_t base) : base_(base) {}

  void emit(const Instruction& i) { code_.push_back(i); }
  void branch(Opcode op, int ra, int rb, const std::string& target) {
    fixups_.emplace_back(code_.size(), target);
    code_.push_back({op, 0, static_cast<std::uint8_t>(ra), static_cast<std::uint8_t>(rb), 0});
  }
  void jump(const std::string& target) {
    fixups_.emplace_back(code_.size(), target);
    code_.push_back({Opcode::Jmp, 0, 0, 0, 0});
  }
  void label(const std::string& name) { labels_[name] = address(code_.size()); }
  std::uint32_t here() const { return address(code_.size()); }

  std::vector<Instruction> finish() {
    for (auto& [index, name] : fixups_) code_[index].imm = static_cast<std::int32_t>(labels_.at(name));
    return std::move(code_);
  }

 private:
  std::uint32_t address(std::size_t index) const { return base_ + static_cast<std::uint32_t>(index * 4); }

  std::uint32_t base_;
  std::vector<Instruction> code_;
  std::map<std::string, std::uint32_t> labels_;
  std::vector<std::pair<std::size_t, std::string>> fixups_;
};

// r13 = r13 >> r14 built from doublings: the top (32 - n) bits are shifted into
// r12 one at a time by testing the sign bit of r13.
void emit_right_shift(RoutineBuilder& b, bool arithmetic) {
  b.emit(rri(Opcode::Addi, kCount, 0, 32));
  b.emit(rrr(Opcode::Sub, kCount, kCount, kArgB));
  b.emit(mov(kAcc, 0));
  if (arithmetic) {
    b.branch(Opcode::Blt, 0, kArgA, "loop");  // 0 < x: non-negative fill
    b.branch(Opcode::Beq, kArgA, 0, "loop");
    b.emit(rri(Opcode::Addi, kAcc, 0, -1));
  }
  b.label("loop");
  b.emit(rrr(Opcode::Add, kAcc, kAcc, kAcc));
  b.branch(Opcode::Blt, kArgA, 0, "one");
  b.jump("next");
  b.label("one");
  b.emit(rri(Opcode::Addi, kAcc, kAcc, 1));
  b.label("next");
  b.emit(rrr(Opcode::Add, kArgA, kArgA, kArgA));
  b.emit(rri(Opcode::Addi, kCount, kCount, -1));
  b.branch(Opcode::Bne, kCount, 0, "loop");
  b.emit(mov(kArgA, kAcc));
  b.emit(rri(Opcode::Jr, 0, kLinkReg, 0));
}

// r13 = r13 * r14 (low 32 bits), most significant multiplier bit first.
void emit_multiply(RoutineBuilder& b) {
  b.emit(mov(kAcc, 0));
  b.emit(rri(Opcode::Addi, kCount, 0, 32));
  b.label("loop");
  b.emit(rrr(Opcode::Add, kAcc, kAcc, kAcc));
  b.branch(Opcode::Blt, kArgB, 0, "add");
  b.jump("next");
  b.label("add");
  b.emit(rrr(Opcode::Add, kAcc, kAcc, kArgA));
  b.label("next");
  b.emit(rrr(Opcode::Add, kArgB, kArgB, kArgB));
  b.emit(rri(Opcode::Addi, kCount, kCount, -1));
  b.branch(Opcode::Bne, kCount, 0, "loop");
  b.emit(mov(kArgA, kAcc));
  b.emit(rri(Opcode::Jr, 0, kLinkReg, 0));
}

// r13 = r13 / r14 unsigned, restoring division; division by zero yields all ones.
void emit_divide(RoutineBuilder& b) {
  b.emit(mov(kAcc, 0));
  b.emit(rri(Opcode::Addi, kCount, 0, 32));
  b.label("loop");
  // remainder with its top bit set overflows on doubling and always exceeds the divisor
  b.branch(Opcode::Blt, kAcc, 0, "big");
  b.emit(rrr(Opcode::Add, kAcc, kAcc, kAcc));
  b.branch(Opcode::Blt, kArgA, 0, "bit1");
  b.jump("shifted");
  b.label("bit1");
  b.emit(rri(Opcode::Addi, kAcc, kAcc, 1));
  b.label("shifted");
  b.emit(rrr(Opcode::Add, kArgA, kArgA, kArgA));
  // unsigned rem < divisor -> skip subtraction
  b.branch(Opcode::Blt, kAcc, 0, "remneg");
  b.branch(Opcode::Blt, kArgB, 0, "skip");
  b.branch(Opcode::Blt, kAcc, kArgB, "skip");
  b.jump("subtract");
  b.label("remneg");
  b.branch(Opcode::Blt, kArgB, 0, "bothneg");
  b.jump("subtract");
  b.label("bothneg");
  b.branch(Opcode::Blt, kAcc, kArgB, "skip");
  b.jump("subtract");
  b.label("big");
  b.emit(rrr(Opcode::Add, kAcc, kAcc, kAcc));
  b.branch(Opcode::Blt, kArgA, 0, "bigbit");
  b.jump("bigshift");
  b.label("bigbit");
  b.emit(rri(Opcode::Addi, kAcc, kAcc, 1));
  b.label("bigshift");
  b.emit(rrr(Opcode::Add, kArgA, kArgA, kArgA));
  b.label("subtract");
  b.emit(rrr(Opcode::Sub, kAcc, kAcc, kArgB));
  b.emit(rri(Opcode::Addi, kArgA, kArgA, 1));
  b.label("skip");
  b.emit(rri(Opcode::Addi, kCount, kCount, -1));
  b.branch(Opcode::Bne, kCount, 0, "loop");
  b.emit(rri(Opcode::Jr, 0, kLinkReg, 0));
}

bool needs_routine(const Instruction& in, const CpuFeatures& f, Routine& which) {
  switch (in.op) {
    case Opcode::Srl: which = Routine::Srl; return !f.barrel_shifter;
    case Opcode::Sra: which = Routine::Sra; return !f.barrel_shifter;
    case Opcode::Mul: which = Routine::Mul; return !f.multiplier;
    case Opcode::Div: which = Routine::Div; return !f.divider;
    default: return false;
  }
}

bool uses_reserved(const Instruction& in) {
  return in.rd >= kFirstReservedReg || in.ra >= kFirstReservedReg || in.rb >= kFirstReservedReg;
}

// Instructions emitted per call site: copy args, save link, jal, restore link, copy result.
constexpr int kCallSiteLength = 6;

}  // namespace

LoweringResult lower_with_map(std::span<const Instruction> body, const CpuFeatures& features,
                              std::uint32_t base) {
  LoweringResult out;
  std::map<Routine, bool> wanted;
  std::vector<std::uint32_t> sizes(body.size(), 1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const auto& in = body[i];
    Routine r{};
    if (needs_routine(in, features, r)) {
      wanted[r] = true;
      sizes[i] = kCallSiteLength;
    } else if (in.op == Opcode::Sll && !features.barrel_shifter) {
      sizes[i] = 1 + static_cast<std::uint32_t>(in.imm);
    }
  }
  if (!wanted.empty()) {
    for (std::size_t i = 0; i < body.size(); ++i)
      if (uses_reserved(body[i]))
        throw std::invalid_argument("instruction " + std::to_string(i) + " (" + to_string(body[i]) +
                                    ") uses r10-r15, which the software routines reserve");
  }

  out.new_address.resize(body.size());
  std::uint32_t addr = base;
  for (std::size_t i = 0; i < body.size(); ++i) {
    out.new_address[i] = addr;
    addr += sizes[i] * 4;
  }
  const std::uint32_t old_end = base + static_cast<std::uint32_t>(body.size() * 4);

  // routines laid out after the relocated body
  std::map<Routine, std::uint32_t> entry;
  std::vector<Instruction> routines;
  for (auto& [r, _] : wanted) {
    RoutineBuilder b(addr + static_cast<std::uint32_t>(routines.size() * 4));
    entry[r] = b.here();
    switch (r) {
      case Routine::Srl: emit_right_shift(b, false); break;
      case Routine::Sra: emit_right_shift(b, true); break;
      case Routine::Mul: emit_multiply(b); break;
      case Routine::Div: emit_divide(b); break;
    }
    auto code = b.finish();
    routines.insert(routines.end(), code.begin(), code.end());
  }

  auto relocate = [&](std::int32_t target) -> std::int32_t {
    const auto t = static_cast<std::uint32_t>(target);
    if (t < base || t >= old_end || (t - base) % 4) return target;
    return static_cast<std::int32_t>(out.new_address[(t - base) / 4]);
  };

  for (std::size_t i = 0; i < body.size(); ++i) {
    Instruction in = body[i];
    const Format fmt = info(in.op).format;
    if (fmt == Format::Branch || fmt == Format::Jump || fmt == Format::Jal) in.imm = relocate(in.imm);
    Routine r{};
    if (needs_routine(in, features, r)) {
      out.text.push_back(mov(kArgA, in.ra));
      if (in.op == Opcode::Srl || in.op == Opcode::Sra) out.text.push_back(rri(Opcode::Addi, kArgB, 0, in.imm));
      else out.text.push_back(mov(kArgB, in.rb));
      out.text.push_back(mov(kSaveLink, kLinkReg));
      out.text.push_back({Opcode::Jal, kLinkReg, 0, 0, static_cast<std::int32_t>(entry[r])});
      out.text.push_back(mov(kLinkReg, kSaveLink));
      out.text.push_back(mov(in.rd, kArgA));
    } else if (in.op == Opcode::Sll && !features.barrel_shifter) {
      out.text.push_back(mov(in.rd, in.ra));
      for (int k = 0; k < in.imm; ++k) out.text.push_back(rrr(Opcode::Add, in.rd, in.rd, in.rd));
    } else {
      out.text.push_back(in);
    }
  }
  out.text.insert(out.text.end(), routines.begin(), routines.end());
  out.emitted_routines = !wanted.empty();
  return out;
}

std::vector<Instruction> lower_missing_features(std::span<const Instruction> body,
                                                const CpuFeatures& features, std::uint32_t base) {
  return lower_with_map(body, features, base).text;
}

}  // namespace warp
