#include "warp/cpu.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "warp/error.hpp"

namespace warp {

std::uint32_t LatencyTable::max_latency() const {
  return std::max({alu1, mul3, div, load, store, branch_taken, branch_not_taken, branch_long, jump, mmio});
}

void LatencyTable::validate() const {
  for (auto v : {alu1, mul3, div, load, store, branch_taken, branch_not_taken, branch_long, jump, mmio})
    if (v < 1) throw std::invalid_argument("latency entries must be >= 1");
}

CpuState CpuState::initial(const Program& program) {
  CpuState s;
  s.pc = program.entry;
  s.data_mem = program.data;
  s.data_base = program.data_base;
  return s;
}

std::uint32_t CpuState::load_word(std::uint32_t addr) const {
  std::uint32_t v;
  std::memcpy(&v, data_mem.data() + (addr - data_base), 4);
  return v;
}

void CpuState::store_word(std::uint32_t addr, std::uint32_t value) {
  std::memcpy(data_mem.data() + (addr - data_base), &value, 4);
}

namespace {

bool in_mmio(std::uint32_t addr, const StepContext& ctx) {
  return ctx.device && addr >= ctx.mmio_base && addr - ctx.mmio_base < kMmioWindowBytes;
}

}  // namespace

TraceEvent step(CpuState& s, const Program& program, const LatencyTable& lat, const StepContext& ctx) {
  if (s.halted) throw SimFault(s.pc, "step on halted core");
  if (!program.in_text(s.pc)) throw SimFault(s.pc, "pc outside text");
  const Instruction& in = program.at(s.pc);
  auto& r = s.regs;
  const std::uint32_t a = r[in.ra];
  const std::uint32_t b = r[in.rb];
  const auto imm = static_cast<std::uint32_t>(in.imm);

  TraceEvent ev;
  ev.pc = s.pc;
  ev.op = in.op;
  std::uint32_t next = s.pc + 4;
  std::uint32_t cycles = lat.alu1;
  std::uint32_t result = 0;
  bool writes = true;

  auto mem_addr = [&](std::uint32_t addr, bool& mmio) {
    if (addr & 3u) throw SimFault(s.pc, "unaligned access to 0x" + SimFault::hex(addr));
    mmio = in_mmio(addr, ctx);
    if (!mmio && !s.in_data(addr)) throw SimFault(s.pc, "data access out of range at 0x" + SimFault::hex(addr));
  };
  auto branch = [&](bool take) {
    writes = false;
    ev.taken = take;
    if (take) {
      next = imm;
      const bool slow = (lat.long_branch_mask >> static_cast<unsigned>(in.op)) & 1u;
      cycles = slow ? lat.branch_long : lat.branch_taken;
    } else {
      cycles = lat.branch_not_taken;
    }
  };

  switch (in.op) {
    case Opcode::Add: result = a + b; break;
    case Opcode::Addi: result = a + imm; break;
    case Opcode::Sub: result = a - b; break;
    case Opcode::And: result = a & b; break;
    case Opcode::Or: result = a | b; break;
    case Opcode::Xor: result = a ^ b; break;
    case Opcode::Sll: result = a << imm; break;
    case Opcode::Srl: result = a >> imm; break;
    case Opcode::Sra: result = static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> imm); break;
    case Opcode::Mul: result = a * b; cycles = lat.mul3; break;
    case Opcode::Div: result = b == 0 ? 0xffffffffu : a / b; cycles = lat.div; break;
    case Opcode::Li: result = imm; break;
    case Opcode::Lui: result = imm << kLuiShift; break;
    case Opcode::Lw: {
      const std::uint32_t addr = a + imm;
      bool mmio = false;
      mem_addr(addr, mmio);
      if (mmio) {
        result = ctx.device->read(addr - ctx.mmio_base, s);
        cycles = lat.mmio;
      } else {
        result = s.load_word(addr);
        cycles = lat.load;
      }
      break;
    }
    case Opcode::Sw: {
      writes = false;
      const std::uint32_t addr = a + imm;
      bool mmio = false;
      mem_addr(addr, mmio);
      if (mmio) {
        ctx.device->write(addr - ctx.mmio_base, b, s);
        cycles = lat.mmio;
      } else {
        s.store_word(addr, b);
        cycles = lat.store;
      }
      break;
    }
    case Opcode::Beq: branch(a == b); break;
    case Opcode::Bne: branch(a != b); break;
    case Opcode::Blt: branch(static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b)); break;
    case Opcode::Jmp: writes = false; next = imm; cycles = lat.jump; break;
    case Opcode::Jal: result = s.pc + 4; next = imm; cycles = lat.jump; break;
    case Opcode::Jr: writes = false; next = a; cycles = lat.jump; break;
    case Opcode::Halt: writes = false; s.halted = true; next = s.pc; break;
    default: throw SimFault(s.pc, "illegal instruction");
  }
  if (writes && in.rd != 0) r[in.rd] = result;
  r[0] = 0;
  s.pc = next;
  s.cycle_count += cycles;
  ev.next_pc = next;
  ev.cycles = cycles;
  return ev;
}

RunResult run_from(CpuState state, const Program& program, const LatencyTable& lat, const RunOptions& opt) {
  if (opt.cycle_limit == 0) throw std::invalid_argument("cycle limit must be positive");
  lat.validate();
  RunResult res;
  res.pc_counts.assign(program.text.size(), 0);
  const StepContext ctx{opt.device, opt.mmio_base};
  const std::uint64_t start_cycles = state.cycle_count;
  while (!state.halted) {
    if (state.cycle_count - start_cycles >= opt.cycle_limit) {
      res.limit_exceeded = true;
      break;
    }
    const std::uint32_t pc = state.pc;
    const TraceEvent ev = step(state, program, lat, ctx);
    ++res.pc_counts[(pc - program.text_base) / 4];
    ++res.instructions;
    res.total_cycles += ev.cycles;
    if (opt.observer) opt.observer(ev);
    if (opt.record_trace) res.trace.push_back(ev);
  }
  res.final_state = std::move(state);
  return res;
}

RunResult run(const Program& program, const LatencyTable& lat, const RunOptions& opt) {
  return run_from(CpuState::initial(program), program, lat, opt);
}

std::string format_trace(std::span<const TraceEvent> trace) {
  std::ostringstream os;
  std::uint64_t cycle = 0;
  for (const auto& ev : trace) {
    os << cycle << " 0x" << SimFault::hex(ev.pc) << ' ' << mnemonic(ev.op) << ' ' << ev.cycles;
    if (ev.taken) os << ' ' << (*ev.taken ? 'T' : 'N');
    os << '\n';
    cycle += ev.cycles;
  }
  return os.str();
}

std::string format_pc_counts(const Program& program, std::span<const std::uint64_t> counts) {
  std::ostringstream os;
  os << "pc,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i]) os << "0x" << SimFault::hex(program.text_base + static_cast<std::uint32_t>(i * 4)) << ',' << counts[i] << '\n';
  return os.str();
}

}  // namespace warp
