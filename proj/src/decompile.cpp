#include "warp/decompile.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "warp/synth.hpp"

namespace warp {
namespace {

constexpr std::uint16_t kAllRegs = 0xfffe;

std::uint16_t bit(int r) { return r == 0 ? 0 : static_cast<std::uint16_t>(1u << r); }

std::uint16_t uses(const Instruction& in) {
  switch (info(in.op).format) {
    case Format::R:
    case Format::Store:
    case Format::Branch: return bit(in.ra) | bit(in.rb);
    case Format::I:
    case Format::Shift: return bit(in.ra);
    case Format::Jal:
    case Format::Jr: return kAllRegs;
    default: return 0;
  }
}

std::uint16_t defs(const Instruction& in) {
  switch (info(in.op).format) {
    case Format::R:
    case Format::I:
    case Format::Shift:
    case Format::Li:
    case Format::Lui: return bit(in.rd);
    case Format::Jal: return bit(kLinkReg);
    default: return 0;
  }
}

std::uint32_t target_of(const Instruction& in) { return static_cast<std::uint32_t>(in.imm); }

bool has_target(const Instruction& in) {
  const Format f = info(in.op).format;
  return f == Format::Branch || f == Format::Jump || f == Format::Jal;
}

std::string reg_name(int r) { return "r" + std::to_string(r); }

std::string hex_addr(std::uint32_t a) { return "0x" + SimFault::hex(a); }

}  // namespace

std::uint16_t live_registers(const Program& p, std::uint32_t addr) {
  const std::size_t n = p.text.size();
  std::vector<std::uint16_t> live(n + 1, 0);
  auto index_of = [&](std::uint32_t a) -> std::size_t {
    return p.in_text(a) ? (a - p.text_base) / 4 : n;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = n; i-- > 0;) {
      const Instruction& in = p.text[i];
      std::uint16_t out = 0;
      switch (in.op) {
        case Opcode::Halt:
        case Opcode::Jr:
        case Opcode::Jal: break;
        case Opcode::Jmp: out = live[index_of(target_of(in))]; break;
        case Opcode::Beq:
        case Opcode::Bne:
        case Opcode::Blt: out = live[i + 1] | live[index_of(target_of(in))]; break;
        default: out = live[i + 1]; break;
      }
      const auto v = static_cast<std::uint16_t>(uses(in) | (out & ~defs(in)));
      if (v != live[i]) {
        live[i] = v;
        changed = true;
      }
    }
  }
  return live[index_of(addr)];
}

namespace {

// Registers holding known constants on entry to `start`, when the only way in
// is falling through a straight-line block.
std::array<std::optional<std::uint32_t>, kNumRegs> preheader_constants(const Program& p, std::uint32_t start,
                                                                       std::uint32_t branch_pc) {
  std::array<std::optional<std::uint32_t>, kNumRegs> known{};
  known[0] = 0;
  std::set<std::uint32_t> targets{p.entry};
  for (std::size_t i = 0; i < p.text.size(); ++i) {
    const auto& in = p.text[i];
    if (has_target(in) && p.text_base + i * 4 != branch_pc) targets.insert(target_of(in));
  }
  if (targets.count(start) || start == p.text_base) return known;
  std::uint32_t first = start;
  while (first > p.text_base) {
    const Instruction& prev = p.at(first - 4);
    if (is_control(prev.op)) break;
    first -= 4;
    if (targets.count(first)) break;
  }
  for (std::uint32_t a = first; a < start; a += 4) {
    const Instruction& in = p.at(a);
    const auto ra = known[in.ra], rb = known[in.rb];
    const auto imm = static_cast<std::uint32_t>(in.imm);
    std::optional<std::uint32_t> v;
    switch (in.op) {
      case Opcode::Li: v = imm; break;
      case Opcode::Lui: v = imm << kLuiShift; break;
      case Opcode::Addi: if (ra) v = *ra + imm; break;
      case Opcode::Add: if (ra && rb) v = *ra + *rb; break;
      case Opcode::Sub: if (ra && rb) v = *ra - *rb; break;
      case Opcode::And: if (ra && rb) v = *ra & *rb; break;
      case Opcode::Or: if (ra && rb) v = *ra | *rb; break;
      case Opcode::Xor: if (ra && rb) v = *ra ^ *rb; break;
      case Opcode::Sll: if (ra) v = *ra << imm; break;
      case Opcode::Srl: if (ra) v = *ra >> imm; break;
      case Opcode::Mul: if (ra && rb) v = *ra * *rb; break;
      default: break;
    }
    const std::uint16_t d = defs(in);
    for (int r = 1; r < kNumRegs; ++r)
      if (d & bit(r)) known[r] = v;
  }
  return known;
}

TripCountExpr recognise_trip_count(const LoopRegion& region) {
  TripCountExpr e;
  const Instruction& br = region.body.back();
  std::map<int, int> def_count;
  std::map<int, std::int32_t> step;
  for (std::size_t i = 0; i + 1 < region.body.size(); ++i) {
    const Instruction& in = region.body[i];
    const std::uint16_t d = defs(in);
    for (int r = 1; r < kNumRegs; ++r)
      if (d & bit(r)) {
        ++def_count[r];
        if (in.op == Opcode::Addi && in.ra == r) step[r] = in.imm;
      }
  }
  auto is_iv = [&](int r) { return def_count[r] == 1 && step.count(r) && step[r] != 0; };
  int iv = -1, other = -1;
  bool iv_is_a = true;
  if (is_iv(br.ra) && def_count[br.rb] == 0) {
    iv = br.ra;
    other = br.rb;
  } else if (is_iv(br.rb) && def_count[br.ra] == 0) {
    iv = br.rb;
    other = br.ra;
    iv_is_a = false;
  } else {
    return e;
  }
  e.induction_reg = iv;
  e.step = step[iv];
  e.bound_reg = other;
  e.kind = TripCountExpr::Kind::RegisterBound;
  const auto init = region.entry_constants[iv];
  const auto bound = region.entry_constants[other];
  if (init && bound) {
    LoopHeader h;
    h.step = e.step;
    h.counter = Affine::of_const(*init + static_cast<std::uint32_t>(e.step));
    h.counter.iter = static_cast<std::uint32_t>(e.step);
    h.bound = Affine::of_const(*bound);
    if (br.op == Opcode::Bne) h.compare = LoopHeader::Compare::NotEqual;
    else if (br.op == Opcode::Blt) h.compare = iv_is_a ? LoopHeader::Compare::CounterLess : LoopHeader::Compare::BoundLess;
    else return e;
    if (auto t = trip_count(h, {}); t && *t <= 0xffffffffu) {
      e.kind = TripCountExpr::Kind::Constant;
      e.constant = static_cast<std::uint32_t>(*t);
    }
  }
  return e;
}

}  // namespace

LoopRegion extract_region(const Program& p, const HotRegion& hot) {
  if (!p.in_text(hot.branch_pc) || !p.in_text(hot.target))
    throw std::invalid_argument("hot region " + hex_addr(hot.target) + ".." + hex_addr(hot.branch_pc) +
                                " lies outside the text segment");
  const Instruction& br = p.at(hot.branch_pc);
  if (!is_branch(br.op) || target_of(br) != hot.target || hot.target > hot.branch_pc)
    throw std::invalid_argument("no backward branch at " + hex_addr(hot.branch_pc) + " targeting " +
                                hex_addr(hot.target));
  LoopRegion region;
  region.start = hot.target;
  region.end = hot.branch_pc;
  for (std::uint32_t a = region.start; a <= region.end; a += 4) {
    const Instruction& in = p.at(a);
    region.body.push_back(in);
    if (a == region.end) break;
    if (in.op == Opcode::Jal || in.op == Opcode::Jr)
      throw PartitionError(RejectReason::ContainsCall, std::string(mnemonic(in.op)) + " at " + hex_addr(a));
    if (in.op == Opcode::Halt) throw PartitionError(RejectReason::UnsupportedOp, "halt inside loop at " + hex_addr(a));
    if (has_target(in)) {
      const std::uint32_t t = target_of(in);
      if (t <= a)
        throw PartitionError(RejectReason::NestedBackwardBranch,
                             "inner backward branch at " + hex_addr(a) + " to " + hex_addr(t));
      if (t > region.end)
        throw PartitionError(RejectReason::UnsupportedOp, "loop exit at " + hex_addr(a));
    }
  }
  for (std::size_t i = 0; i < p.text.size(); ++i) {
    const std::uint32_t a = p.text_base + static_cast<std::uint32_t>(i * 4);
    if (a >= region.start && a <= region.end) continue;
    const auto& in = p.text[i];
    if (has_target(in) && target_of(in) > region.start && target_of(in) <= region.end)
      throw PartitionError(RejectReason::UnsupportedOp, "side entry into loop from " + hex_addr(a));
  }
  if (p.entry > region.start && p.entry <= region.end)
    throw PartitionError(RejectReason::UnsupportedOp, "program entry inside loop");
  region.entry_constants = preheader_constants(p, region.start, region.end);
  region.live_after = live_registers(p, region.end + 4);
  region.trip_count_expr = recognise_trip_count(region);
  return region;
}

namespace {

struct Sym {
  enum class Kind { Aff, Node, AccIn, AccOut, Undef };
  Kind kind = Kind::Undef;
  Affine aff;
  int node = -1;

  static Sym of(const Affine& a) { return {Kind::Aff, a, -1}; }
  static Sym of_node(int n) { return {Kind::Node, {}, n}; }
  static Sym acc_in() { return {Kind::AccIn, {}, -1}; }
  bool is_aff() const { return kind == Kind::Aff; }
  bool is_const() const { return kind == Kind::Aff && aff.is_const(); }
  bool operator==(const Sym&) const = default;
};

enum class RegClass { Invariant, Induction, Accumulator, Temporary };

struct RefState {
  bool loaded = false;
  bool stored = false;
  int load_node = -1;
  Sym pending;
};

std::uint32_t fold(AluOp op, std::uint32_t a, std::uint32_t b, std::uint32_t shamt) {
  return eval_alu(op, a, b, 0, shamt);
}

// Symbolic execution of one iteration. The first pass (classify == true) runs with
// every register holding its own start-of-iteration symbol and gathers what the
// register classification needs; the second pass builds the final graph.
class Walker {
 public:
  Walker(const LoopRegion& region, bool classify) : region_(region), classify_(classify) {}

  std::array<Sym, kNumRegs> regs;
  std::array<int, kNumRegs> consumed{};
  Cdfg g;
  std::vector<RefState> refs;
  std::optional<int> acc_reg;
  Sym branch_a, branch_b;

  void run() {
    const auto& body = region_.body;
    std::size_t i = 0;
    while (i + 1 < body.size()) i = step(i);
    branch_a = read(body.back().ra);
    branch_b = read(body.back().rb);
    if (classify_) {
      consume(branch_a);
      consume(branch_b);
    }
  }

  std::uint32_t addr(std::size_t i) const { return region_.start + static_cast<std::uint32_t>(i * 4); }
  std::size_t index(std::uint32_t a) const { return (a - region_.start) / 4; }

  Sym read(int r) const {
    if (regs[r].kind == Sym::Kind::Undef)
      throw PartitionError(RejectReason::UnsupportedOp, "value of " + reg_name(r) + " carried across iterations");
    return regs[r];
  }
  void write(int r, const Sym& v) {
    if (r != 0) regs[r] = v;
  }

  void consume(const Sym& s) {
    if (s.kind != Sym::Kind::Aff) return;
    for (int r = 1; r < kNumRegs; ++r)
      if (s.aff.reg[r]) ++consumed[r];
  }

  int add_node(CdfgNode n) {
    g.nodes.push_back(std::move(n));
    return static_cast<int>(g.nodes.size() - 1);
  }

  int const_node(std::uint32_t v) {
    auto it = consts_.find(v);
    if (it != consts_.end()) return it->second;
    CdfgNode n;
    n.kind = NodeKind::Const;
    n.value = v;
    return consts_[v] = add_node(n);
  }

  int to_node(const Sym& s) {
    switch (s.kind) {
      case Sym::Kind::Node: return s.node;
      case Sym::Kind::Aff: {
        if (s.aff.is_const()) return const_node(s.aff.constant);
        if (classify_) consume(s);
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
          if (g.nodes[i].kind == NodeKind::Input && g.nodes[i].input == s.aff) return static_cast<int>(i);
        CdfgNode n;
        n.kind = NodeKind::Input;
        n.input = s.aff;
        return add_node(n);
      }
      case Sym::Kind::AccIn:
      case Sym::Kind::AccOut:
        throw PartitionError(RejectReason::UnsupportedOp, "accumulator used outside its update");
      case Sym::Kind::Undef: break;
    }
    throw PartitionError(RejectReason::UnsupportedOp, "undefined value in loop body");
  }

  int alu_node(AluOp op, int a, int b, int c = -1, std::uint32_t shamt = 0) {
    CdfgNode n;
    n.kind = NodeKind::Alu;
    n.op = op;
    n.args = {a, b, c};
    n.value = shamt;
    return add_node(n);
  }

  Sym binop(AluOp op, const Sym& x, const Sym& y) {
    if (x.is_aff() && y.is_aff()) {
      if (x.is_const() && y.is_const()) return Sym::of(Affine::of_const(fold(op, x.aff.constant, y.aff.constant, 0)));
      if (op == AluOp::Add) return Sym::of(x.aff + y.aff);
      if (op == AluOp::Sub) return Sym::of(x.aff - y.aff);
      if (op == AluOp::Mul && y.is_const()) return Sym::of(x.aff.scaled(y.aff.constant));
      if (op == AluOp::Mul && x.is_const()) return Sym::of(y.aff.scaled(x.aff.constant));
    }
    if (op == AluOp::Add && (x.kind == Sym::Kind::AccIn || y.kind == Sym::Kind::AccIn))
      return accumulate(x.kind == Sym::Kind::AccIn ? y : x);
    const int a = to_node(x);
    const int b = to_node(y);
    return Sym::of_node(alu_node(op, a, b));
  }

  Sym shift(AluOp op, const Sym& x, std::uint32_t shamt) {
    if (shamt == 0) return x;
    if (x.is_const()) return Sym::of(Affine::of_const(fold(op, x.aff.constant, 0, shamt)));
    if (x.is_aff() && op == AluOp::Sll) return Sym::of(x.aff.scaled(1u << shamt));
    return Sym::of_node(alu_node(op, to_node(x), -1, -1, shamt));
  }

  Sym accumulate(const Sym& addend) {
    if (g.accumulator && g.accumulator->mac_node >= 0)
      throw PartitionError(RejectReason::UnsupportedOp, "accumulator updated twice per iteration");
    int a = -1, b = -1;
    if (addend.kind == Sym::Kind::Node && g.nodes[static_cast<std::size_t>(addend.node)].kind == NodeKind::Alu &&
        g.nodes[static_cast<std::size_t>(addend.node)].op == AluOp::Mul) {
      a = g.nodes[static_cast<std::size_t>(addend.node)].args[0];
      b = g.nodes[static_cast<std::size_t>(addend.node)].args[1];
    } else {
      a = to_node(addend);
      b = const_node(1);
    }
    CdfgNode n;
    n.kind = NodeKind::Mac;
    n.args = {a, b, -1};
    g.accumulator->mac_node = add_node(n);
    return {Sym::Kind::AccOut, {}, -1};
  }

  Affine address(int base, std::int32_t imm, std::uint32_t pc) {
    const Sym b = read(base);
    if (!b.is_aff())
      throw PartitionError(RejectReason::IrregularAccess, "address at " + hex_addr(pc) + " depends on loaded data");
    const Affine a = b.aff + Affine::of_const(static_cast<std::uint32_t>(imm));
    if (classify_) consume(Sym::of(a));
    return a;
  }

  int ref_for(const Affine& a) {
    for (std::size_t i = 0; i < g.array_refs.size(); ++i)
      if (g.array_refs[i].address == a) return static_cast<int>(i);
    g.array_refs.push_back({a, Direction::Read});
    refs.emplace_back();
    return static_cast<int>(g.array_refs.size() - 1);
  }

  Sym load(int ref) {
    RefState& st = refs[static_cast<std::size_t>(ref)];
    if (st.stored) return st.pending;
    st.loaded = true;
    if (st.load_node < 0) {
      CdfgNode n;
      n.kind = NodeKind::Load;
      n.ref = ref;
      st.load_node = add_node(n);
    }
    return Sym::of_node(st.load_node);
  }

  void store(int ref, const Sym& v) {
    RefState& st = refs[static_cast<std::size_t>(ref)];
    st.stored = true;
    st.pending = v;
  }

  void exec(const Instruction& in, std::uint32_t pc) {
    const auto imm = static_cast<std::uint32_t>(in.imm);
    auto c = [](std::uint32_t v) { return Sym::of(Affine::of_const(v)); };
    switch (in.op) {
      case Opcode::Add: write(in.rd, binop(AluOp::Add, read(in.ra), read(in.rb))); break;
      case Opcode::Addi: write(in.rd, binop(AluOp::Add, read(in.ra), c(imm))); break;
      case Opcode::Sub: write(in.rd, binop(AluOp::Sub, read(in.ra), read(in.rb))); break;
      case Opcode::And: write(in.rd, binop(AluOp::And, read(in.ra), read(in.rb))); break;
      case Opcode::Or: write(in.rd, binop(AluOp::Or, read(in.ra), read(in.rb))); break;
      case Opcode::Xor: write(in.rd, binop(AluOp::Xor, read(in.ra), read(in.rb))); break;
      case Opcode::Mul: write(in.rd, binop(AluOp::Mul, read(in.ra), read(in.rb))); break;
      case Opcode::Div: write(in.rd, binop(AluOp::Div, read(in.ra), read(in.rb))); break;
      case Opcode::Sll: write(in.rd, shift(AluOp::Sll, read(in.ra), imm)); break;
      case Opcode::Srl: write(in.rd, shift(AluOp::Srl, read(in.ra), imm)); break;
      case Opcode::Sra: write(in.rd, shift(AluOp::Sra, read(in.ra), imm)); break;
      case Opcode::Li: write(in.rd, c(imm)); break;
      case Opcode::Lui: write(in.rd, c(imm << kLuiShift)); break;
      case Opcode::Lw: write(in.rd, load(ref_for(address(in.ra, in.imm, pc)))); break;
      case Opcode::Sw: {
        const int ref = ref_for(address(in.ra, in.imm, pc));
        store(ref, read(in.rb));
        break;
      }
      default:
        throw PartitionError(RejectReason::UnsupportedOp,
                             std::string(mnemonic(in.op)) + " at " + hex_addr(pc) + " in loop body");
    }
  }

  // Runs [from, to) as a branch-free ALU block.
  void exec_block(std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      const Instruction& in = region_.body[i];
      if (is_control(in.op) || in.op == Opcode::Lw || in.op == Opcode::Sw)
        throw PartitionError(RejectReason::UnsupportedOp,
                             std::string(mnemonic(in.op)) + " at " + hex_addr(addr(i)) + " inside a conditional");
      exec(in, addr(i));
    }
  }

  std::size_t step(std::size_t i) {
    const Instruction& in = region_.body[i];
    if (!is_branch(in.op) && in.op != Opcode::Jmp) {
      exec(in, addr(i));
      return i + 1;
    }
    if (in.op == Opcode::Jmp)
      throw PartitionError(RejectReason::UnsupportedOp, "unstructured jump at " + hex_addr(addr(i)));
    return if_convert(i);
  }

  std::size_t if_convert(std::size_t i) {
    const Instruction& br = region_.body[i];
    const std::size_t target = index(target_of(br));
    std::size_t then_end = target, join = target, else_begin = target;
    const Instruction& before = region_.body[target - 1];
    if (target - 1 > i && before.op == Opcode::Jmp && target_of(before) > target_of(br) &&
        index(target_of(before)) < region_.body.size()) {
      then_end = target - 1;
      join = index(target_of(before));
    }
    const Sym a = read(br.ra), b = read(br.rb);
    const auto saved = regs;
    exec_block(i + 1, then_end);
    const auto fallthrough = regs;
    regs = saved;
    exec_block(else_begin, join);
    const auto taken = regs;

    if (a.is_const() && b.is_const()) {
      const std::uint32_t x = a.aff.constant, y = b.aff.constant;
      bool t = false;
      if (br.op == Opcode::Beq) t = x == y;
      else if (br.op == Opcode::Bne) t = x != y;
      else t = static_cast<std::int32_t>(x) < static_cast<std::int32_t>(y);
      regs = t ? taken : fallthrough;
      return join;
    }
    const int an = to_node(a), bn = to_node(b);
    const int cond = alu_node(br.op == Opcode::Blt ? AluOp::Lt : AluOp::Eq, an, bn);
    const bool invert = br.op == Opcode::Bne;
    for (int r = 1; r < kNumRegs; ++r) {
      if (taken[r] == fallthrough[r]) {
        regs[r] = taken[r];
        continue;
      }
      const int tn = to_node(taken[r]), fn = to_node(fallthrough[r]);
      regs[r] = Sym::of_node(alu_node(AluOp::Select, cond, invert ? fn : tn, invert ? tn : fn));
    }
    return join;
  }

 private:
  const LoopRegion& region_;
  bool classify_;
  std::map<std::uint32_t, int> consts_;
};

}  // namespace

namespace {

Affine entry_value(const LoopRegion& region, int r) {
  if (r == 0) return Affine::of_const(0);
  if (region.entry_constants[r]) return Affine::of_const(*region.entry_constants[r]);
  return Affine::of_reg(r);
}

LoopHeader make_header(const Sym& x, const Sym& y, const Instruction& br) {
  if (!x.is_aff() || !y.is_aff())
    throw PartitionError(RejectReason::UnboundedTrip, "loop test depends on loaded data");
  const bool x_counts = x.aff.iter != 0, y_counts = y.aff.iter != 0;
  if (x_counts == y_counts)
    throw PartitionError(RejectReason::UnboundedTrip, "loop test has no single induction variable");
  LoopHeader h;
  h.counter = x_counts ? x.aff : y.aff;
  h.bound = x_counts ? y.aff : x.aff;
  h.step = static_cast<std::int32_t>(h.counter.iter);
  h.control_reg = x_counts ? br.ra : br.rb;
  switch (br.op) {
    case Opcode::Blt:
      h.compare = x_counts ? LoopHeader::Compare::CounterLess : LoopHeader::Compare::BoundLess;
      if ((h.compare == LoopHeader::Compare::CounterLess) != (h.step > 0))
        throw PartitionError(RejectReason::UnboundedTrip, "induction variable moves away from its bound");
      break;
    case Opcode::Bne: h.compare = LoopHeader::Compare::NotEqual; break;
    default: throw PartitionError(RejectReason::UnboundedTrip, "loop continues while operands are equal");
  }
  if (!h.counter.uses_any_reg() && !h.bound.uses_any_reg()) {
    const auto t = trip_count(h, {});
    if (!t || *t > 0xffffffffu) throw PartitionError(RejectReason::UnboundedTrip, "loop test never fails");
    h.constant_trips = static_cast<std::uint32_t>(*t);
  }
  return h;
}

// Rejects stores that feed loads of later iterations through memory.
void check_dependences(const Cdfg& g) {
  const std::optional<std::uint32_t> trips = g.header.constant_trips;
  for (std::size_t s = 0; s < g.array_refs.size(); ++s) {
    const ArrayRef& st = g.array_refs[s];
    if (!st.writes()) continue;
    if (st.reads() && st.stride() == 0)
      throw PartitionError(RejectReason::UnsupportedOp, "invariant address read and written every iteration");
    for (std::size_t l = 0; l < g.array_refs.size(); ++l) {
      const ArrayRef& ld = g.array_refs[l];
      if (l == s || !ld.reads() || st.address.reg != ld.address.reg) continue;
      const std::int64_t diff = static_cast<std::int32_t>(st.address.constant - ld.address.constant);
      const std::int64_t ss = st.stride(), ls = ld.stride();
      if (ss != ls && !(trips && *trips <= 1))
        throw PartitionError(RejectReason::UnsupportedOp, "accesses with different strides may overlap");
      if (ss != 0 && diff % ss == 0 && diff / ss > 0 && (!trips || diff / ss < *trips))
        throw PartitionError(RejectReason::UnsupportedOp,
                             "store feeds a load " + std::to_string(diff / ss) + " iterations later");
    }
  }
}

void remove_dead_nodes(Cdfg& g) {
  std::vector<bool> live(g.nodes.size(), false);
  for (std::size_t i = g.nodes.size(); i-- > 0;) {
    const auto& n = g.nodes[i];
    if (n.kind == NodeKind::Store || n.kind == NodeKind::Mac) live[i] = true;
    if (!live[i]) continue;
    for (int a = 0; a < n.arity(); ++a) live[static_cast<std::size_t>(n.args[a])] = true;
  }
  std::vector<int> remap(g.nodes.size(), -1);
  std::vector<CdfgNode> kept;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!live[i]) continue;
    CdfgNode n = g.nodes[i];
    for (int a = 0; a < n.arity(); ++a) n.args[a] = remap[static_cast<std::size_t>(n.args[a])];
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(n);
  }
  g.nodes = std::move(kept);
  for (auto& s : g.stores) s = remap[static_cast<std::size_t>(s)];
  if (g.accumulator) g.accumulator->mac_node = remap[static_cast<std::size_t>(g.accumulator->mac_node)];
}

}  // namespace

Cdfg decompile(const LoopRegion& region) {
  if (region.body.empty() || !is_branch(region.body.back().op))
    throw std::invalid_argument("loop region must end in a conditional branch");

  Walker first(region, true);
  for (int r = 0; r < kNumRegs; ++r) first.regs[r] = Sym::of(Affine::of_reg(r));
  first.run();
  for (int q = 1; q < kNumRegs; ++q)
    if (first.regs[q].is_aff())
      for (int r = 1; r < kNumRegs; ++r)
        if (r != q && first.regs[q].aff.reg[r]) ++first.consumed[r];

  std::array<RegClass, kNumRegs> cls{};
  std::array<std::int32_t, kNumRegs> step{};
  int acc = -1;
  for (int r = 1; r < kNumRegs; ++r) {
    const Sym& f = first.regs[r];
    const Affine self = Affine::of_reg(r);
    if (f.is_aff() && f.aff == self) continue;
    if (f.is_aff() && (f.aff - self).is_const()) {
      cls[r] = RegClass::Induction;
      step[r] = static_cast<std::int32_t>((f.aff - self).constant);
      continue;
    }
    if (f.kind == Sym::Kind::Node && first.consumed[r] == 1) {
      const auto& n = first.g.nodes[static_cast<std::size_t>(f.node)];
      auto is_self = [&](int arg) {
        const auto& in = first.g.nodes[static_cast<std::size_t>(arg)];
        return in.kind == NodeKind::Input && in.input == self;
      };
      if (n.kind == NodeKind::Alu && n.op == AluOp::Add && (is_self(n.args[0]) || is_self(n.args[1]))) {
        if (acc >= 0)
          throw PartitionError(RejectReason::UnsupportedOp,
                               "two accumulators (" + reg_name(acc) + ", " + reg_name(r) + ")");
        acc = r;
        cls[r] = RegClass::Accumulator;
        continue;
      }
    }
    if (first.consumed[r] > 0 || (f.is_aff() && f.aff.reg[r]))
      throw PartitionError(RejectReason::UnsupportedOp, "value of " + reg_name(r) + " carried across iterations");
    cls[r] = RegClass::Temporary;
  }

  Walker w(region, false);
  w.regs[0] = Sym::of(Affine::of_const(0));
  for (int r = 1; r < kNumRegs; ++r) {
    switch (cls[r]) {
      case RegClass::Invariant: w.regs[r] = Sym::of(entry_value(region, r)); break;
      case RegClass::Induction: {
        Affine a = entry_value(region, r);
        a.iter = static_cast<std::uint32_t>(step[r]);
        w.regs[r] = Sym::of(a);
        break;
      }
      case RegClass::Accumulator:
        w.regs[r] = Sym::acc_in();
        w.g.accumulator = Accumulator{r, entry_value(region, r), -1};
        break;
      case RegClass::Temporary: w.regs[r] = Sym{}; break;
    }
  }
  w.run();
  if (w.g.accumulator && w.g.accumulator->mac_node < 0)
    throw PartitionError(RejectReason::UnsupportedOp, "accumulator in " + reg_name(acc) + " not updated by addition");
  for (std::size_t i = 0; i < w.refs.size(); ++i) {
    const RefState& st = w.refs[i];
    w.g.array_refs[i].dir =
        st.loaded && st.stored ? Direction::ReadWrite : st.stored ? Direction::Write : Direction::Read;
    if (!st.stored) continue;
    CdfgNode n;
    n.kind = NodeKind::Store;
    n.ref = static_cast<int>(i);
    n.args[0] = w.to_node(st.pending);
    w.g.stores.push_back(w.add_node(n));
  }
  Cdfg g = std::move(w.g);

  g.header = make_header(w.branch_a, w.branch_b, region.body.back());
  check_dependences(g);

  for (int r = 1; r < kNumRegs; ++r) {
    const bool live = region.live_after & bit(r);
    if (cls[r] == RegClass::Temporary && live)
      throw PartitionError(RejectReason::UnsupportedOp, reg_name(r) + " is read after the loop");
    if (cls[r] == RegClass::Induction) {
      g.inductions.push_back({r, entry_value(region, r), step[r]});
      if (live) g.live_outs |= bit(r);
    }
  }
  if (g.accumulator) g.live_outs |= bit(g.accumulator->reg);

  remove_dead_nodes(g);

  auto need = [&](const Affine& a) {
    for (int r = 1; r < kNumRegs; ++r)
      if (a.reg[r]) g.live_ins |= bit(r);
  };
  for (const auto& ref : g.array_refs) need(ref.address);
  need(g.header.counter);
  need(g.header.bound);
  for (const auto& iv : g.inductions)
    if (g.live_outs & bit(iv.reg)) need(iv.entry);
  if (g.accumulator) need(g.accumulator->init);
  for (const auto& n : g.nodes)
    if (n.kind == NodeKind::Input) need(n.input);
  return g;
}

EligibilityVerdict check_eligibility(const Cdfg& g, const FabricLimits& limits) {
  EligibilityVerdict v;
  if (g.array_refs.size() > limits.array_registers)
    v.reject(RejectReason::RegionTooLarge, "array refs exceed " + std::to_string(limits.array_registers) + " registers");
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Input) {
      v.reject(RejectReason::UnsupportedOp, "datapath reads loop register value " + n.input.str());
      break;
    }
  }
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Alu && n.op == AluOp::Div) {
      v.reject(RejectReason::UnsupportedOp, "div has no fabric implementation");
      break;
    }
  }
  if (!v.eligible) return v;
  try {
    v.estimated_luts = estimate_luts(g);
  } catch (const PartitionError& e) {
    v.reject(e.reason(), e.detail());
    return v;
  }
  if (v.estimated_luts > limits.lut_capacity)
    v.reject(RejectReason::RegionTooLarge, "estimated " + std::to_string(v.estimated_luts) + " LUTs exceeds capacity " +
                                               std::to_string(limits.lut_capacity));
  return v;
}

}  // namespace warp
