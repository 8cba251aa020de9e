#include "warp/cdfg.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

#include "warp/error.hpp"

namespace warp {

bool Affine::is_const() const { return iter == 0 && !uses_any_reg(); }

bool Affine::uses_any_reg() const {
  for (auto c : reg)
    if (c) return true;
  return false;
}

std::uint32_t Affine::eval(const RegFile& entry, std::uint32_t k) const {
  std::uint32_t v = constant + iter * k;
  for (int r = 1; r < kNumRegs; ++r) v += reg[r] * entry[r];
  return v;
}

Affine Affine::operator+(const Affine& o) const {
  Affine a = *this;
  a.constant += o.constant;
  a.iter += o.iter;
  for (int r = 0; r < kNumRegs; ++r) a.reg[r] += o.reg[r];
  return a;
}

Affine Affine::operator-(const Affine& o) const { return *this + o.scaled(0xffffffffu); }

Affine Affine::scaled(std::uint32_t c) const {
  Affine a = *this;
  a.constant *= c;
  a.iter *= c;
  for (auto& x : a.reg) x *= c;
  return a;
}

std::string Affine::str() const {
  std::ostringstream os;
  os << static_cast<std::int32_t>(constant);
  for (int r = 1; r < kNumRegs; ++r)
    if (reg[r]) os << '+' << static_cast<std::int32_t>(reg[r]) << "*r" << r;
  if (iter) os << '+' << static_cast<std::int32_t>(iter) << "*k";
  return os.str();
}

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Const: return "const";
    case NodeKind::Input: return "input";
    case NodeKind::Load: return "load";
    case NodeKind::Store: return "store";
    case NodeKind::Alu: return "alu";
    case NodeKind::Mac: return "mac";
  }
  return "?";
}

const char* to_string(AluOp op) {
  static const char* const names[] = {"add", "sub", "and", "or", "xor", "sll", "srl",
                                      "sra", "mul", "div", "lt", "eq", "select"};
  return names[static_cast<int>(op)];
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Read: return "read";
    case Direction::Write: return "write";
    case Direction::ReadWrite: return "readwrite";
  }
  return "?";
}

int CdfgNode::arity() const {
  switch (kind) {
    case NodeKind::Const:
    case NodeKind::Input:
    case NodeKind::Load: return 0;
    case NodeKind::Store: return 1;
    case NodeKind::Mac: return 2;
    case NodeKind::Alu:
      if (op == AluOp::Sll || op == AluOp::Srl || op == AluOp::Sra) return 1;
      return op == AluOp::Select ? 3 : 2;
  }
  return 0;
}

std::vector<std::pair<int, int>> Cdfg::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int a = 0; a < nodes[i].arity(); ++a) out.emplace_back(nodes[i].args[a], static_cast<int>(i));
  return out;
}

std::optional<std::uint64_t> trip_count(const LoopHeader& h, const RegFile& entry) {
  const std::int64_t a = static_cast<std::int32_t>(h.counter.eval(entry, 0));
  const std::int64_t b = static_cast<std::int32_t>(h.bound.eval(entry, 0));
  const std::int64_t s = h.step;
  std::int64_t m = 0;
  switch (h.compare) {
    case LoopHeader::Compare::CounterLess:
      if (s <= 0) return std::nullopt;
      if (a < b) m = (b - a + s - 1) / s;
      if (a + s * m > INT32_MAX) return std::nullopt;
      break;
    case LoopHeader::Compare::BoundLess:
      if (s >= 0) return std::nullopt;
      if (b < a) m = (a - b + (-s) - 1) / (-s);
      if (a + s * m < INT32_MIN) return std::nullopt;
      break;
    case LoopHeader::Compare::NotEqual: {
      if (s == 0) return std::nullopt;
      const auto ua = static_cast<std::uint32_t>(a), ub = static_cast<std::uint32_t>(b);
      const std::uint32_t dist = s > 0 ? ub - ua : ua - ub;
      const auto mag = static_cast<std::uint32_t>(s > 0 ? s : -s);
      if (dist % mag) return std::nullopt;
      m = dist / mag;
      break;
    }
  }
  return static_cast<std::uint64_t>(m) + 1;
}

std::uint32_t eval_alu(AluOp op, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t shamt) {
  switch (op) {
    case AluOp::Add: return a + b;
    case AluOp::Sub: return a - b;
    case AluOp::And: return a & b;
    case AluOp::Or: return a | b;
    case AluOp::Xor: return a ^ b;
    case AluOp::Sll: return a << shamt;
    case AluOp::Srl: return a >> shamt;
    case AluOp::Sra: return static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> shamt);
    case AluOp::Mul: return a * b;
    case AluOp::Div: return b == 0 ? 0xffffffffu : a / b;
    case AluOp::Lt: return static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? 1u : 0u;
    case AluOp::Eq: return a == b ? 1u : 0u;
    case AluOp::Select: return a != 0 ? b : c;
  }
  return 0;
}

IterationValues evaluate_iteration(const Cdfg& g, const std::array<std::uint32_t, 3>& loaded,
                                   const RegFile& entry, std::uint32_t k) {
  IterationValues out;
  std::vector<std::uint32_t> v(g.nodes.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    auto arg = [&](int j) { return n.args[j] >= 0 ? v[static_cast<std::size_t>(n.args[j])] : 0u; };
    switch (n.kind) {
      case NodeKind::Const: v[i] = n.value; break;
      case NodeKind::Input: v[i] = n.input.eval(entry, k); break;
      case NodeKind::Load: v[i] = loaded.at(static_cast<std::size_t>(n.ref)); break;
      case NodeKind::Store: v[i] = arg(0); out.stores.at(static_cast<std::size_t>(n.ref)) = v[i]; break;
      case NodeKind::Alu: v[i] = eval_alu(n.op, arg(0), arg(1), arg(2), n.value); break;
      case NodeKind::Mac: out.mac_a = arg(0); out.mac_b = arg(1); break;
    }
  }
  return out;
}

CdfgRunResult interpret(const Cdfg& g, const RegFile& entry, std::vector<std::uint8_t>& mem,
                        std::uint32_t data_base) {
  const auto trips = trip_count(g.header, entry);
  if (!trips) throw std::runtime_error("loop trip count wraps the 32-bit range");
  auto check = [&](std::uint32_t addr) {
    if (addr < data_base || (addr & 3u) || static_cast<std::uint64_t>(addr) + 4 > data_base + mem.size())
      throw SimFault(addr, "array access out of range");
    return addr - data_base;
  };
  CdfgRunResult res;
  res.iterations = *trips;
  std::uint32_t acc = g.accumulator ? g.accumulator->init.eval(entry, 0) : 0;
  for (std::uint64_t k = 0; k < *trips; ++k) {
    const auto kk = static_cast<std::uint32_t>(k);
    std::array<std::uint32_t, 3> loaded{};
    for (std::size_t r = 0; r < g.array_refs.size() && r < 3; ++r)
      if (g.array_refs[r].reads())
        std::memcpy(&loaded[r], mem.data() + check(g.array_refs[r].address.eval(entry, kk)), 4);
    const auto it = evaluate_iteration(g, loaded, entry, kk);
    for (std::size_t r = 0; r < g.array_refs.size() && r < 3; ++r)
      if (g.array_refs[r].writes())
        std::memcpy(mem.data() + check(g.array_refs[r].address.eval(entry, kk)), &it.stores[r], 4);
    acc += it.mac_a * it.mac_b;
  }
  res.final_regs = entry;
  const auto t = static_cast<std::uint32_t>(*trips);
  for (const auto& iv : g.inductions)
    res.final_regs[iv.reg] = iv.entry.eval(entry, 0) + t * static_cast<std::uint32_t>(iv.step);
  if (g.accumulator) res.final_regs[g.accumulator->reg] = acc;
  res.final_regs[0] = 0;
  return res;
}

std::string format_cdfg(const Cdfg& g) {
  std::ostringstream os;
  for (std::size_t i = 0; i < g.array_refs.size(); ++i)
    os << "ref " << i << ' ' << to_string(g.array_refs[i].dir) << ' ' << g.array_refs[i].address.str() << '\n';
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    os << "node " << i << ' ';
    switch (n.kind) {
      case NodeKind::Const: os << "const " << n.value; break;
      case NodeKind::Input: os << "input " << n.input.str(); break;
      case NodeKind::Load: os << "load " << n.ref; break;
      case NodeKind::Store: os << "store " << n.ref << ' ' << n.args[0]; break;
      case NodeKind::Mac: os << "mac " << n.args[0] << ' ' << n.args[1]; break;
      case NodeKind::Alu:
        os << to_string(n.op);
        for (int a = 0; a < n.arity(); ++a) os << ' ' << n.args[a];
        if (n.arity() == 1) os << ' ' << n.value;
        break;
    }
    os << '\n';
  }
  for (auto [s, d] : g.edges()) os << "edge " << s << ' ' << d << '\n';
  return os.str();
}

}  // namespace warp
