#include "warp/netlist.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace warp {

std::string PortId::name() const {
  switch (kind) {
    case Kind::Store: return "reg" + std::to_string(slot);
    case Kind::MacA: return "mac_a";
    case Kind::MacB: return "mac_b";
  }
  return "?";
}

const char* to_string(CellKind k) {
  static const char* const names[] = {"input", "const", "and", "or", "xor", "not", "mux", "sum3", "carry3"};
  return names[static_cast<int>(k)];
}

int Cell::arity() const {
  switch (kind) {
    case CellKind::Input:
    case CellKind::Const: return 0;
    case CellKind::Not: return 1;
    case CellKind::And:
    case CellKind::Or:
    case CellKind::Xor: return 2;
    case CellKind::Mux:
    case CellKind::Sum3:
    case CellKind::Carry3: return 3;
  }
  return 0;
}

bool eval_cell(CellKind k, bool a, bool b, bool c) {
  switch (k) {
    case CellKind::And: return a && b;
    case CellKind::Or: return a || b;
    case CellKind::Xor: return a != b;
    case CellKind::Not: return !a;
    case CellKind::Mux: return a ? b : c;
    case CellKind::Sum3: return (a != b) != c;
    case CellKind::Carry3: return (a && b) || (a && c) || (b && c);
    default: return false;
  }
}

std::size_t RtlNetlist::logic_cells() const {
  std::size_t n = 0;
  for (const auto& c : cells)
    if (c.kind != CellKind::Input && c.kind != CellKind::Const) ++n;
  return n;
}

namespace {

std::size_t count_mac(const std::vector<Port<int>>& outputs) {
  for (const auto& p : outputs)
    if (p.id.kind == PortId::Kind::MacA) return 1;
  return 0;
}

bool reg_bit(const RegValues& regs, std::uint32_t index) { return (regs[index / 32] >> (index % 32)) & 1u; }

template <typename Lookup>
PortValues collect(const std::vector<Port<int>>& outputs, Lookup bit_of) {
  PortValues out;
  for (const auto& p : outputs) {
    std::uint32_t v = 0;
    for (int b = 0; b < kWordBits; ++b)
      if (bit_of(p.bits[b])) v |= 1u << b;
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::size_t RtlNetlist::mac_ops() const { return count_mac(outputs); }

PortValues evaluate(const RtlNetlist& n, const RegValues& regs) {
  std::vector<std::uint8_t> v(n.cells.size(), 0);
  for (std::size_t i = 0; i < n.cells.size(); ++i) {
    const Cell& c = n.cells[i];
    auto in = [&](int k) { return c.in[k] >= 0 && v[static_cast<std::size_t>(c.in[k])]; };
    switch (c.kind) {
      case CellKind::Input: v[i] = reg_bit(regs, c.value); break;
      case CellKind::Const: v[i] = c.value & 1u; break;
      default: v[i] = eval_cell(c.kind, in(0), in(1), in(2)); break;
    }
  }
  return collect(n.outputs, [&](int id) { return v[static_cast<std::size_t>(id)] != 0; });
}

std::size_t LutNetlist::wires() const {
  std::size_t n = 0;
  for (const auto& p : outputs)
    for (int b : p.bits)
      if (b >= 0 && b < kInputBits) ++n;
  return n;
}

std::size_t LutNetlist::used_inputs() const {
  std::set<int> used;
  for (const auto& l : luts)
    for (int i : l.inputs)
      if (i >= 0 && i < kInputBits) used.insert(i);
  for (const auto& p : outputs)
    for (int b : p.bits)
      if (b >= 0 && b < kInputBits) used.insert(b);
  return used.size();
}

std::size_t LutNetlist::mac_ops() const { return count_mac(outputs); }

bool lut_output(const Lut& l, const std::vector<std::uint8_t>& nets) {
  unsigned index = 0;
  for (int k = 0; k < 4; ++k)
    if (l.inputs[k] >= 0 && nets[static_cast<std::size_t>(l.inputs[k])]) index |= 1u << k;
  return (l.truth >> index) & 1u;
}

PortValues evaluate(const LutNetlist& n, const RegValues& regs) {
  std::vector<std::uint8_t> nets(kFirstLutNet + n.luts.size(), 0);
  for (int i = 0; i < kInputBits; ++i) nets[static_cast<std::size_t>(i)] = reg_bit(regs, static_cast<std::uint32_t>(i));
  nets[kNetConst1] = 1;
  for (const auto& l : n.luts) nets[static_cast<std::size_t>(l.output)] = lut_output(l, nets);
  return collect(n.outputs, [&](int id) { return nets[static_cast<std::size_t>(id)] != 0; });
}

namespace {

std::string net_name(int net) {
  if (net == kNetConst0) return "0";
  if (net == kNetConst1) return "1";
  if (net < kInputBits) return "reg" + std::to_string(net / 32) + "[" + std::to_string(net % 32) + "]";
  return "n" + std::to_string(net);
}

}  // namespace

std::string format_netlist(const LutNetlist& n) {
  std::ostringstream os;
  for (std::size_t i = 0; i < n.luts.size(); ++i) {
    const Lut& l = n.luts[i];
    char hex[8];
    std::snprintf(hex, sizeof hex, "%04x", l.truth);
    os << "lut " << i << ' ' << hex;
    for (int in : l.inputs) os << ' ' << (in >= 0 ? net_name(in) : "-");
    os << " -> " << net_name(l.output) << '\n';
  }
  std::vector<std::string> mac_names;
  for (const auto& p : n.outputs) {
    if (p.id.kind != PortId::Kind::Store) {
      mac_names.push_back(p.id.name());
      continue;
    }
    for (int b = 0; b < kWordBits; ++b)
      if (p.bits[b] < kFirstLutNet) os << "wire " << net_name(p.bits[b]) << " -> " << p.id.name() << '[' << b << "]\n";
  }
  for (const auto& p : n.outputs)
    if (p.id.kind != PortId::Kind::Store)
      for (int b = 0; b < kWordBits; ++b)
        if (p.bits[b] < kFirstLutNet) os << "wire " << net_name(p.bits[b]) << " -> " << p.id.name() << '[' << b << "]\n";
  if (mac_names.size() == 2) os << "mac " << mac_names[0] << ' ' << mac_names[1] << " -> acc\n";
  return os.str();
}

}  // namespace warp
