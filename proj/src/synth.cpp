#include "warp/synth.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "warp/error.hpp"

namespace warp {
namespace {

using Word = std::array<int, kWordBits>;

class Builder {
 public:
  Builder() {
    for (auto& w : inputs_) w.fill(-1);
  }

  RtlNetlist n;

  int cell(CellKind k, int a = -1, int b = -1, int c = -1, std::uint32_t value = 0) {
    n.cells.push_back({k, {a, b, c}, value});
    return static_cast<int>(n.cells.size() - 1);
  }
  int konst(bool v) {
    int& slot = v ? c1_ : c0_;
    if (slot < 0) slot = cell(CellKind::Const, -1, -1, -1, v ? 1u : 0u);
    return slot;
  }
  Word input(int reg) {
    auto& w = inputs_[static_cast<std::size_t>(reg)];
    if (w[0] < 0)
      for (int b = 0; b < kWordBits; ++b) w[b] = cell(CellKind::Input, -1, -1, -1, static_cast<std::uint32_t>(reg * 32 + b));
    return w;
  }
  Word constant(std::uint32_t v) {
    Word w;
    for (int b = 0; b < kWordBits; ++b) w[b] = konst((v >> b) & 1u);
    return w;
  }
  Word bitwise(CellKind k, const Word& a, const Word& b) {
    Word w;
    for (int i = 0; i < kWordBits; ++i) w[i] = cell(k, a[i], b[i]);
    return w;
  }
  Word invert(const Word& a) {
    Word w;
    for (int i = 0; i < kWordBits; ++i) w[i] = cell(CellKind::Not, a[i]);
    return w;
  }
  // Ripple-carry a + b + carry over bits [from, 32).
  Word add(const Word& a, const Word& b, int carry, int from = 0) {
    Word w = a;
    for (int i = from; i < kWordBits; ++i) {
      w[i] = cell(CellKind::Sum3, a[i], b[i], carry);
      if (i + 1 < kWordBits) carry = cell(CellKind::Carry3, a[i], b[i], carry);
    }
    return w;
  }
  Word multiply(const Word& a, const Word& b) {
    Word acc;
    for (int j = 0; j < kWordBits; ++j) acc[j] = cell(CellKind::And, a[j], b[0]);
    for (int i = 1; i < kWordBits; ++i) {
      Word pp = acc;
      for (int j = i; j < kWordBits; ++j) pp[j] = cell(CellKind::And, a[j - i], b[i]);
      acc = add(acc, pp, konst(false), i);
    }
    return acc;
  }
  Word shift(AluOp op, const Word& a, std::uint32_t s) {
    Word w;
    for (int i = 0; i < kWordBits; ++i) {
      const int src = op == AluOp::Sll ? i - static_cast<int>(s) : i + static_cast<int>(s);
      if (src >= 0 && src < kWordBits) w[i] = a[src];
      else if (op == AluOp::Sra && src >= kWordBits) w[i] = a[kWordBits - 1];
      else w[i] = konst(false);
    }
    return w;
  }
  int any(const Word& a) {
    std::vector<int> level(a.begin(), a.end());
    while (level.size() > 1) {
      std::vector<int> next;
      for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(cell(CellKind::Or, level[i], level[i + 1]));
      if (level.size() % 2) next.push_back(level.back());
      level = std::move(next);
    }
    return level[0];
  }
  Word flag(int bit) {
    Word w = constant(0);
    w[0] = bit;
    return w;
  }
  // Signed a < b as a log-depth tree over (less, equal) pairs; the sign bit
  // compares with its roles swapped.
  int less_than(const Word& a, const Word& b) {
    std::vector<std::pair<int, int>> level;  // (less, equal), least significant first
    for (int i = 0; i < kWordBits; ++i) {
      const int lt = i == kWordBits - 1 ? cell(CellKind::And, a[i], cell(CellKind::Not, b[i]))
                                        : cell(CellKind::And, cell(CellKind::Not, a[i]), b[i]);
      level.emplace_back(lt, cell(CellKind::Not, cell(CellKind::Xor, a[i], b[i])));
    }
    while (level.size() > 1) {
      std::vector<std::pair<int, int>> next;
      for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
        const auto [lo_lt, lo_eq] = level[i];
        const auto [hi_lt, hi_eq] = level[i + 1];
        next.emplace_back(cell(CellKind::Or, hi_lt, cell(CellKind::And, hi_eq, lo_lt)),
                          cell(CellKind::And, hi_eq, lo_eq));
      }
      level = std::move(next);
    }
    return level[0].first;
  }
  int equal(const Word& a, const Word& b) { return cell(CellKind::Not, any(bitwise(CellKind::Xor, a, b))); }
  Word select(const Word& c, const Word& a, const Word& b) {
    const int s = any(c);
    Word w;
    for (int i = 0; i < kWordBits; ++i) w[i] = cell(CellKind::Mux, s, a[i], b[i]);
    return w;
  }

 private:
  int c0_ = -1, c1_ = -1;
  std::array<Word, kDatapathRegs> inputs_;
};

}  // namespace

std::vector<PortId> datapath_ports(const Cdfg& g) {
  std::vector<PortId> ports;
  for (std::size_t r = 0; r < g.array_refs.size(); ++r)
    if (g.array_refs[r].writes()) ports.push_back({PortId::Kind::Store, static_cast<int>(r)});
  if (g.accumulator) {
    ports.push_back({PortId::Kind::MacA, 0});
    ports.push_back({PortId::Kind::MacB, 0});
  }
  return ports;
}

PortValues port_values(const Cdfg& g, const IterationValues& it) {
  PortValues v;
  for (const auto& p : datapath_ports(g)) {
    switch (p.kind) {
      case PortId::Kind::Store: v.push_back(it.stores[static_cast<std::size_t>(p.slot)]); break;
      case PortId::Kind::MacA: v.push_back(it.mac_a); break;
      case PortId::Kind::MacB: v.push_back(it.mac_b); break;
    }
  }
  return v;
}

RtlNetlist synthesize(const Cdfg& g) {
  if (g.array_refs.size() > static_cast<std::size_t>(kDatapathRegs))
    throw PartitionError(RejectReason::RegionTooLarge, "array refs exceed 3 registers");
  Builder b;
  for (std::size_t r = 0; r < g.array_refs.size(); ++r) b.n.reg_bindings[r] = static_cast<int>(r);
  std::vector<Word> words(g.nodes.size());
  std::map<int, Word> stores;
  std::optional<std::pair<Word, Word>> mac;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const CdfgNode& n = g.nodes[i];
    auto arg = [&](int k) -> const Word& { return words[static_cast<std::size_t>(n.args[k])]; };
    switch (n.kind) {
      case NodeKind::Const: words[i] = b.constant(n.value); break;
      case NodeKind::Input:
        throw PartitionError(RejectReason::UnsupportedOp, "datapath reads loop register value " + n.input.str());
      case NodeKind::Load: words[i] = b.input(n.ref); break;
      case NodeKind::Store: stores[n.ref] = arg(0); break;
      case NodeKind::Mac: mac = {arg(0), arg(1)}; break;
      case NodeKind::Alu:
        switch (n.op) {
          case AluOp::Add: words[i] = b.add(arg(0), arg(1), b.konst(false)); break;
          case AluOp::Sub: words[i] = b.add(arg(0), b.invert(arg(1)), b.konst(true)); break;
          case AluOp::And: words[i] = b.bitwise(CellKind::And, arg(0), arg(1)); break;
          case AluOp::Or: words[i] = b.bitwise(CellKind::Or, arg(0), arg(1)); break;
          case AluOp::Xor: words[i] = b.bitwise(CellKind::Xor, arg(0), arg(1)); break;
          case AluOp::Sll:
          case AluOp::Srl:
          case AluOp::Sra: words[i] = b.shift(n.op, arg(0), n.value); break;
          case AluOp::Mul: words[i] = b.multiply(arg(0), arg(1)); break;
          case AluOp::Lt: words[i] = b.flag(b.less_than(arg(0), arg(1))); break;
          case AluOp::Eq: words[i] = b.flag(b.equal(arg(0), arg(1))); break;
          case AluOp::Select: words[i] = b.select(arg(0), arg(1), arg(2)); break;
          case AluOp::Div: throw PartitionError(RejectReason::UnsupportedOp, "div has no fabric implementation");
        }
        break;
    }
  }
  for (const auto& p : datapath_ports(g)) {
    Port<int> port;
    port.id = p;
    switch (p.kind) {
      case PortId::Kind::Store: port.bits = stores.at(p.slot); break;
      case PortId::Kind::MacA: port.bits = mac->first; break;
      case PortId::Kind::MacB: port.bits = mac->second; break;
    }
    b.n.outputs.push_back(port);
  }
  return b.n;
}

namespace {

class Rebuilder {
 public:
  RtlNetlist out;

  int make(Cell c) {
    if (c.kind == CellKind::And || c.kind == CellKind::Or || c.kind == CellKind::Xor) {
      if (c.in[0] > c.in[1]) std::swap(c.in[0], c.in[1]);
    } else if (c.kind == CellKind::Sum3 || c.kind == CellKind::Carry3) {
      std::sort(c.in.begin(), c.in.end());
    }
    const auto key = std::make_tuple(c.kind, c.in[0], c.in[1], c.in[2], c.value);
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
    out.cells.push_back(c);
    return table_[key] = static_cast<int>(out.cells.size() - 1);
  }
  int konst(bool v) { return make({CellKind::Const, {-1, -1, -1}, v ? 1u : 0u}); }
  std::optional<bool> value(int id) const {
    const Cell& c = out.cells[static_cast<std::size_t>(id)];
    if (c.kind != CellKind::Const) return std::nullopt;
    return c.value != 0;
  }
  int negate(int x) {
    const Cell& c = out.cells[static_cast<std::size_t>(x)];
    if (c.kind == CellKind::Not) return c.in[0];
    if (auto v = value(x)) return konst(!*v);
    return make({CellKind::Not, {x, -1, -1}, 0});
  }

  int simplify(CellKind k, int a, int b, int c) {
    const auto va = a >= 0 ? value(a) : std::nullopt;
    const auto vb = b >= 0 ? value(b) : std::nullopt;
    const auto vc = c >= 0 ? value(c) : std::nullopt;
    switch (k) {
      case CellKind::Not: return negate(a);
      case CellKind::And:
        if ((va && !*va) || (vb && !*vb)) return konst(false);
        if (va) return b;
        if (vb || a == b) return a;
        break;
      case CellKind::Or:
        if ((va && *va) || (vb && *vb)) return konst(true);
        if (va) return b;
        if (vb || a == b) return a;
        break;
      case CellKind::Xor:
        if (a == b) return konst(false);
        if (va) return *va ? negate(b) : b;
        if (vb) return *vb ? negate(a) : a;
        break;
      case CellKind::Mux:
        if (va) return *va ? b : c;
        if (b == c) return b;
        if (vb && vc) return *vb ? a : negate(a);
        break;
      case CellKind::Sum3:
      case CellKind::Carry3: return full_adder(k, a, b, c);
      default: break;
    }
    return make({k, {a, b, c}, 0});
  }

 private:
  int full_adder(CellKind k, int a, int b, int c) {
    std::vector<int> vars;
    int ones = 0, consts = 0;
    for (int x : {a, b, c}) {
      if (auto v = value(x)) {
        ++consts;
        ones += *v;
      } else {
        vars.push_back(x);
      }
    }
    const bool sum = k == CellKind::Sum3;
    if (consts == 3) return konst(sum ? (ones & 1) : ones >= 2);
    if (consts == 2) {
      if (sum) return ones == 1 ? negate(vars[0]) : vars[0];
      return ones == 0 ? konst(false) : ones == 2 ? konst(true) : vars[0];
    }
    if (consts == 1) {
      if (sum) {
        if (ones == 0) return simplify(CellKind::Xor, vars[0], vars[1], -1);
      } else {
        return simplify(ones ? CellKind::Or : CellKind::And, vars[0], vars[1], -1);
      }
    }
    if (consts == 0) {
      // two equal inputs: sum is the third, carry is the repeated one
      for (auto [x, y, z] : {std::tuple{a, b, c}, std::tuple{a, c, b}, std::tuple{b, c, a}})
        if (x == y) return sum ? z : x;
    }
    return make({k, {a, b, c}, 0});
  }

  std::map<std::tuple<CellKind, int, int, int, std::uint32_t>, int> table_;
};

RtlNetlist remove_dead(const RtlNetlist& n) {
  std::vector<bool> live(n.cells.size(), false);
  for (const auto& p : n.outputs)
    for (int b : p.bits) live[static_cast<std::size_t>(b)] = true;
  for (std::size_t i = n.cells.size(); i-- > 0;) {
    if (!live[i]) continue;
    const Cell& c = n.cells[i];
    for (int k = 0; k < c.arity(); ++k) live[static_cast<std::size_t>(c.in[k])] = true;
  }
  RtlNetlist out;
  out.reg_bindings = n.reg_bindings;
  std::vector<int> remap(n.cells.size(), -1);
  for (std::size_t i = 0; i < n.cells.size(); ++i) {
    if (!live[i]) continue;
    Cell c = n.cells[i];
    for (int k = 0; k < c.arity(); ++k) c.in[k] = remap[static_cast<std::size_t>(c.in[k])];
    remap[i] = static_cast<int>(out.cells.size());
    out.cells.push_back(c);
  }
  out.outputs = n.outputs;
  for (auto& p : out.outputs)
    for (int& b : p.bits) b = remap[static_cast<std::size_t>(b)];
  return out;
}

}  // namespace

RtlNetlist optimize(const RtlNetlist& n) {
  Rebuilder rb;
  rb.out.reg_bindings = n.reg_bindings;
  std::vector<int> map(n.cells.size(), -1);
  for (std::size_t i = 0; i < n.cells.size(); ++i) {
    const Cell& c = n.cells[i];
    if (c.arity() == 0) {
      map[i] = rb.make(c);
      continue;
    }
    int in[3] = {-1, -1, -1};
    for (int k = 0; k < c.arity(); ++k) in[k] = map[static_cast<std::size_t>(c.in[k])];
    map[i] = rb.simplify(c.kind, in[0], in[1], in[2]);
  }
  rb.out.outputs = n.outputs;
  for (auto& p : rb.out.outputs)
    for (int& b : p.bits) b = map[static_cast<std::size_t>(b)];
  return remove_dead(rb.out);
}

namespace {

bool is_logic(const Cell& c) { return c.kind != CellKind::Input && c.kind != CellKind::Const; }

struct Cone {
  int root = -1;
  std::vector<int> leaves;  // non-constant leaf cells, ascending
  std::set<int> members;
  std::uint16_t truth = 0;
};

bool eval_in_cone(const RtlNetlist& n, const Cone& cone, int id, unsigned assignment, std::map<int, bool>& memo) {
  auto it = memo.find(id);
  if (it != memo.end()) return it->second;
  const Cell& c = n.cells[static_cast<std::size_t>(id)];
  bool v = false;
  if (c.kind == CellKind::Const) {
    v = c.value != 0;
  } else if (!cone.members.count(id)) {
    const auto pos = std::find(cone.leaves.begin(), cone.leaves.end(), id) - cone.leaves.begin();
    v = (assignment >> pos) & 1u;
  } else {
    bool in[3] = {false, false, false};
    for (int k = 0; k < c.arity(); ++k) in[k] = eval_in_cone(n, cone, c.in[k], assignment, memo);
    v = eval_cell(c.kind, in[0], in[1], in[2]);
  }
  return memo[id] = v;
}

}  // namespace

LutNetlist tech_map(const RtlNetlist& n, int k) {
  if (k < 3 || k > 4) throw std::invalid_argument("LUT size must be 3 or 4");
  const std::size_t count = n.cells.size();
  std::vector<int> fanout(count, 0), depth(count, 0);
  std::vector<bool> drives_output(count, false);
  for (std::size_t i = 0; i < count; ++i) {
    const Cell& c = n.cells[i];
    for (int a = 0; a < c.arity(); ++a) {
      ++fanout[static_cast<std::size_t>(c.in[a])];
      depth[i] = std::max(depth[i], depth[static_cast<std::size_t>(c.in[a])] + 1);
    }
  }
  for (const auto& p : n.outputs)
    for (int b : p.bits) drives_output[static_cast<std::size_t>(b)] = true;

  std::set<int, std::greater<>> pending;
  std::vector<bool> is_root(count, false);
  for (std::size_t i = 0; i < count; ++i)
    if (is_logic(n.cells[i]) && (drives_output[i] || fanout[i] != 1)) {
      pending.insert(static_cast<int>(i));
      is_root[i] = true;
    }

  auto const_leaf = [&](int id) { return n.cells[static_cast<std::size_t>(id)].kind == CellKind::Const; };
  std::map<int, Cone> cones;
  while (!pending.empty()) {
    const int root = *pending.begin();
    pending.erase(pending.begin());
    Cone cone;
    cone.root = root;
    cone.members.insert(root);
    std::set<int> leaves;
    const Cell& rc = n.cells[static_cast<std::size_t>(root)];
    for (int a = 0; a < rc.arity(); ++a) leaves.insert(rc.in[a]);
    auto width = [&](const std::set<int>& s) {
      return static_cast<int>(std::count_if(s.begin(), s.end(), [&](int id) { return !const_leaf(id); }));
    };
    for (bool grew = true; grew;) {
      grew = false;
      std::vector<int> candidates;
      for (int id : leaves)
        if (is_logic(n.cells[static_cast<std::size_t>(id)]) && !is_root[static_cast<std::size_t>(id)])
          candidates.push_back(id);
      std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        return depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)];
      });
      for (int id : candidates) {
        std::set<int> trial = leaves;
        trial.erase(id);
        const Cell& c = n.cells[static_cast<std::size_t>(id)];
        for (int a = 0; a < c.arity(); ++a) trial.insert(c.in[a]);
        if (width(trial) <= k) {
          leaves = std::move(trial);
          cone.members.insert(id);
          grew = true;
          break;
        }
      }
    }
    for (int id : leaves) {
      if (const_leaf(id)) continue;
      cone.leaves.push_back(id);
      if (is_logic(n.cells[static_cast<std::size_t>(id)]) && !is_root[static_cast<std::size_t>(id)]) {
        is_root[static_cast<std::size_t>(id)] = true;
        pending.insert(id);
      }
    }
    for (unsigned m = 0; m < (1u << cone.leaves.size()); ++m) {
      std::map<int, bool> memo;
      if (eval_in_cone(n, cone, root, m, memo)) cone.truth |= static_cast<std::uint16_t>(1u << m);
    }
    cones[root] = std::move(cone);
  }

  LutNetlist out;
  out.reg_bindings = n.reg_bindings;
  std::vector<int> net(count, -1);
  std::vector<int> lut_depth(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const Cell& c = n.cells[i];
    if (c.kind == CellKind::Input) net[i] = static_cast<int>(c.value);
    else if (c.kind == CellKind::Const) net[i] = c.value ? kNetConst1 : kNetConst0;
  }
  for (auto& [root, cone] : cones) {
    Lut l;
    int d = 0;
    for (std::size_t j = 0; j < cone.leaves.size(); ++j) {
      const auto leaf = static_cast<std::size_t>(cone.leaves[j]);
      l.inputs[j] = net[leaf];
      d = std::max(d, lut_depth[leaf]);
    }
    l.truth = cone.truth;
    l.output = kFirstLutNet + static_cast<int>(out.luts.size());
    net[static_cast<std::size_t>(root)] = l.output;
    lut_depth[static_cast<std::size_t>(root)] = d + 1;
    out.depth = std::max(out.depth, d + 1);
    out.luts.push_back(l);
  }
  for (const auto& p : n.outputs) {
    Port<int> q;
    q.id = p.id;
    for (int b = 0; b < kWordBits; ++b) q.bits[b] = net[static_cast<std::size_t>(p.bits[b])];
    out.outputs.push_back(q);
  }
  return out;
}

std::size_t estimate_luts(const Cdfg& g) { return tech_map(optimize(synthesize(g))).luts.size(); }

}  // namespace warp
