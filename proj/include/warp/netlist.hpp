// netlist.hpp - bit-level RTL and 4-LUT netlists of a loop datapath.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace warp {

inline constexpr int kDatapathRegs = 3;  // Reg0..Reg2
inline constexpr int kWordBits = 32;
inline constexpr int kInputBits = kDatapathRegs * kWordBits;

using RegValues = std::array<std::uint32_t, kDatapathRegs>;

// A 32-bit datapath result: a value written back through a Reg, or a MAC operand.
struct PortId {
  enum class Kind : std::uint8_t { Store, MacA, MacB };
  Kind kind = Kind::Store;
  int slot = 0;  // Reg index for Store
  bool operator==(const PortId&) const = default;
  std::string name() const;
};

template <typename Net>
struct Port {
  PortId id;
  std::array<Net, kWordBits> bits{};
};

// Values of each output port, in port order.
using PortValues = std::vector<std::uint32_t>;

enum class CellKind : std::uint8_t { Input, Const, And, Or, Xor, Not, Mux, Sum3, Carry3 };
const char* to_string(CellKind k);

// Mux: in[0] selects in[1] when 1, in[2] when 0. Sum3/Carry3 are the two halves
// of a full adder over in[0..2].
struct Cell {
  CellKind kind = CellKind::Const;
  std::array<int, 3> in{-1, -1, -1};
  std::uint32_t value = 0;  // Input: bit index (reg * 32 + bit); Const: 0 or 1
  int arity() const;
  bool operator==(const Cell&) const = default;
};

bool eval_cell(CellKind k, bool a, bool b, bool c);

struct RtlNetlist {
  std::vector<Cell> cells;  // topological: inputs precede users
  std::vector<Port<int>> outputs;
  std::array<int, kDatapathRegs> reg_bindings{-1, -1, -1};  // array ref bound to each Reg

  std::size_t logic_cells() const;  // cells other than inputs and constants
  std::size_t mac_ops() const;
};

PortValues evaluate(const RtlNetlist& n, const RegValues& regs);

// Net numbering: 0..95 are Reg bits, 96/97 the constants 0/1, LUT outputs follow.
inline constexpr int kNetConst0 = kInputBits;
inline constexpr int kNetConst1 = kInputBits + 1;
inline constexpr int kFirstLutNet = kInputBits + 2;

struct Lut {
  std::uint16_t truth = 0;  // bit (in0 + 2*in1 + 4*in2 + 8*in3)
  std::array<int, 4> inputs{-1, -1, -1, -1};
  int output = -1;
  bool operator==(const Lut&) const = default;
};

struct LutNetlist {
  std::vector<Lut> luts;  // topological
  std::vector<Port<int>> outputs;
  std::array<int, kDatapathRegs> reg_bindings{-1, -1, -1};
  int depth = 0;  // LUT levels on the longest path

  std::size_t wires() const;  // output bits driven straight from a Reg bit
  std::size_t used_inputs() const;
  std::size_t mac_ops() const;
};

bool lut_output(const Lut& l, const std::vector<std::uint8_t>& nets);
PortValues evaluate(const LutNetlist& n, const RegValues& regs);

// `lut <id> <hex> <in0..in3> -> <out>`, `wire <src> -> <dst>`, `mac <a> <b> -> acc`.
std::string format_netlist(const LutNetlist& n);

}  // namespace warp
