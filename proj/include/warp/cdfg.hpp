// cdfg.hpp - control-dataflow graph of a single hot loop.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warp/isa.hpp"

namespace warp {

using RegFile = std::array<std::uint32_t, kNumRegs>;

// constant + sum(reg[r] * value of r at loop entry) + iter * k, modulo 2^32.
struct Affine {
  std::uint32_t constant = 0;
  std::array<std::uint32_t, kNumRegs> reg{};
  std::uint32_t iter = 0;

  static Affine of_const(std::uint32_t c) { Affine a; a.constant = c; return a; }
  static Affine of_reg(int r) { Affine a; if (r != 0) a.reg[r] = 1; return a; }

  bool is_const() const;
  bool invariant() const { return iter == 0; }
  bool uses_reg(int r) const { return reg[r] != 0; }
  bool uses_any_reg() const;
  std::uint32_t eval(const RegFile& entry, std::uint32_t k) const;

  Affine operator+(const Affine& o) const;
  Affine operator-(const Affine& o) const;
  Affine scaled(std::uint32_t c) const;
  bool operator==(const Affine&) const = default;
  std::string str() const;
};

enum class NodeKind : std::uint8_t { Const, Input, Load, Store, Alu, Mac };

enum class AluOp : std::uint8_t { Add, Sub, And, Or, Xor, Sll, Srl, Sra, Mul, Div, Lt, Eq, Select };

const char* to_string(NodeKind k);
const char* to_string(AluOp op);

struct CdfgNode {
  NodeKind kind = NodeKind::Const;
  AluOp op = AluOp::Add;
  std::array<int, 3> args{-1, -1, -1};
  std::uint32_t value = 0;  // Const value, or shift amount
  int ref = -1;             // Load / Store
  Affine input;             // Input: runtime value (loop invariant or induction)

  int arity() const;
};

enum class Direction : std::uint8_t { Read, Write, ReadWrite };
const char* to_string(Direction d);

// Regular access: address at iteration k is `address.eval(entry, k)`; stride is address.iter.
struct ArrayRef {
  Affine address;
  Direction dir = Direction::Read;
  std::int32_t stride() const { return static_cast<std::int32_t>(address.iter); }
  bool reads() const { return dir != Direction::Write; }
  bool writes() const { return dir != Direction::Read; }
};

struct Induction {
  int reg = 0;
  Affine entry;  // value at loop entry (register or known constant)
  std::int32_t step = 0;
};

// Bottom-tested loop: iteration k (0-based) is followed by another iteration
// while compare(counter(k), bound) holds, where counter(k) = counter.eval(entry, k).
struct LoopHeader {
  enum class Compare : std::uint8_t { CounterLess, BoundLess, NotEqual };
  int control_reg = 0;
  std::int32_t step = 0;
  Affine counter;
  Affine bound;
  Compare compare = Compare::CounterLess;
  std::optional<std::uint32_t> constant_trips;
};

struct Accumulator {
  int reg = 0;
  Affine init;  // entry value
  int mac_node = -1;
};

struct Cdfg {
  std::vector<CdfgNode> nodes;  // topologically ordered: args precede users
  std::vector<ArrayRef> array_refs;
  std::vector<int> stores;  // Store node per written ref
  std::optional<Accumulator> accumulator;
  std::vector<Induction> inductions;
  LoopHeader header;
  std::uint16_t live_ins = 0;   // registers whose entry values the hardware needs
  std::uint16_t live_outs = 0;  // registers the hardware hands back

  std::vector<std::pair<int, int>> edges() const;
  const CdfgNode* mac() const {
    return accumulator ? &nodes[static_cast<std::size_t>(accumulator->mac_node)] : nullptr;
  }
};

// Select returns b when a is non-zero, else c. Shifts use `shamt`.
std::uint32_t eval_alu(AluOp op, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t shamt);

// Number of iterations the loop executes, or nullopt when the bottom test would
// wrap around the 32-bit range (the hardware refuses such loops at run time).
std::optional<std::uint64_t> trip_count(const LoopHeader& header, const RegFile& entry);

struct IterationValues {
  std::array<std::uint32_t, 3> stores{};  // value written to each ref slot (if it writes)
  std::uint32_t mac_a = 0;
  std::uint32_t mac_b = 0;
};

// Evaluates one iteration's datapath from the values loaded for each ref slot.
IterationValues evaluate_iteration(const Cdfg& g, const std::array<std::uint32_t, 3>& loaded,
                                   const RegFile& entry = {}, std::uint32_t k = 0);

struct CdfgRunResult {
  std::uint64_t iterations = 0;
  RegFile final_regs{};  // entry registers with inductions and accumulator updated
};

// Runs every iteration of the loop against `data_mem` (based at data_base).
CdfgRunResult interpret(const Cdfg& g, const RegFile& entry, std::vector<std::uint8_t>& data_mem,
                        std::uint32_t data_base = kDataBase);

// `node <id> <kind> <args...>` and `edge <src> <dst>` lines.
std::string format_cdfg(const Cdfg& g);

}  // namespace warp
