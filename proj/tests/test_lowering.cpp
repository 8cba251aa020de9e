#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "warp/assembler.hpp"
#include "warp/cpu.hpp"
#include "warp/lowering.hpp"

using namespace warp;

namespace {

constexpr CpuFeatures kNoShifter{false, true, true};
constexpr CpuFeatures kNoMultiplier{true, false, true};
constexpr CpuFeatures kNoDivider{true, true, false};

// Loads operands from data, applies one instruction, stores the result.
Program binary_op_program(const std::string& op, const CpuFeatures& f) {
  return assemble(".data\nops: .word 0, 0\nres: .space 4\n.text\n"
                  "  li r1, ops\n  lw r2, 0(r1)\n  lw r3, 4(r1)\n  " + op +
                      "\n  sw r4, 8(r1)\n  halt\n",
                  f);
}

void set_word(Program& p, std::size_t off, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) p.data[off + k] = static_cast<std::uint8_t>(v >> (8 * k));
}

std::uint32_t run_binary(Program& p, std::uint32_t a, std::uint32_t b) {
  set_word(p, 0, a);
  set_word(p, 4, b);
  auto r = testing::reference_run(p);
  REQUIRE(r.halted);
  return testing::word(r.mem, 8);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> operand_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> v = {
      {0, 0}, {1, 0}, {0, 1}, {0xffffffffu, 0xffffffffu}, {0x80000000u, 1}, {0x80000000u, 0xffffffffu},
      {0x7fffffffu, 2}, {12345, 0x80000000u}, {0xffffffffu, 1}};
  std::uniform_int_distribution<std::uint32_t> any;
  std::uniform_int_distribution<std::uint32_t> small(0, 0xffff);
  while (v.size() < n) {
    const auto pick = v.size() % 3;
    v.emplace_back(pick == 0 ? small(rng) : any(rng), pick == 1 ? small(rng) : any(rng));
  }
  return v;
}

}  // namespace

TEST_CASE("sll without a barrel shifter is a move plus n self-adds") {
  const Program p = assemble("sll r1, r2, 4\nhalt\n", kNoShifter);
  REQUIRE(p.text.size() == 6);
  CHECK(p.text[0] == Instruction{Opcode::Add, 1, 2, 0, 0});
  for (int k = 1; k <= 4; ++k) CHECK(p.text[k] == Instruction{Opcode::Add, 1, 1, 1, 0});
  CHECK(p.text[5].op == Opcode::Halt);
}

TEST_CASE("nothing changes when every unit is present") {
  const std::string src = "sll r1, r2, 3\nsrl r1, r1, 2\nsra r1, r1, 1\nmul r3, r1, r2\ndiv r4, r3, r2\nhalt\n";
  const Program full = assemble(src);
  const LoweringResult l = lower_with_map(full.text, CpuFeatures::all_on());
  CHECK(l.text == full.text);
  CHECK_FALSE(l.emitted_routines);
}

TEST_CASE("lowered multiply matches 32-bit multiplication on 10,000 pairs") {
  Program p = binary_op_program("mul r4, r2, r3", kNoMultiplier);
  for (const auto& i : p.text) REQUIRE(i.op != Opcode::Mul);
  for (auto [a, b] : operand_pairs(10'000, 7)) {
    INFO(a << " * " << b);
    REQUIRE(run_binary(p, a, b) == static_cast<std::uint32_t>(static_cast<std::uint64_t>(a) * b));
  }
}

TEST_CASE("lowered divide matches unsigned division on 10,000 pairs") {
  Program p = binary_op_program("div r4, r2, r3", kNoDivider);
  for (const auto& i : p.text) REQUIRE(i.op != Opcode::Div);
  for (auto [a, b] : operand_pairs(10'000, 11)) {
    INFO(a << " / " << b);
    REQUIRE(run_binary(p, a, b) == (b ? a / b : 0xffffffffu));
  }
}

TEST_CASE("lowered shifts match the shifter for every amount") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint32_t> any;
  for (int n = 0; n < 32; ++n) {
    const std::string amt = std::to_string(n);
    Program sll = binary_op_program("sll r4, r2, " + amt, kNoShifter);
    Program srl = binary_op_program("srl r4, r2, " + amt, kNoShifter);
    Program sra = binary_op_program("sra r4, r2, " + amt, kNoShifter);
    for (const auto& p : {sll, srl, sra})
      for (const auto& i : p.text) REQUIRE((i.op != Opcode::Sll && i.op != Opcode::Srl && i.op != Opcode::Sra));
    for (std::uint32_t a : {0u, 1u, 0x80000000u, 0xffffffffu, 0x7fffffffu, any(rng), any(rng), any(rng)}) {
      INFO(a << " by " << n);
      REQUIRE(run_binary(sll, a, 0) == a << n);
      REQUIRE(run_binary(srl, a, 0) == a >> n);
      REQUIRE(run_binary(sra, a, 0) == static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> n));
    }
  }
}

TEST_CASE("branch targets are relocated across expanded instructions") {
  const std::string src =
      "  li r1, 0\n  li r2, 5\n  li r3, 3\nloop:\n  mul r4, r3, r3\n  addi r1, r1, 1\n  blt r1, r2, loop\n"
      "  sll r5, r4, 2\n  halt\n";
  const Program lowered = assemble(src, CpuFeatures::all_off());
  lowered.validate();
  const auto r = testing::reference_run(lowered);
  REQUIRE(r.halted);
  CHECK(r.regs[1] == 5);
  CHECK(r.regs[4] == 9);
  CHECK(r.regs[5] == 36);

  const Program orig = assemble(src);
  const LoweringResult l = lower_with_map(orig.text, CpuFeatures::all_off());
  REQUIRE(l.new_address.size() == orig.text.size());
  for (std::size_t i = 1; i < l.new_address.size(); ++i) CHECK(l.new_address[i] > l.new_address[i - 1]);
  const std::uint32_t loop_new = l.new_address[orig.label("loop") / 4];
  const std::uint32_t branch_new = l.new_address[5];
  REQUIRE(orig.text[5].op == Opcode::Blt);
  CHECK(static_cast<std::uint32_t>(l.text[branch_new / 4].imm) == loop_new);
}

TEST_CASE("lowering refuses programs that use the reserved registers") {
  CHECK_THROWS(assemble("mul r10, r1, r2\nhalt\n", kNoMultiplier));
  CHECK_THROWS(assemble("li r12, 3\nmul r1, r2, r3\nhalt\n", kNoMultiplier));
  CHECK_NOTHROW(assemble("li r12, 3\nmul r1, r2, r3\nhalt\n"));
}

TEST_CASE("every corpus program computes the same memory with and without optional units") {
  for (const auto& b : testing::corpus()) {
    INFO(b.name);
    const auto full = testing::reference_run(b.program(CpuFeatures::all_on()));
    const auto bare = testing::reference_run(b.program(CpuFeatures::all_off()));
    REQUIRE(full.halted);
    REQUIRE(bare.halted);
    CHECK(full.mem == bare.mem);
    CHECK(bare.steps >= full.steps);
  }
}
