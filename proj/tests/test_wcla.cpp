#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "warp/assembler.hpp"
#include "warp/cpu.hpp"
#include "warp/profiler.hpp"
#include "warp/warp.hpp"
#include "warp/wcla.hpp"

using namespace warp;

namespace {

HotRegion hottest(const Program& p) {
  ProfileCache cache;
  RunOptions opt;
  opt.observer = [&](const TraceEvent& ev) { cache.observe(ev); };
  run(p, LatencyTable{}, opt);
  return top_regions(cache, 1).at(0);
}

Partition partition_of(const Program& p, bool overlap = false) {
  WarpSettings s;
  s.wcla_overlap = overlap;
  Partition part = analyze(p, hottest(p), s);
  build_hardware(part, s, s.fabric);
  return part;
}

// First processor state at the loop header.
CpuState state_at_entry(const Program& p, std::uint32_t header) {
  CpuState s = CpuState::initial(p);
  while (s.pc != header) step(s, p, LatencyTable{});
  return s;
}

const char* kCopy =
    ".data\nsrc: .space 256\ndst: .space 256\n.text\n"
    "  li r1, src\n  li r2, dst\n  li r3, 0\n  li r4, 64\n"
    "loop:\n  lw r5, 0(r1)\n  addi r5, r5, 7\n  sw r5, 0(r2)\n  addi r1, r1, 4\n  addi r2, r2, 4\n"
    "  addi r3, r3, 1\n  blt r3, r4, loop\n  halt\n";

}  // namespace

TEST_CASE("cross-clock delay rounds up") {
  CHECK(cpu_cycles_for(250, 85'000'000, 250'000'000) == 85);
  CHECK(cpu_cycles_for(1, 85'000'000, 250'000'000) == 1);
  CHECK(cpu_cycles_for(3, 85'000'000, 250'000'000) == 2);
  CHECK(cpu_cycles_for(0, 85'000'000, 250'000'000) == 0);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10'000; ++i) {
    const std::uint64_t hw = rng() % 100'000'000;
    const std::uint64_t cpu_hz = 1 + rng() % 500'000'000, hw_hz = 1 + rng() % 500'000'000;
    const std::uint64_t c = cpu_cycles_for(hw, cpu_hz, hw_hz);
    // smallest c with c * hw_hz >= hw * cpu_hz
    const auto need = static_cast<unsigned __int128>(hw) * cpu_hz;
    REQUIRE(static_cast<unsigned __int128>(c) * hw_hz >= need);
    if (c > 0) REQUIRE(static_cast<unsigned __int128>(c - 1) * hw_hz < need);
  }
  CHECK_THROWS(cpu_cycles_for(1, 0, 1));
}

TEST_CASE("per-iteration cycles add reads, compute and writes, or overlap reads with compute") {
  WclaConfig c;
  c.dadg = {DadgProgram{{}, Direction::Read}, DadgProgram{{}, Direction::Read}, DadgProgram{{}, Direction::ReadWrite}};
  c.compute_cycles = 2;
  CHECK(c.reads() == 3);
  CHECK(c.writes() == 1);
  CHECK(c.cycles_per_iteration() == 3 + 2 + 1);
  c.overlap = true;
  CHECK(c.cycles_per_iteration() == 3 + 1);
  c.compute_cycles = 7;
  CHECK(c.cycles_per_iteration() == 7 + 1);
  CHECK(hw_cycles_for(c, 10) == 80);
  CHECK(hw_cycles_for(c, 0) == 0);
}

TEST_CASE("configuration carries the loop's registers and timing") {
  const Program p = assemble(kCopy);
  const Partition part = partition_of(p);
  const WclaConfig& c = part.wcla;
  CHECK(c.dadg.size() == 2);
  CHECK(c.compute_cycles == compute_cycles(part.fabric.critical_path_ns, 4.0));
  CHECK(c.live_ins == part.cdfg.live_ins);
  CHECK(c.live_outs == part.cdfg.live_outs);
  CHECK_FALSE(c.mac.has_value());
  CHECK_THROWS(make_wcla_config(part.cdfg, part.fabric, 0));
}

TEST_CASE("the accelerator matches the decompiled loop on every eligible corpus kernel") {
  for (const auto& b : testing::corpus()) {
    if (!b.eligible_by_design()) continue;
    INFO(b.name);
    for (bool overlap : {false, true}) {
      const Program p = b.program();
      const Partition part = partition_of(p, overlap);
      const CpuState entry = state_at_entry(p, part.region.start);
      auto hw_mem = entry.data_mem;
      auto sw_mem = entry.data_mem;
      const HwRunResult hw = execute(part.wcla, entry.regs, hw_mem, p.data_base);
      const CdfgRunResult sw = interpret(part.cdfg, entry.regs, sw_mem, p.data_base);
      CHECK(hw_mem == sw_mem);
      CHECK(hw.iterations == sw.iterations);
      CHECK(hw.hw_cycles == hw.iterations * part.wcla.cycles_per_iteration());
      CHECK(hw.memory_reads == hw.iterations * part.wcla.reads());
      CHECK(hw.memory_writes == hw.iterations * part.wcla.writes());
      for (int r = 0; r < kNumRegs; ++r)
        if (part.wcla.live_outs & (1u << r)) CHECK(hw.final_regs[r] == sw.final_regs[r]);
      if (part.wcla.mac) CHECK(hw.accumulator == sw.final_regs[part.wcla.mac->reg]);
    }
  }
}

TEST_CASE("hardware cycles depend only on the trip count") {
  const Program p = testing::bench("fir").program();
  const Partition part = partition_of(p);
  CpuState entry = state_at_entry(p, part.region.start);
  auto mem1 = entry.data_mem;
  const auto first = execute(part.wcla, entry.regs, mem1, p.data_base);
  auto mem2 = testing::bench("fir").program(CpuFeatures{}, 4242).data;
  const auto second = execute(part.wcla, entry.regs, mem2, p.data_base);
  CHECK(first.hw_cycles == second.hw_cycles);
  CHECK(first.hw_cycles == hw_cycles_for(part.wcla, first.iterations));
}

TEST_CASE("out-of-range addresses fault with the iteration number") {
  const Program p = assemble(kCopy);
  const Partition part = partition_of(p);
  CpuState entry = state_at_entry(p, part.region.start);
  WclaConfig bad = part.wcla;
  bad.dadg[1].address.constant = p.data_base + static_cast<std::uint32_t>(p.data.size()) - 8;
  auto mem = entry.data_mem;
  try {
    execute(bad, entry.regs, mem, p.data_base);
    FAIL("expected a fault");
  } catch (const WclaFault& f) {
    CHECK(f.iteration() == 2);
  }
}

TEST_CASE("device handshake through the register window") {
  const Program p = assemble(kCopy);
  const Partition part = partition_of(p);
  CpuState cpu = state_at_entry(p, part.region.start);
  WclaDevice dev(part.wcla);
  CHECK(dev.read(mmio::kStatus, cpu) == mmio::kStatusDone);
  for (int r = 1; r < kNumRegs; ++r) dev.write(mmio::kRegWindow + 4 * r, cpu.regs[r], cpu);
  dev.write(mmio::kRegWindow, 99, cpu);
  CHECK(dev.read(mmio::kRegWindow, cpu) == 0);
  dev.write(mmio::kStart, 1, cpu);
  CHECK(dev.starts() == 1);
  CHECK(dev.read(mmio::kStatus, cpu) == 0);

  const std::uint64_t wait = cpu_cycles_for(dev.hw_cycles(), kDefaultCpuHz, kDefaultHwHz);
  CHECK(dev.done_at() == cpu.cycle_count + wait);
  dev.write(mmio::kStart, 1, cpu);
  CHECK(dev.starts() == 1);
  CHECK(dev.error());
  cpu.cycle_count += wait - 1;
  CHECK((dev.read(mmio::kStatus, cpu) & mmio::kStatusDone) == 0);
  cpu.cycle_count += 1;
  CHECK((dev.read(mmio::kStatus, cpu) & mmio::kStatusDone) != 0);
  CHECK(dev.read(mmio::kRegWindow + 4 * 3, cpu) == 64);
  CHECK(dev.iterations() == 64);
  for (int k = 0; k < 64; ++k) {
    const std::uint32_t addr = p.label("src") + 4 * k;
    CHECK(cpu.load_word(p.label("dst") + 4 * k) == cpu.load_word(addr) + 7);
  }
}

TEST_CASE("a faulting start reports the error bit") {
  const Program p = assemble(kCopy);
  const Partition part = partition_of(p);
  CpuState cpu = state_at_entry(p, part.region.start);
  WclaConfig bad = part.wcla;
  bad.dadg[0].address.constant = 0x100;
  WclaDevice dev(bad);
  dev.write(mmio::kStart, 1, cpu);
  CHECK(dev.error());
  CHECK_FALSE(dev.fault().empty());
  CHECK((dev.read(mmio::kStatus, cpu) & mmio::kStatusError) != 0);
}
