#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "warp/assembler.hpp"
#include "warp/warp.hpp"

using namespace warp;
using Catch::Approx;

namespace {

const WarpOutcome& outcome(const std::string& name) {
  static std::map<std::string, WarpOutcome> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, warp_detailed(testing::bench(name).program(), WarpSettings{}, name)).first;
  return it->second;
}

std::vector<std::string> eligible_names() {
  std::vector<std::string> v;
  for (const auto& b : testing::corpus())
    if (b.eligible_by_design()) v.push_back(b.name);
  return v;
}

// Columns per request: ceil(luts / height) first come first served, then the
// spare columns in proportion to each grant, the remainder one at a time.
std::vector<int> columns_oracle(const std::vector<std::size_t>& req, int width, int height) {
  std::vector<int> got(req.size(), 0);
  int left = width, granted = 0;
  for (std::size_t i = 0; i < req.size(); ++i) {
    int need = static_cast<int>((req[i] + static_cast<std::size_t>(height) - 1) / static_cast<std::size_t>(height));
    if (need < 1) need = 1;
    if (need > left) continue;
    got[i] = need;
    left -= need;
    granted += need;
  }
  if (!granted) return got;
  const int spare = left;
  std::vector<int> extra(req.size(), 0);
  for (std::size_t i = 0; i < req.size(); ++i) extra[i] = got[i] ? spare * got[i] / granted : 0;
  for (std::size_t i = 0; i < req.size(); ++i) left -= extra[i];
  for (std::size_t i = 0; i < req.size(); ++i) {
    got[i] += extra[i];
    if (got[i] && left > 0) {
      ++got[i];
      --left;
    }
  }
  return got;
}

}  // namespace

TEST_CASE("every eligible kernel warps and every ineligible one is refused for its reason") {
  for (const auto& b : testing::corpus()) {
    INFO(b.name);
    const WarpReport& r = outcome(b.name).report;
    if (b.eligible_by_design()) {
      CHECK(r.warped);
      CHECK(r.equivalent);
      CHECK(r.speedup > 1.0);
      CHECK_FALSE(r.partition.rejection.has_value());
    } else {
      CHECK_FALSE(r.warped);
      REQUIRE(r.partition.rejection.has_value());
      CHECK(r.partition.rejection->stage == "partition");
      CHECK(r.partition.rejection->reason == b.expected);
      CHECK(r.speedup == 1.0);
      CHECK(r.recomputed_speedup() == 1.0);
      CHECK(r.t_warped == r.t_baseline);
    }
  }
}

TEST_CASE("unpatching restores the original binary byte for byte") {
  for (const auto& name : eligible_names()) {
    INFO(name);
    const auto& o = outcome(name);
    REQUIRE(o.patched.has_value());
    const Program original = testing::bench(name).program();
    CHECK(to_binary(unpatch(*o.patched)) == to_binary(original));
    CHECK(o.patched->program.at(o.patched->header_pc) ==
          Instruction{Opcode::Jmp, 0, 0, 0, static_cast<std::int32_t>(o.patched->stub_start)});
    CHECK(o.patched->program.text.back() ==
          Instruction{Opcode::Jmp, 0, 0, 0, static_cast<std::int32_t>(o.patched->exit_pc)});
    CHECK(o.patched->program.data == original.data);
  }
}

TEST_CASE("the warped run never executes the loop body and its cycle accounting adds up") {
  for (const auto& name : eligible_names()) {
    INFO(name);
    const auto& o = outcome(name);
    const PatchedProgram& pp = *o.patched;
    const LoopRegion& region = o.partition->region;
    WclaDevice dev(o.partition->wcla);
    RunOptions opt;
    opt.device = &dev;
    std::uint64_t total = 0, idle = 0, inside = 0;
    opt.observer = [&](const TraceEvent& e) {
      total += e.cycles;
      if (e.pc > region.start && e.pc <= region.end) ++inside;
      if (e.pc == pp.start_pc || e.pc == pp.poll_pc || e.pc == pp.poll_pc + 4) idle += e.cycles;
    };
    const RunResult rr = run(pp.program, LatencyTable{}, opt);
    CHECK(inside == 0);
    CHECK(rr.final_state.halted);

    const CoRunResult co = co_run(pp, o.partition->wcla, WarpSettings{});
    CHECK(co.wall_cycles == co.run.total_cycles);
    CHECK(co.run.total_cycles == total);
    CHECK(co.idle_cycles == idle);
    CHECK(co.starts == dev.starts());
    CHECK(co.hw_cycles == dev.hw_cycles());

    const WarpReport& r = o.report;
    const WarpSettings s;
    CHECK(r.breakdown.sw_cycles + r.breakdown.idle_cycles == total);
    CHECK(r.breakdown.idle_cycles == idle);
    CHECK(r.breakdown.overhead_cycles == s.overhead.config_cycles + s.overhead.invoke_cycles * co.starts);
    CHECK(r.breakdown.starts >= 1);
    const double f = static_cast<double>(s.energy.cpu_clock_hz);
    CHECK(r.t_baseline == Approx(static_cast<double>(r.baseline_cycles) / f).epsilon(1e-12));
    CHECK(r.t_warped == Approx(static_cast<double>(total + r.breakdown.overhead_cycles) / f).epsilon(1e-12));
    CHECK(r.speedup == Approx(r.t_baseline / r.t_warped).epsilon(1e-12));
    CHECK(std::abs(r.speedup - r.recomputed_speedup()) < 1e-9);
    CHECK(r.kernel_cycles <= r.baseline_cycles);
    CHECK(r.t_nonkernel == Approx(static_cast<double>(r.baseline_cycles - r.kernel_cycles) / f).epsilon(1e-12));
    // Amdahl bound: the warped run cannot be faster than the code left on the processor
    CHECK(r.t_warped >= r.t_nonkernel * 0.5);
    CHECK(r.energy_after.reduction_vs_baseline == Approx(1.0 - r.energy_after.e_total / r.energy_before.e_total));
  }
}

TEST_CASE("the patched binary stays transparent on fresh data") {
  for (const auto& name : eligible_names()) {
    INFO(name);
    const Benchmark& b = testing::bench(name);
    const auto& o = outcome(name);
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      PatchedProgram pp = *o.patched;
      const Program fresh = b.program(CpuFeatures{}, seed);
      pp.program.data = fresh.data;
      const CoRunResult co = co_run(pp, o.partition->wcla, WarpSettings{});
      REQUIRE(co.fault.empty());
      REQUIRE(co.run.final_state.halted);
      CHECK(co.run.final_state.data_mem == *reference_memory(b, fresh));
    }
  }
}

TEST_CASE("the stub saves and restores its scratch register") {
  const Program p = assemble(
      ".data\nsrc: .space 400\nout: .space 4\n.text\n"
      "  li r9, 12345\n  li r1, src\n  li r2, out\n  li r7, 0\n"
      "loop:\n  lw r4, 0(r1)\n  add r7, r7, r4\n  addi r1, r1, 4\n  blt r1, r2, loop\n"
      "  sw r7, 0(r2)\n  sw r9, -4(r2)\n  halt\n");
  WarpSettings s;
  s.overhead.config_cycles = 0;
  const WarpOutcome o = warp_detailed(p, s, "scratch");
  REQUIRE(o.report.warped);
  CHECK(o.report.equivalent);
  const int rt = o.patched->scratch_reg;
  CHECK(rt != 9);
  CHECK(rt != 2);
}

TEST_CASE("unreachable device windows and unprofitable loops are refused") {
  const Program tiny = assemble(
      ".data\nsrc: .space 16\ndst: .space 16\n.text\n"
      "  li r1, src\n  li r2, dst\n  li r3, 0\n  li r4, 4\n"
      "loop:\n  lw r5, 0(r1)\n  addi r5, r5, 1\n  sw r5, 0(r2)\n  addi r1, r1, 4\n  addi r2, r2, 4\n"
      "  addi r3, r3, 1\n  blt r3, r4, loop\n  halt\n");
  const WarpReport r = warp::warp(tiny, WarpSettings{}, "tiny");
  CHECK_FALSE(r.warped);
  REQUIRE(r.partition.rejection.has_value());
  CHECK(r.partition.rejection->stage == "profitability");
  CHECK(r.speedup == 1.0);

  WarpSettings forced;
  forced.profitability_check = false;
  const WarpReport f = warp::warp(tiny, forced, "tiny");
  CHECK(f.warped);
  CHECK(f.speedup < 1.0);
  CHECK(f.equivalent);

  WarpSettings far;
  far.mmio_base = 0x40000000u;
  const WarpReport u = warp::warp(tiny, far, "tiny");
  REQUIRE(u.partition.rejection.has_value());
  CHECK(u.partition.rejection->stage == "patch");

  const auto& o = outcome("matmul");
  WclaConfig moved = o.partition->wcla;
  moved.mmio_base = 0x00800000u;
  CHECK_THROWS_AS(patch_binary(testing::bench("matmul").program(), o.partition->region, moved), RelocationError);
}

TEST_CASE("a program without loops has no hot region") {
  const WarpReport r = warp::warp(assemble("li r1, 1\nhalt\n"), WarpSettings{}, "flat");
  CHECK_FALSE(r.warped);
  CHECK_FALSE(r.partition.hot_region);
  REQUIRE(r.partition.rejection.has_value());
  CHECK(r.partition.rejection->stage == "profile");
}

TEST_CASE("a runaway baseline is an error") {
  WarpSettings s;
  s.cycle_limit = 1000;
  CHECK_THROWS(warp::warp(assemble("loop: jmp loop\n"), s, "spin"));
}

TEST_CASE("a fabric too small for the netlist is a capacity rejection") {
  FabricModel tiny;
  tiny.width = 1;
  tiny.height = 4;
  const WarpOutcome o = warp_detailed(testing::bench("fir").program(), WarpSettings{}, "fir", tiny);
  REQUIRE(o.report.partition.rejection.has_value());
  CHECK(o.report.partition.rejection->stage == "cad");
  CHECK(o.report.partition.rejection->reason == RejectReason::RegionTooLarge);
}

TEST_CASE("column shares follow the allocation rule") {
  FabricModel m;
  CHECK(allocate_columns({154, 77, 77}, m) == std::vector<int>{11, 5, 0});
  CHECK(allocate_columns({}, m).empty());
  CHECK(allocate_columns({0}, m) == std::vector<int>{16});
  CHECK(allocate_columns({1000}, m) == std::vector<int>{0});
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    FabricModel f;
    f.width = 1 + static_cast<int>(rng() % 20);
    f.height = 1 + static_cast<int>(rng() % 20);
    std::vector<std::size_t> req(rng() % 6);
    for (auto& q : req) q = rng() % 200;
    const auto got = allocate_columns(req, f);
    REQUIRE(got == columns_oracle(req, f.width, f.height));
    int sum = 0;
    for (std::size_t k = 0; k < req.size(); ++k) {
      sum += got[k];
      if (got[k]) REQUIRE(static_cast<std::size_t>(got[k]) * static_cast<std::size_t>(f.height) >= req[k]);
    }
    REQUIRE(sum <= f.width);
    if (std::any_of(got.begin(), got.end(), [](int c) { return c > 0; })) REQUIRE(sum == f.width);
  }
}

TEST_CASE("one processor through the multi-processor flow matches the single flow") {
  for (const char* name : {"fir", "brev", "indirect"}) {
    INFO(name);
    const Program p = testing::bench(name).program();
    const MultiReport m = warp_multi({p}, WarpSettings{}, {name});
    const WarpReport& single = outcome(name).report;
    REQUIRE(m.cpus.size() == 1);
    const WarpReport& r = m.cpus[0];
    CHECK(m.service_log == std::vector<int>{0});
    CHECK(r.warped == single.warped);
    CHECK(r.baseline_cycles == single.baseline_cycles);
    CHECK(r.breakdown.sw_cycles == single.breakdown.sw_cycles);
    CHECK(r.breakdown.idle_cycles == single.breakdown.idle_cycles);
    CHECK(r.breakdown.hw_cycles == single.breakdown.hw_cycles);
    CHECK(r.speedup == single.speedup);
    CHECK(r.partition.critical_path_ns == single.partition.critical_path_ns);
  }
}

TEST_CASE("several processors share the fabric in service order") {
  const std::vector<Program> ps = {testing::bench("matmul").program(), testing::bench("fir").program(),
                                   testing::bench("crc").program(), testing::bench("divloop").program()};
  const MultiReport m = warp_multi(ps, WarpSettings{});
  CHECK(m.service_log == std::vector<int>{0, 1, 2, 3});
  REQUIRE(m.cpus.size() == 4);
  int used = 0;
  for (int c : m.columns) used += c;
  CHECK(used <= WarpSettings{}.fabric.width);
  CHECK(m.columns[3] == 0);
  CHECK_FALSE(m.cpus[3].warped);
  for (std::size_t i = 0; i < 3; ++i) {
    INFO(i);
    const auto& r = m.cpus[i];
    if (r.warped) {
      CHECK(r.equivalent);
      CHECK(r.partition.fabric_columns == m.columns[i]);
      CHECK(r.partition.luts <= static_cast<std::size_t>(m.columns[i] * WarpSettings{}.fabric.height));
    } else {
      REQUIRE(r.partition.rejection.has_value());
    }
  }
  CHECK_THROWS(warp_multi({}, WarpSettings{}));
  CHECK_THROWS(warp_multi(ps, WarpSettings{}, {"just one"}));
}
