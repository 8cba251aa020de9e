#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "support.hpp"
#include "warp/cpu.hpp"
#include "warp/profiler.hpp"

using namespace warp;

namespace {

TraceEvent taken_back(std::uint32_t pc, std::uint32_t target) {
  return TraceEvent{pc, Opcode::Bne, true, target, 2};
}

// Exact taken-backward-branch counts from a full trace.
std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> exact_counts(const std::vector<TraceEvent>& trace) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> m;
  for (const auto& ev : trace)
    if (ev.taken && *ev.taken && ev.next_pc < ev.pc) ++m[{ev.pc, ev.next_pc}];
  return m;
}

}  // namespace

TEST_CASE("only taken backward branches are counted") {
  ProfileCache c;
  c.observe(TraceEvent{0x40, Opcode::Bne, false, 0x44, 1});  // not taken
  c.observe(TraceEvent{0x40, Opcode::Beq, true, 0x80, 2});   // forward
  c.observe(TraceEvent{0x40, Opcode::Jmp, std::nullopt, 0x10, 2});  // unconditional
  c.observe(TraceEvent{0x40, Opcode::Add, std::nullopt, 0x44, 1});
  CHECK(c.entries().empty());
  c.observe(taken_back(0x40, 0x10));
  c.observe(taken_back(0x40, 0x10));
  REQUIRE(c.entries().size() == 1);
  CHECK(c.entries()[0] == ProfileEntry{0x10, 0x40, 2});
}

TEST_CASE("seventeen distinct loops in a sixteen-entry cache evict exactly once") {
  ProfileCache c(16);
  for (std::uint32_t i = 0; i < 17; ++i)
    for (std::uint32_t k = 0; k <= i; ++k) c.observe(taken_back(0x1000 + 8 * i, 0x100 + 8 * i));
  CHECK(c.evictions() == 1);
  CHECK(c.entries().size() == 16);
  // the loop seen once is the victim; the newcomer takes its slot
  for (const auto& e : c.entries()) CHECK(e.branch_pc != 0x1000);
}

TEST_CASE("ties evict the lowest slot") {
  ProfileCache c(2);
  c.observe(taken_back(0x20, 0x10));
  c.observe(taken_back(0x40, 0x30));
  c.observe(taken_back(0x60, 0x50));
  REQUIRE(c.entries().size() == 2);
  CHECK(c.entries()[0].branch_pc == 0x60);
  CHECK(c.entries()[1].branch_pc == 0x40);
}

TEST_CASE("counters saturate") {
  ProfileCache c(1);
  for (int i = 0; i < 70000; ++i) c.observe(taken_back(0x20, 0x10));
  CHECK(c.entries()[0].count == ProfileCache::kMaxCount);
}

TEST_CASE("capacity must be positive") {
  CHECK_THROWS_AS(ProfileCache(0), std::invalid_argument);
  CHECK_THROWS(top_regions(ProfileCache{}, 0));
}

TEST_CASE("random event streams match a least-frequently-used model") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 50; ++round) {
    const std::size_t cap = 1 + rng() % 8;
    ProfileCache c(cap);
    std::vector<ProfileEntry> model;
    std::uint64_t model_evictions = 0;
    for (int i = 0; i < 2000; ++i) {
      const std::uint32_t loop = static_cast<std::uint32_t>(rng() % 12);
      const bool taken = rng() % 4 != 0;
      const TraceEvent ev{0x400 + 16 * loop, Opcode::Blt, taken, taken ? 0x100 + 16 * loop : 0x404 + 16 * loop, 1};
      c.observe(ev);
      if (!taken) continue;
      bool hit = false;
      for (auto& e : model)
        if (e.branch_pc == ev.pc) {
          ++e.count;
          hit = true;
        }
      if (hit) continue;
      if (model.size() < cap) {
        model.push_back({ev.next_pc, ev.pc, 1});
        continue;
      }
      std::size_t v = 0;
      for (std::size_t k = 1; k < model.size(); ++k)
        if (model[k].count < model[v].count) v = k;
      model[v] = {ev.next_pc, ev.pc, 1};
      ++model_evictions;
    }
    REQUIRE(std::vector<ProfileEntry>(c.entries().begin(), c.entries().end()) == model);
    REQUIRE(c.evictions() == model_evictions);
  }
}

TEST_CASE("ranking orders by count then target address") {
  ProfileCache c(8);
  for (int i = 0; i < 3; ++i) c.observe(taken_back(0x90, 0x50));
  for (int i = 0; i < 3; ++i) c.observe(taken_back(0x80, 0x20));
  for (int i = 0; i < 5; ++i) c.observe(taken_back(0xa0, 0x60));
  c.observe(taken_back(0xb0, 0x70));
  const auto top = top_regions(c, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == HotRegion{0x60, 0xa0, 5, 1});
  CHECK(top[1] == HotRegion{0x20, 0x80, 3, 2});
  CHECK(top[2] == HotRegion{0x50, 0x90, 3, 3});
  CHECK(top_regions(c, 10).size() == 4);
  CHECK(format_profile(std::span(top).subspan(0, 1)) == "target,branch_pc,count,rank\n0x00000060,0x000000a0,5,1\n");
}

TEST_CASE("profiling a corpus run reproduces exact loop counts") {
  for (const auto& b : testing::corpus()) {
    INFO(b.name);
    RunOptions opt;
    opt.record_trace = true;
    const auto r = run(b.program(), LatencyTable{}, opt);
    const auto exact = exact_counts(r.trace);
    ProfileCache c(64);
    for (const auto& ev : r.trace) c.observe(ev);
    REQUIRE(c.entries().size() == exact.size());
    for (const auto& e : c.entries()) {
      const auto n = exact.at({e.branch_pc, e.branch_target});
      CHECK(e.count == std::min<std::uint64_t>(n, ProfileCache::kMaxCount));
    }
    if (!exact.empty()) {
      std::uint64_t best = 0;
      for (const auto& [k, n] : exact) best = std::max(best, std::min<std::uint64_t>(n, ProfileCache::kMaxCount));
      CHECK(top_regions(c, 1)[0].count == best);
    }
  }
}

TEST_CASE("the functional observe leaves its argument untouched") {
  const ProfileCache empty;
  const ProfileCache one = observe(empty, taken_back(0x20, 0x10));
  CHECK(empty.entries().empty());
  CHECK(one.entries().size() == 1);
}
