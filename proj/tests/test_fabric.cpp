#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "support.hpp"
#include "warp/cpu.hpp"
#include "warp/decompile.hpp"
#include "warp/error.hpp"
#include "warp/fabric.hpp"
#include "warp/profiler.hpp"
#include "warp/synth.hpp"

using namespace warp;

namespace {

// `count` 4-input XOR LUTs reading Reg0 bits, each driving one output bit.
LutNetlist xor_netlist(int count, bool distinct_inputs) {
  LutNetlist n;
  for (int i = 0; i < count; ++i) {
    Lut l;
    l.truth = 0x6996;
    for (int k = 0; k < 4; ++k) l.inputs[k] = distinct_inputs ? (4 * i + k) % kInputBits : k;
    l.output = kFirstLutNet + i;
    n.luts.push_back(l);
  }
  Port<int> p;
  p.bits.fill(kNetConst0);
  for (int i = 0; i < count && i < kWordBits; ++i) p.bits[i] = kFirstLutNet + i;
  n.outputs.push_back(p);
  n.reg_bindings = {0, -1, -1};
  n.depth = count ? 1 : 0;
  return n;
}

std::vector<RegValues> random_regs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> any;
  std::vector<RegValues> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({any(rng), any(rng), any(rng)});
  return v;
}

LutNetlist corpus_netlist(const Benchmark& b) {
  const Program p = b.program();
  ProfileCache cache;
  RunOptions opt;
  opt.observer = [&](const TraceEvent& ev) { cache.observe(ev); };
  run(p, LatencyTable{}, opt);
  return tech_map(optimize(synthesize(decompile(extract_region(p, top_regions(cache, 1)[0])))));
}

}  // namespace

TEST_CASE("a pure wire through three segments takes 1.5 ns") {
  FabricConfig c;
  const RoutingGraph g(c.model);
  const IoPin in{0, 0}, out{1, 0};
  c.inputs = {InputBinding{0, in}};
  c.outputs = {OutputBinding{PortId{}, 0, 0, out}};
  c.routes = {NetRoute{0, g.ipad(in), {}, {RouteSink{g.opad(out), 3}}}};
  CHECK(timing(c) == Catch::Approx(1.5));
}

TEST_CASE("a single LUT with abutting pins takes 1.0 ns") {
  FabricConfig c;
  const RoutingGraph g(c.model);
  const IoPin in{0, 0}, out{0, 0};
  c.luts = {ConfiguredLut{{0, 0}, 0xaaaa}};
  c.lut_nets = {kFirstLutNet};
  c.inputs = {InputBinding{0, in}};
  c.outputs = {OutputBinding{PortId{}, 0, kFirstLutNet, out}};
  c.routes = {NetRoute{0, g.ipad(in), {}, {RouteSink{g.ipin({0, 0}, 0), 0}}},
              NetRoute{kFirstLutNet, g.opin({0, 0}), {}, {RouteSink{g.opad(out), 0}}}};
  CHECK(timing(c) == Catch::Approx(1.0));
}

TEST_CASE("placing one LUT more than the fabric holds is a capacity error") {
  FabricModel m;
  m.width = 3;
  m.height = 2;
  CHECK_NOTHROW(place(xor_netlist(6, false), m));
  try {
    place(xor_netlist(7, false), m);
    FAIL("expected a capacity error");
  } catch (const CadError& e) {
    CHECK(e.kind() == CadError::Kind::CapacityExceeded);
  }
}

TEST_CASE("placement puts each LUT on its own site and outputs on distinct pads") {
  FabricModel m;
  m.width = 4;
  m.height = 4;
  const Placement pl = place(xor_netlist(16, true), m);
  std::set<std::pair<int, int>> sites;
  for (const auto& s : pl.lut_sites) {
    CHECK(s.x >= 0);
    CHECK(s.x < m.width);
    CHECK(s.y >= 0);
    CHECK(s.y < m.height);
    sites.insert({s.x, s.y});
  }
  CHECK(sites.size() == 16);
  std::set<std::pair<int, int>> pads;
  for (const auto& o : pl.outputs)
    if (!o.constant()) pads.insert({o.pin.position, o.pin.slot});
  CHECK(pads.size() == 16);
}

TEST_CASE("a 2x2 fabric with single-track channels routes a small netlist legally") {
  FabricModel m;
  m.width = 2;
  m.height = 2;
  m.channel_width = 1;
  // out0 = ~(in0 ^ in1) through a two-LUT chain
  LutNetlist n;
  n.luts = {Lut{0x6666, {0, 1, -1, -1}, kFirstLutNet}, Lut{0x5555, {kFirstLutNet, -1, -1, -1}, kFirstLutNet + 1}};
  Port<int> p;
  p.bits.fill(kNetConst0);
  p.bits[0] = kFirstLutNet + 1;
  n.outputs.push_back(p);
  n.depth = 2;
  const FabricConfig c = implement(n, m);
  CHECK(c.critical_path_ns >= 2.0);
  CHECK(overused_segments(c) == 0);
  for (const auto& r : random_regs(200, 3)) REQUIRE(simulate(c, r) == evaluate(n, r));
}

TEST_CASE("a saturated channel is unroutable") {
  FabricModel m;
  m.width = 2;
  m.height = 2;
  m.channel_width = 1;
  m.max_iterations = 5;
  try {
    implement(xor_netlist(4, true), m);
    FAIL("expected routing to fail");
  } catch (const CadError& e) {
    CHECK(e.kind() == CadError::Kind::Unroutable);
  }
}

TEST_CASE("pad positions run clockwise around the fabric") {
  FabricModel m;
  m.width = 3;
  m.height = 2;
  CHECK(m.perimeter() == 10);
  CHECK(pad_location(m, 0) == ClbCoord{-1, 0});
  CHECK(pad_location(m, 1) == ClbCoord{-1, 1});
  CHECK(pad_location(m, 2) == ClbCoord{0, 2});
  CHECK(pad_location(m, 4) == ClbCoord{2, 2});
  CHECK(pad_location(m, 5) == ClbCoord{3, 1});
  CHECK(pad_location(m, 7) == ClbCoord{2, -1});
  CHECK(pad_location(m, 9) == ClbCoord{0, -1});
}

TEST_CASE("routing graph edges stay inside the graph") {
  FabricModel m;
  m.width = 3;
  m.height = 3;
  m.channel_width = 2;
  const RoutingGraph g(m);
  for (std::size_t n = 0; n < g.size(); ++n)
    for (int t : g.fanout(static_cast<int>(n))) {
      REQUIRE(t >= 0);
      REQUIRE(static_cast<std::size_t>(t) < g.size());
    }
  CHECK(g.kind(g.chanx(0, 0, 1)) == RoutingGraph::Kind::ChanX);
  CHECK(g.kind(g.chany(3, 2, 0)) == RoutingGraph::Kind::ChanY);
  CHECK(g.kind(g.ipin({1, 1}, 3)) == RoutingGraph::Kind::Ipin);
  CHECK(g.is_track(g.chanx(2, 3, 0)));
  CHECK_FALSE(g.is_track(g.opin({0, 0})));
}

TEST_CASE("compute cycles round the critical path up to whole periods") {
  CHECK(compute_cycles(4.0, 4.0) == 1);
  CHECK(compute_cycles(4.01, 4.0) == 2);
  CHECK(compute_cycles(0.0, 4.0) == 1);
  CHECK(compute_cycles(59.5, 4.0) == 15);
  CHECK_THROWS(compute_cycles(1.0, 0.0));
}

TEST_CASE("invalid fabric models are refused") {
  FabricModel m;
  m.channel_width = 0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = FabricModel{};
  m.lut_delay_ns = 0;
  CHECK_THROWS_AS(place(xor_netlist(1, false), m), std::invalid_argument);
}

TEST_CASE("corpus netlists implement legally and simulate like the netlist") {
  for (const auto& b : testing::corpus()) {
    if (!b.eligible_by_design()) continue;
    INFO(b.name);
    const LutNetlist n = corpus_netlist(b);
    const FabricConfig c = implement(n, FabricModel{});
    CHECK(overused_segments(c) == 0);
    CHECK(c.critical_path_ns == Catch::Approx(timing(c)));
    CHECK(c.critical_path_ns >= n.depth * c.model.lut_delay_ns);
    CHECK(c.luts.size() == n.luts.size());
    CHECK(c.route_iterations >= 1);
    CHECK(c.route_iterations <= c.model.max_iterations);
    for (const auto& r : random_regs(300, 9)) REQUIRE(simulate(c, r) == evaluate(n, r));
    CHECK(implement(n, FabricModel{}) == c);

    const auto bits = to_bitstream(c);
    const FabricConfig back = from_bitstream(bits);
    CHECK(back == c);
    CHECK(to_bitstream(back) == bits);
    CHECK_FALSE(format_config(c).empty());
  }
}

TEST_CASE("malformed bitstreams are refused") {
  const FabricConfig c = implement(xor_netlist(3, false), FabricModel{});
  auto bits = to_bitstream(c);
  auto bad_magic = bits;
  bad_magic[0] ^= 0xff;
  CHECK_THROWS_AS(from_bitstream(bad_magic), CadError);
  auto trailing = bits;
  trailing.push_back(0);
  CHECK_THROWS_AS(from_bitstream(trailing), CadError);
  CHECK_THROWS(from_bitstream(std::span(bits).subspan(0, bits.size() / 2)));
}
