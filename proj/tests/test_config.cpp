#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "warp/config.hpp"

using namespace warp;

namespace {

void check_line_error(const std::string& text, int line) {
  try {
    parse_settings(text);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("line " + std::to_string(line) + ":", 0) == 0);
  }
}

}  // namespace

TEST_CASE("empty text gives the defaults") {
  CHECK(parse_settings("") == WarpSettings{});
  CHECK(parse_settings("# nothing\n\n   \n") == WarpSettings{});
}

TEST_CASE("every key is recognised") {
  const WarpSettings s = parse_settings(
      "barrel_shifter = off\nmultiplier = no\ndivider = false\n"
      "latency.alu1 = 2\nlatency.mul3 = 4\nlatency.div = 33\nlatency.load = 3\nlatency.store = 2\n"
      "latency.branch_taken = 3\nlatency.branch_not_taken = 2\nlatency.branch_long = 5\n"
      "latency.long_branch_mask = 0x10000\nlatency.jump = 3\nlatency.mmio = 4\n"
      "fabric.width = 8\nfabric.height = 12\nfabric.channel_width = 6\nfabric.io_per_position = 2\n"
      "fabric.lut_delay_ns = 1.25\nfabric.segment_delay_ns = 0.4\nfabric.max_iterations = 40\n"
      "energy.p_mb_idle = 0.05\nenergy.p_mb_active = 0.2\nenergy.p_hw = 0.3\nenergy.p_static = 0.01\n"
      "energy.cpu_clock_hz = 100000000\nenergy.hw_clock_hz = 200000000\nenergy.active_time = shared\n"
      "overhead.config_cycles = 500\noverhead.invoke_cycles = 7\ncpu_count = 4\ncycle_limit = 1000\n"
      "profiler.capacity = 8\nwcla.overlap = on\nprofitability_check = 0\nmmio_base = 0xFFFE0000\n");
  CHECK(s.features == CpuFeatures::all_off());
  CHECK(s.latencies.alu1 == 2);
  CHECK(s.latencies.mul3 == 4);
  CHECK(s.latencies.div == 33);
  CHECK(s.latencies.load == 3);
  CHECK(s.latencies.store == 2);
  CHECK(s.latencies.branch_taken == 3);
  CHECK(s.latencies.branch_not_taken == 2);
  CHECK(s.latencies.branch_long == 5);
  CHECK(s.latencies.long_branch_mask == 0x10000);
  CHECK(s.latencies.jump == 3);
  CHECK(s.latencies.mmio == 4);
  CHECK(s.fabric.width == 8);
  CHECK(s.fabric.height == 12);
  CHECK(s.fabric.channel_width == 6);
  CHECK(s.fabric.io_per_position == 2);
  CHECK(s.fabric.lut_delay_ns == 1.25);
  CHECK(s.fabric.segment_delay_ns == 0.4);
  CHECK(s.fabric.max_iterations == 40);
  CHECK(s.energy.p_mb_idle == 0.05);
  CHECK(s.energy.p_mb_active == 0.2);
  CHECK(s.energy.p_hw == 0.3);
  CHECK(s.energy.p_static == 0.01);
  CHECK(s.energy.cpu_clock_hz == 100'000'000);
  CHECK(s.energy.hw_clock_hz == 200'000'000);
  CHECK(s.energy.active_time == EnergyParams::ActiveTime::Shared);
  CHECK(s.overhead.config_cycles == 500);
  CHECK(s.overhead.invoke_cycles == 7);
  CHECK(s.cpu_count == 4);
  CHECK(s.cycle_limit == 1000);
  CHECK(s.profiler_capacity == 8);
  CHECK(s.wcla_overlap);
  CHECK_FALSE(s.profitability_check);
  CHECK(s.mmio_base == 0xFFFE0000u);
}

TEST_CASE("formatted settings parse back to the same value") {
  WarpSettings s;
  CHECK(parse_settings(format_settings(s)) == s);
  s.features.divider = false;
  s.latencies.div = 41;
  s.fabric.lut_delay_ns = 0.1 + 0.2;
  s.energy.p_hw = 1.0 / 3.0;
  s.energy.active_time = EnergyParams::ActiveTime::Shared;
  s.cpu_count = 3;
  s.wcla_overlap = true;
  s.mmio_base = 0xFFFF8000u;
  CHECK(parse_settings(format_settings(s)) == s);
}

TEST_CASE("later lines override earlier ones and the base is kept") {
  WarpSettings base;
  base.cpu_count = 2;
  const WarpSettings s = parse_settings("latency.load = 5 # slow memory\nlatency.load = 6\n", base);
  CHECK(s.latencies.load == 6);
  CHECK(s.cpu_count == 2);
}

TEST_CASE("errors name the line") {
  check_line_error("cpu_count = 2\nbogus = 1\n", 2);
  check_line_error("\n\nlatency.load\n", 3);
  check_line_error("multiplier = maybe\n", 1);
  check_line_error("fabric.width = -3\n", 1);
  check_line_error("latency.alu1 = 4x\n", 1);
  check_line_error("mmio_base = 0x1ffffffff\n", 1);
  check_line_error("energy.active_time = sometimes\n", 1);
}

TEST_CASE("parsed values are validated") {
  CHECK_THROWS_AS(parse_settings("cpu_count = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_settings("latency.load = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_settings("fabric.height = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_settings("energy.cpu_clock_hz = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_settings("profiler.capacity = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_settings("cycle_limit = 0\n"), std::invalid_argument);
}

TEST_CASE("settings load from a file") {
  const auto path = std::filesystem::temp_directory_path() / "warp_test_settings.cfg";
  {
    std::ofstream f(path);
    f << "fabric.width = 10\n";
  }
  CHECK(load_settings(path.string()).fabric.width == 10);
  std::filesystem::remove(path);
  CHECK_THROWS(load_settings(path.string()));
}
