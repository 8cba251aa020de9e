#include "warp/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace warp {

void WarpSettings::validate() const {
  latencies.validate();
  fabric.validate();
  energy.validate();
  if (cpu_count < 1) throw std::invalid_argument("cpu_count must be >= 1");
  if (cycle_limit == 0) throw std::invalid_argument("cycle_limit must be > 0");
  if (profiler_capacity == 0) throw std::invalid_argument("profiler.capacity must be > 0");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& v) {
  std::size_t used = 0;
  if (v.empty() || v[0] == '-') throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  const auto x = std::stoull(v, &used, 0);
  if (used != v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

std::uint32_t to_u32(const std::string& v) {
  const auto x = to_u64(v);
  if (x > 0xffffffffu) throw std::invalid_argument("value '" + v + "' does not fit 32 bits");
  return static_cast<std::uint32_t>(x);
}

int to_int(const std::string& v) {
  const auto x = to_u64(v);
  if (x > 0x7fffffff) throw std::invalid_argument("value '" + v + "' out of range");
  return static_cast<int>(x);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return x;
}

using Setter = std::function<void(WarpSettings&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"barrel_shifter", [](WarpSettings& s, const std::string& v) { s.features.barrel_shifter = to_bool(v); }},
      {"multiplier", [](WarpSettings& s, const std::string& v) { s.features.multiplier = to_bool(v); }},
      {"divider", [](WarpSettings& s, const std::string& v) { s.features.divider = to_bool(v); }},
      {"latency.alu1", [](WarpSettings& s, const std::string& v) { s.latencies.alu1 = to_u32(v); }},
      {"latency.mul3", [](WarpSettings& s, const std::string& v) { s.latencies.mul3 = to_u32(v); }},
      {"latency.div", [](WarpSettings& s, const std::string& v) { s.latencies.div = to_u32(v); }},
      {"latency.load", [](WarpSettings& s, const std::string& v) { s.latencies.load = to_u32(v); }},
      {"latency.store", [](WarpSettings& s, const std::string& v) { s.latencies.store = to_u32(v); }},
      {"latency.branch_taken", [](WarpSettings& s, const std::string& v) { s.latencies.branch_taken = to_u32(v); }},
      {"latency.branch_not_taken",
       [](WarpSettings& s, const std::string& v) { s.latencies.branch_not_taken = to_u32(v); }},
      {"latency.branch_long", [](WarpSettings& s, const std::string& v) { s.latencies.branch_long = to_u32(v); }},
      {"latency.long_branch_mask",
       [](WarpSettings& s, const std::string& v) { s.latencies.long_branch_mask = to_u32(v); }},
      {"latency.jump", [](WarpSettings& s, const std::string& v) { s.latencies.jump = to_u32(v); }},
      {"latency.mmio", [](WarpSettings& s, const std::string& v) { s.latencies.mmio = to_u32(v); }},
      {"fabric.width", [](WarpSettings& s, const std::string& v) { s.fabric.width = to_int(v); }},
      {"fabric.height", [](WarpSettings& s, const std::string& v) { s.fabric.height = to_int(v); }},
      {"fabric.channel_width", [](WarpSettings& s, const std::string& v) { s.fabric.channel_width = to_int(v); }},
      {"fabric.io_per_position", [](WarpSettings& s, const std::string& v) { s.fabric.io_per_position = to_int(v); }},
      {"fabric.lut_delay_ns", [](WarpSettings& s, const std::string& v) { s.fabric.lut_delay_ns = to_double(v); }},
      {"fabric.segment_delay_ns",
       [](WarpSettings& s, const std::string& v) { s.fabric.segment_delay_ns = to_double(v); }},
      {"fabric.max_iterations", [](WarpSettings& s, const std::string& v) { s.fabric.max_iterations = to_int(v); }},
      {"energy.p_mb_idle", [](WarpSettings& s, const std::string& v) { s.energy.p_mb_idle = to_double(v); }},
      {"energy.p_mb_active", [](WarpSettings& s, const std::string& v) { s.energy.p_mb_active = to_double(v); }},
      {"energy.p_hw", [](WarpSettings& s, const std::string& v) { s.energy.p_hw = to_double(v); }},
      {"energy.p_static", [](WarpSettings& s, const std::string& v) { s.energy.p_static = to_double(v); }},
      {"energy.cpu_clock_hz", [](WarpSettings& s, const std::string& v) { s.energy.cpu_clock_hz = to_u64(v); }},
      {"energy.hw_clock_hz", [](WarpSettings& s, const std::string& v) { s.energy.hw_clock_hz = to_u64(v); }},
      {"energy.active_time",
       [](WarpSettings& s, const std::string& v) {
         if (v == "split") s.energy.active_time = EnergyParams::ActiveTime::Split;
         else if (v == "shared") s.energy.active_time = EnergyParams::ActiveTime::Shared;
         else throw std::invalid_argument("expected split or shared, got '" + v + "'");
       }},
      {"overhead.config_cycles", [](WarpSettings& s, const std::string& v) { s.overhead.config_cycles = to_u64(v); }},
      {"overhead.invoke_cycles", [](WarpSettings& s, const std::string& v) { s.overhead.invoke_cycles = to_u64(v); }},
      {"cpu_count", [](WarpSettings& s, const std::string& v) { s.cpu_count = to_int(v); }},
      {"cycle_limit", [](WarpSettings& s, const std::string& v) { s.cycle_limit = to_u64(v); }},
      {"profiler.capacity", [](WarpSettings& s, const std::string& v) { s.profiler_capacity = to_u64(v); }},
      {"wcla.overlap", [](WarpSettings& s, const std::string& v) { s.wcla_overlap = to_bool(v); }},
      {"profitability_check", [](WarpSettings& s, const std::string& v) { s.profitability_check = to_bool(v); }},
      {"mmio_base", [](WarpSettings& s, const std::string& v) { s.mmio_base = to_u32(v); }},
  };
  return table;
}

}  // namespace

WarpSettings parse_settings(std::string_view text, WarpSettings s) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw std::invalid_argument("line " + std::to_string(number) + ": unknown key '" + key + "'");
    try {
      it->second(s, value);
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("line " + std::to_string(number) + ": " + key + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

WarpSettings load_settings(const std::string& path, WarpSettings base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_settings(ss.str(), std::move(base));
}

std::string format_settings(const WarpSettings& s) {
  std::ostringstream os;
  os.precision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  const auto& l = s.latencies;
  const auto& f = s.fabric;
  const auto& e = s.energy;
  os << "barrel_shifter = " << b(s.features.barrel_shifter) << "\nmultiplier = " << b(s.features.multiplier)
     << "\ndivider = " << b(s.features.divider) << "\nlatency.alu1 = " << l.alu1 << "\nlatency.mul3 = " << l.mul3
     << "\nlatency.div = " << l.div << "\nlatency.load = " << l.load << "\nlatency.store = " << l.store
     << "\nlatency.branch_taken = " << l.branch_taken << "\nlatency.branch_not_taken = " << l.branch_not_taken
     << "\nlatency.branch_long = " << l.branch_long << "\nlatency.long_branch_mask = " << l.long_branch_mask
     << "\nlatency.jump = " << l.jump << "\nlatency.mmio = " << l.mmio << "\nfabric.width = " << f.width
     << "\nfabric.height = " << f.height << "\nfabric.channel_width = " << f.channel_width
     << "\nfabric.io_per_position = " << f.io_per_position << "\nfabric.lut_delay_ns = " << f.lut_delay_ns
     << "\nfabric.segment_delay_ns = " << f.segment_delay_ns << "\nfabric.max_iterations = " << f.max_iterations
     << "\nenergy.p_mb_idle = " << e.p_mb_idle << "\nenergy.p_mb_active = " << e.p_mb_active
     << "\nenergy.p_hw = " << e.p_hw << "\nenergy.p_static = " << e.p_static
     << "\nenergy.cpu_clock_hz = " << e.cpu_clock_hz << "\nenergy.hw_clock_hz = " << e.hw_clock_hz
     << "\nenergy.active_time = " << (e.active_time == EnergyParams::ActiveTime::Split ? "split" : "shared")
     << "\noverhead.config_cycles = " << s.overhead.config_cycles
     << "\noverhead.invoke_cycles = " << s.overhead.invoke_cycles << "\ncpu_count = " << s.cpu_count
     << "\ncycle_limit = " << s.cycle_limit << "\nprofiler.capacity = " << s.profiler_capacity
     << "\nwcla.overlap = " << b(s.wcla_overlap) << "\nprofitability_check = " << b(s.profitability_check)
     << "\nmmio_base = 0x" << std::hex << s.mmio_base << '\n';
  return os.str();
}

}  // namespace warp
