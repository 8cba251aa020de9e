#include "warp/wcla.hpp"

#include <algorithm>
#include <cstring>

#include "warp/error.hpp"
#include "warp/synth.hpp"

namespace warp {

std::size_t WclaConfig::reads() const {
  return static_cast<std::size_t>(std::count_if(dadg.begin(), dadg.end(), [](const DadgProgram& d) {
    return d.dir != Direction::Write;
  }));
}

std::size_t WclaConfig::writes() const {
  return static_cast<std::size_t>(std::count_if(dadg.begin(), dadg.end(), [](const DadgProgram& d) {
    return d.dir != Direction::Read;
  }));
}

std::uint64_t WclaConfig::cycles_per_iteration() const {
  const std::uint64_t r = reads(), w = writes(), c = compute_cycles;
  return (overlap ? std::max(r, c) : r + c) + w;
}

WclaConfig make_wcla_config(const Cdfg& g, const FabricConfig& fabric, std::uint64_t hw_clock_hz, bool overlap) {
  if (g.array_refs.size() > static_cast<std::size_t>(kDatapathRegs))
    throw std::invalid_argument("at most three address generators");
  if (hw_clock_hz == 0) throw std::invalid_argument("hardware clock must be > 0");
  WclaConfig c;
  c.fabric = fabric;
  for (const auto& r : g.array_refs) c.dadg.push_back({r.address, r.dir});
  c.lch = g.header;
  c.inductions = g.inductions;
  if (g.accumulator) c.mac = MacBinding{g.accumulator->reg, g.accumulator->init};
  c.live_ins = g.live_ins;
  c.live_outs = g.live_outs;
  c.hw_clock_hz = hw_clock_hz;
  c.overlap = overlap;
  c.compute_cycles = compute_cycles(fabric.critical_path_ns, c.period_ns());
  return c;
}

std::uint64_t hw_cycles_for(const WclaConfig& c, std::uint64_t trips) { return trips * c.cycles_per_iteration(); }

HwRunResult execute(const WclaConfig& c, const RegFile& entry, std::vector<std::uint8_t>& mem, std::uint32_t data_base) {
  return execute(c, FabricSimulator(c.fabric), entry, mem, data_base);
}

HwRunResult execute(const WclaConfig& c, const FabricSimulator& fabric, const RegFile& entry,
                    std::vector<std::uint8_t>& mem, std::uint32_t data_base) {
  const auto trips = trip_count(c.lch, entry);
  if (!trips) throw WclaFault(0, "loop bound wraps the 32-bit range");
  const auto ports = [&] {
    std::vector<PortId> ids;
    for (const auto& o : c.fabric.outputs)
      if (ids.empty() || !(ids.back() == o.port)) ids.push_back(o.port);
    return ids;
  }();
  HwRunResult res;
  std::uint32_t acc = c.mac ? c.mac->init.eval(entry, 0) : 0;
  for (std::uint64_t k = 0; k < *trips; ++k) {
    const auto kk = static_cast<std::uint32_t>(k);
    auto offset = [&](const DadgProgram& d) {
      const std::uint32_t addr = d.address.eval(entry, kk);
      if (addr < data_base || (addr & 3u) || static_cast<std::uint64_t>(addr) + 4 > data_base + mem.size())
        throw WclaFault(k, "address 0x" + SimFault::hex(addr) + " outside data memory");
      return addr - data_base;
    };
    RegValues regs{};
    for (std::size_t r = 0; r < c.dadg.size(); ++r)
      if (c.dadg[r].dir != Direction::Write) {
        std::memcpy(&regs[r], mem.data() + offset(c.dadg[r]), 4);
        ++res.memory_reads;
      }
    const PortValues out = fabric.run(regs);
    std::uint32_t mac_a = 0, mac_b = 0;
    for (std::size_t p = 0; p < ports.size(); ++p) {
      switch (ports[p].kind) {
        case PortId::Kind::Store: regs[static_cast<std::size_t>(ports[p].slot)] = out[p]; break;
        case PortId::Kind::MacA: mac_a = out[p]; break;
        case PortId::Kind::MacB: mac_b = out[p]; break;
      }
    }
    for (std::size_t r = 0; r < c.dadg.size(); ++r)
      if (c.dadg[r].dir != Direction::Read) {
        std::memcpy(mem.data() + offset(c.dadg[r]), &regs[r], 4);
        ++res.memory_writes;
      }
    if (c.mac) acc += mac_a * mac_b;
  }
  res.iterations = *trips;
  res.hw_cycles = hw_cycles_for(c, *trips);
  res.accumulator = acc;
  res.final_regs = entry;
  const auto t = static_cast<std::uint32_t>(*trips);
  for (const auto& iv : c.inductions)
    res.final_regs[iv.reg] = iv.entry.eval(entry, 0) + t * static_cast<std::uint32_t>(iv.step);
  if (c.mac) res.final_regs[c.mac->reg] = acc;
  res.final_regs[0] = 0;
  return res;
}

std::uint64_t cpu_cycles_for(std::uint64_t hw_cycles, std::uint64_t cpu_hz, std::uint64_t hw_hz) {
  if (cpu_hz == 0 || hw_hz == 0) throw std::invalid_argument("clock frequencies must be > 0");
  const auto num = static_cast<unsigned __int128>(hw_cycles) * cpu_hz;
  return static_cast<std::uint64_t>((num + hw_hz - 1) / hw_hz);
}

WclaDevice::WclaDevice(WclaConfig config, std::uint64_t cpu_hz)
    : config_(std::move(config)), fabric_(config_.fabric), cpu_hz_(cpu_hz) {
  if (cpu_hz_ == 0) throw std::invalid_argument("cpu clock must be > 0");
}

std::uint32_t WclaDevice::read(std::uint32_t offset, CpuState& cpu) {
  switch (offset) {
    case mmio::kStart: return 0;
    case mmio::kStatus: return busy(cpu) ? (status_ & mmio::kStatusError) : (status_ | mmio::kStatusDone);
    case mmio::kAccumulator: return accumulator_;
    default: break;
  }
  if (offset >= mmio::kRegWindow && offset < mmio::kRegWindow + 4 * kNumRegs)
    return window_[(offset - mmio::kRegWindow) / 4];
  return 0;
}

void WclaDevice::write(std::uint32_t offset, std::uint32_t value, CpuState& cpu) {
  if (offset >= mmio::kRegWindow && offset < mmio::kRegWindow + 4 * kNumRegs) {
    if (!busy(cpu)) window_[(offset - mmio::kRegWindow) / 4] = value;
    window_[0] = 0;
    return;
  }
  if (offset != mmio::kStart || value != 1) return;
  if (busy(cpu)) {
    status_ |= mmio::kStatusError;
    return;
  }
  ++starts_;
  try {
    const HwRunResult r = execute(config_, fabric_, window_, cpu.data_mem, cpu.data_base);
    hw_cycles_ += r.hw_cycles;
    iterations_ += r.iterations;
    accumulator_ = r.accumulator;
    window_ = r.final_regs;
    running_ = true;
    done_at_ = cpu.cycle_count + cpu_cycles_for(r.hw_cycles, cpu_hz_, config_.hw_clock_hz);
  } catch (const WclaFault& e) {
    status_ |= mmio::kStatusError;
    fault_ = e.what();
    running_ = false;
  }
}

}  // namespace warp
