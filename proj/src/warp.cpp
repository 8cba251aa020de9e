#include "warp/warp.hpp"

#include <algorithm>
#include <cmath>

#include "warp/profiler.hpp"
#include "warp/synth.hpp"

namespace warp {

namespace {

Instruction make(Opcode op, int rd, int ra, int rb, std::int32_t imm) {
  Instruction i;
  i.op = op;
  i.rd = static_cast<std::uint8_t>(rd);
  i.ra = static_cast<std::uint8_t>(ra);
  i.rb = static_cast<std::uint8_t>(rb);
  i.imm = imm;
  return i;
}

bool has(std::uint16_t mask, int r) { return (mask >> r) & 1u; }

}  // namespace

PatchedProgram patch_binary(const Program& program, const LoopRegion& region, const WclaConfig& wcla) {
  if (!program.in_text(region.start) || !program.in_text(region.end) || region.end < region.start)
    throw std::invalid_argument("loop region outside the program text");

  // The window is addressed from r0, so every register offset must fit the immediate field.
  auto window = [&](std::uint32_t offset) {
    const auto addr = static_cast<std::int32_t>(wcla.mmio_base + offset);
    if (addr < kImmMin || addr > kImmMax)
      throw RelocationError("MMIO window at 0x" + SimFault::hex(wcla.mmio_base) + " is not reachable from r0");
    return addr;
  };

  PatchedProgram out;
  out.program = program;
  out.original_header = program.at(region.start);
  out.original_words = program.text.size();
  out.header_pc = region.start;
  out.exit_pc = region.end + 4;

  // Scratch register for the start value and the status word; its value
  // travels through the register window and is restored afterwards.
  out.scratch_reg = 1;
  for (int r = 1; r < kNumRegs; ++r) {
    if (!has(region.live_after, r) && !has(wcla.live_ins, r)) {
      out.scratch_reg = r;
      break;
    }
  }
  const int rt = out.scratch_reg;
  const int acc = wcla.mac ? wcla.mac->reg : -1;

  std::vector<Instruction> stub;
  for (int r = 1; r < kNumRegs; ++r)
    if (has(wcla.live_ins, r) || r == rt) stub.push_back(make(Opcode::Sw, 0, 0, r, window(mmio::kRegWindow + 4 * r)));
  stub.push_back(make(Opcode::Li, rt, 0, 0, 1));
  const std::size_t start_index = stub.size();
  stub.push_back(make(Opcode::Sw, 0, 0, rt, window(mmio::kStart)));
  const std::size_t poll_index = stub.size();
  stub.push_back(make(Opcode::Lw, rt, 0, 0, window(mmio::kStatus)));
  stub.push_back(make(Opcode::Beq, 0, rt, 0, 0));  // target filled below
  for (int r = 1; r < kNumRegs; ++r) {
    if (r == acc) stub.push_back(make(Opcode::Lw, r, 0, 0, window(mmio::kAccumulator)));
    else if (has(wcla.live_outs, r) || r == rt) stub.push_back(make(Opcode::Lw, r, 0, 0, window(mmio::kRegWindow + 4 * r)));
  }
  stub.push_back(make(Opcode::Jmp, 0, 0, 0, static_cast<std::int32_t>(out.exit_pc)));

  out.stub_start = program.text_end();
  const std::uint64_t stub_end = out.stub_start + 4ull * stub.size();
  if (stub_end > program.data_base || stub_end > program.text_base + kMaxTextBytes)
    throw RelocationError("stub of " + std::to_string(stub.size()) + " words would overlap the data segment");
  out.start_pc = out.stub_start + static_cast<std::uint32_t>(4 * start_index);
  out.poll_pc = out.stub_start + static_cast<std::uint32_t>(4 * poll_index);
  stub[poll_index + 1].imm = static_cast<std::int32_t>(out.poll_pc);

  out.program.text.insert(out.program.text.end(), stub.begin(), stub.end());
  out.program.at(region.start) = make(Opcode::Jmp, 0, 0, 0, static_cast<std::int32_t>(out.stub_start));
  out.program.validate();
  return out;
}

Program unpatch(const PatchedProgram& patched) {
  Program p = patched.program;
  p.text.resize(patched.original_words);
  p.at(patched.header_pc) = patched.original_header;
  return p;
}

CoRunResult co_run(const PatchedProgram& patched, const WclaConfig& wcla, const WarpSettings& settings) {
  WclaDevice device(wcla, settings.energy.cpu_clock_hz);
  CoRunResult res;
  RunOptions opts;
  opts.cycle_limit = settings.cycle_limit;
  opts.device = &device;
  opts.mmio_base = wcla.mmio_base;
  opts.observer = [&](const TraceEvent& e) {
    res.wall_cycles += e.cycles;
    if (e.pc == patched.start_pc || e.pc == patched.poll_pc || e.pc == patched.poll_pc + 4) res.idle_cycles += e.cycles;
  };
  res.run = run(patched.program, settings.latencies, opts);
  res.hw_cycles = device.hw_cycles();
  res.starts = device.starts();
  if (device.error()) res.fault = device.fault().empty() ? "accelerator started while busy" : device.fault();
  return res;
}

Partition analyze(const Program& program, const HotRegion& hot, const WarpSettings& settings) {
  Partition p;
  p.hot = hot;
  p.region = extract_region(program, hot);
  p.cdfg = decompile(p.region);
  p.verdict = check_eligibility(p.cdfg, FabricLimits{settings.fabric.capacity(), kDatapathRegs});
  if (!p.verdict.eligible) {
    const auto& r = p.verdict.reasons.front();
    throw PartitionError(r.reason, r.detail);
  }
  p.netlist = tech_map(optimize(synthesize(p.cdfg)));
  return p;
}

void build_hardware(Partition& p, const WarpSettings& settings, const FabricModel& fabric) {
  p.fabric = implement(p.netlist, fabric);
  p.wcla = make_wcla_config(p.cdfg, p.fabric, settings.energy.hw_clock_hz, settings.wcla_overlap);
  p.wcla.mmio_base = settings.mmio_base;
}

double WarpReport::recomputed_speedup() const {
  if (!warped) return 1.0;
  const double f = static_cast<double>(cpu_clock_hz);
  return (static_cast<double>(baseline_cycles) / f) / (static_cast<double>(breakdown.total_cpu_cycles()) / f);
}

namespace {

// State of one CPU's flow between the partitioning front end and the fabric back end.
struct Flow {
  WarpReport report;
  RunResult baseline;
  std::optional<Partition> part;
  std::optional<PatchedProgram> patched;

  void reject(std::string stage, std::optional<RejectReason> reason, std::string detail) {
    report.partition.rejection = StageRejection{std::move(stage), reason, std::move(detail)};
  }
};

Flow front_end(const Program& program, const WarpSettings& settings, const std::string& name) {
  settings.validate();
  Flow flow;
  WarpReport& r = flow.report;
  r.name = name;
  r.cpu_clock_hz = settings.energy.cpu_clock_hz;
  r.hw_clock_hz = settings.energy.hw_clock_hz;
  r.overhead = settings.overhead;

  ProfileCache cache(settings.profiler_capacity);
  std::vector<std::uint64_t> pc_cycles(program.text.size(), 0);
  RunOptions opts;
  opts.cycle_limit = settings.cycle_limit;
  opts.observer = [&](const TraceEvent& e) {
    cache.observe(e);
    if (program.in_text(e.pc)) pc_cycles[(e.pc - program.text_base) / 4] += e.cycles;
  };
  flow.baseline = run(program, settings.latencies, opts);
  if (flow.baseline.limit_exceeded)
    throw std::runtime_error(name + ": baseline run exceeded the cycle limit of " + std::to_string(settings.cycle_limit));

  r.baseline_cycles = flow.baseline.total_cycles;
  const double f = static_cast<double>(r.cpu_clock_hz);
  r.t_baseline = static_cast<double>(r.baseline_cycles) / f;
  r.t_warped = r.t_baseline;
  r.t_nonkernel = r.t_baseline;
  r.times_before = TimeBreakdown::software_only(r.t_baseline);
  r.energy_before = compute_energy(r.times_before, settings.energy);
  r.times_after = r.times_before;
  r.energy_after = r.energy_before;
  r.breakdown.sw_cycles = r.baseline_cycles;

  const auto hot = top_regions(cache, 1);
  if (hot.empty()) {
    flow.reject("profile", std::nullopt, "no taken backward branch");
    return flow;
  }
  auto& rec = r.partition;
  rec.hot_region = true;
  rec.region_start = hot[0].target;
  rec.region_end = hot[0].branch_pc;
  rec.region_count = hot[0].count;
  for (std::uint32_t pc = hot[0].target; pc <= hot[0].branch_pc; pc += 4) r.kernel_cycles += pc_cycles[(pc - program.text_base) / 4];
  r.t_nonkernel = static_cast<double>(r.baseline_cycles - r.kernel_cycles) / f;

  try {
    flow.part = analyze(program, hot[0], settings);
  } catch (const PartitionError& e) {
    flow.reject("partition", e.reason(), e.detail());
    return flow;
  }
  rec.eligible = true;
  rec.estimated_luts = flow.part->verdict.estimated_luts;
  rec.luts = flow.part->netlist.luts.size();
  rec.wires = flow.part->netlist.wires();
  rec.mac_ops = flow.part->netlist.mac_ops();
  return flow;
}

void back_end(Flow& flow, const Program& program, const WarpSettings& settings, const FabricModel& fabric) {
  if (!flow.part) return;
  WarpReport& r = flow.report;
  auto& rec = r.partition;
  rec.fabric_columns = fabric.width;
  try {
    build_hardware(*flow.part, settings, fabric);
  } catch (const CadError& e) {
    const auto reason = e.kind() == CadError::Kind::CapacityExceeded ? std::optional(RejectReason::RegionTooLarge)
                                                                     : std::nullopt;
    flow.reject("cad", reason, e.what());
    return;
  }
  const Partition& p = *flow.part;
  rec.critical_path_ns = p.fabric.critical_path_ns;
  rec.compute_cycles = p.wcla.compute_cycles;
  rec.route_iterations = p.fabric.route_iterations;
  rec.routed_segments = used_segments(p.fabric);

  try {
    flow.patched = patch_binary(program, p.region, p.wcla);
  } catch (const RelocationError& e) {
    flow.reject("patch", std::nullopt, e.what());
    return;
  }

  CoRunResult co;
  try {
    co = co_run(*flow.patched, p.wcla, settings);
  } catch (const SimFault& e) {
    flow.reject("cosim", std::nullopt, e.what());
    return;
  }
  if (co.run.limit_exceeded) return flow.reject("cosim", std::nullopt, "warped run exceeded the cycle limit");
  if (!co.fault.empty()) return flow.reject("cosim", std::nullopt, co.fault);

  auto& b = r.breakdown;
  b.idle_cycles = co.idle_cycles;
  b.sw_cycles = co.run.total_cycles - co.idle_cycles;
  b.starts = co.starts;
  b.overhead_cycles = settings.overhead.config_cycles + settings.overhead.invoke_cycles * co.starts;
  b.hw_cycles = co.hw_cycles;
  r.equivalent = co.run.final_state.data_mem == flow.baseline.final_state.data_mem;
  if (!r.equivalent) return flow.reject("cosim", std::nullopt, "warped data memory differs from the baseline");

  const double f = static_cast<double>(r.cpu_clock_hz);
  const double t_warped = static_cast<double>(b.total_cpu_cycles()) / f;
  if (settings.profitability_check && t_warped >= r.t_baseline) {
    flow.reject("profitability", std::nullopt,
                "modeled warped time " + std::to_string(t_warped) + " s is not below baseline " +
                    std::to_string(r.t_baseline) + " s");
    return;
  }
  r.warped = true;
  r.t_warped = t_warped;
  r.speedup = r.t_baseline / r.t_warped;
  r.times_after = TimeBreakdown::from_cycles(b.sw_cycles + b.overhead_cycles, b.idle_cycles, b.hw_cycles, settings.energy);
  r.energy_after = compute_energy(r.times_after, settings.energy);
  r.energy_after.reduction_vs_baseline = compare(r.energy_before, r.energy_after);
}

}  // namespace

WarpOutcome warp_detailed(const Program& program, const WarpSettings& settings, const std::string& name,
                          std::optional<FabricModel> fabric) {
  Flow flow = front_end(program, settings, name);
  back_end(flow, program, settings, fabric.value_or(settings.fabric));
  return {std::move(flow.report), std::move(flow.part), std::move(flow.patched)};
}

WarpReport warp(const Program& program, const WarpSettings& settings, const std::string& name) {
  return warp_detailed(program, settings, name).report;
}

std::vector<int> allocate_columns(const std::vector<std::size_t>& lut_requests, const FabricModel& fabric) {
  const auto h = static_cast<std::size_t>(fabric.height);
  std::vector<int> need(lut_requests.size());
  std::vector<int> out(lut_requests.size(), 0);
  int remaining = fabric.width;
  int accepted = 0;
  for (std::size_t i = 0; i < lut_requests.size(); ++i) {
    need[i] = std::max(1, static_cast<int>((lut_requests[i] + h - 1) / h));
    if (need[i] <= remaining) {
      out[i] = need[i];
      remaining -= need[i];
      accepted += need[i];
    }
  }
  if (accepted == 0) return out;
  const int spare = remaining;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 0) continue;
    const int extra = spare * out[i] / accepted;
    out[i] += extra;
    remaining -= extra;
  }
  for (std::size_t i = 0; i < out.size() && remaining > 0; ++i) {
    if (out[i] == 0) continue;
    ++out[i];
    --remaining;
  }
  return out;
}

MultiReport warp_multi(const std::vector<Program>& programs, const WarpSettings& settings,
                       const std::vector<std::string>& names) {
  if (programs.empty()) throw std::invalid_argument("warp_multi needs at least one program");
  if (!names.empty() && names.size() != programs.size())
    throw std::invalid_argument("warp_multi: one name per program");
  auto name_of = [&](std::size_t i) { return names.empty() ? "cpu" + std::to_string(i) : names[i]; };

  // Each CPU runs and profiles independently; the DPM then serves the
  // partition requests strictly in CPU order.
  MultiReport out;
  std::vector<Flow> flows;
  flows.reserve(programs.size());
  for (std::size_t i = 0; i < programs.size(); ++i) flows.push_back(front_end(programs[i], settings, name_of(i)));

  std::vector<std::size_t> order;
  std::vector<std::size_t> requests;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out.service_log.push_back(static_cast<int>(i));
    if (flows[i].part) {
      order.push_back(i);
      requests.push_back(flows[i].part->netlist.luts.size());
    }
  }

  const auto shares = allocate_columns(requests, settings.fabric);
  out.columns.assign(programs.size(), 0);
  for (std::size_t j = 0; j < order.size(); ++j) {
    Flow& flow = flows[order[j]];
    if (shares[j] == 0) {
      flow.reject("share", RejectReason::RegionTooLarge,
                  std::to_string(requests[j]) + " LUTs do not fit the remaining fabric columns");
      flow.part.reset();
      continue;
    }
    out.columns[order[j]] = shares[j];
    FabricModel share = settings.fabric;
    share.width = shares[j];
    back_end(flow, programs[order[j]], settings, share);
  }
  for (auto& f : flows) out.cpus.push_back(std::move(f.report));
  return out;
}

}  // namespace warp
