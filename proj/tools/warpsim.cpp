// warpsim - command-line driver for the warp processing toolchain.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "warp/assembler.hpp"
#include "warp/config.hpp"
#include "warp/corpus.hpp"
#include "warp/profiler.hpp"
#include "warp/report.hpp"
#include "warp/synth.hpp"
#include "warp/warp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Binary images start with "WRSC"; anything else is assembly source.
warp::Program load_program(const std::string& path, const warp::CpuFeatures& features) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "WRSC")) return warp::from_binary(bytes);
  return warp::assemble(std::string(bytes.begin(), bytes.end()), features);
}

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string features;

  void add(CLI::App* app) {
    app->add_option("--config", config, "key=value configuration file");
    app->add_option("--set", sets, "override one configuration key (key=value)");
    app->add_option("--features", features, "comma list of barrel_shifter,multiplier,divider, or all / none");
  }

  warp::WarpSettings settings() const {
    warp::WarpSettings s;
    if (!config.empty()) s = warp::load_settings(config);
    std::string overrides;
    for (const auto& kv : sets) overrides += kv + "\n";
    s = warp::parse_settings(overrides, s);
    if (!features.empty()) {
      if (features == "all") s.features = warp::CpuFeatures::all_on();
      else if (features == "none") s.features = warp::CpuFeatures::all_off();
      else {
        s.features = warp::CpuFeatures::all_off();
        std::stringstream ss(features);
        for (std::string f; std::getline(ss, f, ',');) {
          if (f == "barrel_shifter") s.features.barrel_shifter = true;
          else if (f == "multiplier") s.features.multiplier = true;
          else if (f == "divider") s.features.divider = true;
          else throw std::invalid_argument("unknown feature '" + f + "'");
        }
      }
    }
    return s;
  }
};

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else warp::write_file(path, content);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warp processing simulator"};
  app.require_subcommand(1);

  Common common_asm, common_run, common_profile, common_warp, common_bench, common_multi;

  std::string asm_src, asm_out = "a.bin";
  bool asm_listing = false;
  auto* c_asm = app.add_subcommand("asm", "assemble a source file into a binary image");
  c_asm->add_option("source", asm_src, "assembly source")->required();
  c_asm->add_option("-o,--output", asm_out, "output binary image");
  c_asm->add_flag("--disassemble", asm_listing, "print the disassembly of the result");
  common_asm.add(c_asm);

  std::string run_in, run_trace, run_counts;
  auto* c_run = app.add_subcommand("run", "run a program on the soft-core model");
  c_run->add_option("program", run_in, "binary image or assembly source")->required();
  c_run->add_option("--trace", run_trace, "write the instruction trace");
  c_run->add_option("--pc-counts", run_counts, "write per-pc execution counts");
  common_run.add(c_run);

  std::string prof_in;
  std::size_t prof_top = 4;
  auto* c_prof = app.add_subcommand("profile", "list the most frequent loops");
  c_prof->add_option("program", prof_in, "binary image or assembly source")->required();
  c_prof->add_option("--top", prof_top, "regions to list");
  common_profile.add(c_prof);

  std::string warp_in, warp_report, warp_cdfg, warp_netlist, warp_bitstream, warp_fabric;
  auto* c_warp = app.add_subcommand("warp", "partition the hottest loop onto the fabric and re-run");
  c_warp->add_option("program", warp_in, "binary image or assembly source")->required();
  c_warp->add_option("--report", warp_report, "JSON report path (default stdout)");
  c_warp->add_option("--cdfg", warp_cdfg, "write the decompiled graph");
  c_warp->add_option("--netlist", warp_netlist, "write the mapped LUT netlist");
  c_warp->add_option("--bitstream", warp_bitstream, "write the fabric bitstream");
  c_warp->add_option("--fabric", warp_fabric, "write the placed and routed configuration as text");
  common_warp.add(c_warp);

  std::string bench_dir = "corpus", bench_report, bench_json, bench_plot;
  auto* c_bench = app.add_subcommand("bench", "warp every benchmark of a corpus");
  c_bench->add_option("--corpus", bench_dir, "corpus directory");
  c_bench->add_option("--report", bench_report, "CSV report path (default stdout)");
  c_bench->add_option("--json", bench_json, "JSON report path");
  c_bench->add_option("--plotdata", bench_plot, "plot data path");
  common_bench.add(c_bench);

  int multi_n = 0;
  std::vector<std::string> multi_in;
  std::string multi_report;
  auto* c_multi = app.add_subcommand("multi", "several CPUs sharing one partitioning module and fabric");
  c_multi->add_option("--n", multi_n, "CPU count; a single program is replicated");
  c_multi->add_option("programs", multi_in, "one program per CPU")->required();
  c_multi->add_option("--report", multi_report, "JSON report path (default stdout)");
  common_multi.add(c_multi);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_asm->parsed()) {
      const auto s = common_asm.settings();
      std::ifstream f(asm_src);
      if (!f) throw std::runtime_error("cannot open " + asm_src);
      std::stringstream ss;
      ss << f.rdbuf();
      const auto program = warp::assemble(ss.str(), s.features);
      const auto bin = warp::to_binary(program);
      warp::write_file(asm_out, std::string(bin.begin(), bin.end()));
      if (asm_listing) std::cout << warp::disassemble(program);
      return kExitOk;
    }
    if (c_run->parsed()) {
      const auto s = common_run.settings();
      const auto program = load_program(run_in, s.features);
      warp::RunOptions opts;
      opts.cycle_limit = s.cycle_limit;
      opts.record_trace = !run_trace.empty();
      const auto r = warp::run(program, s.latencies, opts);
      if (!run_trace.empty()) emit(run_trace, warp::format_trace(r.trace));
      if (!run_counts.empty()) emit(run_counts, warp::format_pc_counts(program, r.pc_counts));
      std::cout << "cycles " << r.total_cycles << "\ninstructions " << r.instructions << '\n';
      if (r.limit_exceeded) {
        std::cerr << "cycle limit exceeded\n";
        return kExitError;
      }
      return kExitOk;
    }
    if (c_prof->parsed()) {
      const auto s = common_profile.settings();
      const auto program = load_program(prof_in, s.features);
      warp::ProfileCache cache(s.profiler_capacity);
      warp::RunOptions opts;
      opts.cycle_limit = s.cycle_limit;
      opts.observer = [&](const warp::TraceEvent& e) { cache.observe(e); };
      warp::run(program, s.latencies, opts);
      std::cout << warp::format_profile(warp::top_regions(cache, prof_top));
      return kExitOk;
    }
    if (c_warp->parsed()) {
      const auto s = common_warp.settings();
      const auto program = load_program(warp_in, s.features);
      const auto out = warp::warp_detailed(program, s, warp_in);
      emit(warp_report, warp::to_json(out.report) + "\n");
      if (out.partition) {
        if (!warp_cdfg.empty()) emit(warp_cdfg, warp::format_cdfg(out.partition->cdfg));
        if (!warp_netlist.empty()) emit(warp_netlist, warp::format_netlist(out.partition->netlist));
        if (out.report.partition.routed_segments || !out.partition->fabric.luts.empty()) {
          if (!warp_bitstream.empty()) {
            const auto bits = warp::to_bitstream(out.partition->fabric);
            warp::write_file(warp_bitstream, std::string(bits.begin(), bits.end()));
          }
          if (!warp_fabric.empty()) emit(warp_fabric, warp::format_config(out.partition->fabric));
        }
      }
      if (const auto& rej = out.report.partition.rejection) {
        std::cerr << "not warped (" << rej->stage << "): " << rej->detail << '\n';
        return kExitRejected;
      }
      return kExitOk;
    }
    if (c_bench->parsed()) {
      const auto s = common_bench.settings();
      std::vector<warp::WarpReport> reports;
      bool unexpected = false;
      for (const auto& b : warp::load_corpus(bench_dir)) {
        auto r = warp::warp(b.program(s.features), s, b.name);
        const auto& rej = r.partition.rejection;
        const auto got = rej ? rej->reason : std::nullopt;
        if (got != b.expected || (!b.expected && !r.warped)) {
          unexpected = true;
          std::cerr << b.name << ": unexpected outcome" << (rej ? " (" + rej->stage + ": " + rej->detail + ")" : "")
                    << '\n';
        }
        reports.push_back(std::move(r));
      }
      emit(bench_report, warp::to_csv(reports));
      if (!bench_json.empty()) emit(bench_json, warp::to_json(reports) + "\n");
      if (!bench_plot.empty()) emit(bench_plot, warp::to_plotdata(reports));
      std::cerr << warp::format_summary(warp::summarize(reports));
      return unexpected ? kExitRejected : kExitOk;
    }
    if (c_multi->parsed()) {
      const auto s = common_multi.settings();
      std::vector<warp::Program> programs;
      std::vector<std::string> names;
      if (multi_n > 0 && multi_in.size() == 1) {
        for (int i = 0; i < multi_n; ++i) {
          programs.push_back(load_program(multi_in[0], s.features));
          names.push_back(multi_in[0] + "#" + std::to_string(i));
        }
      } else {
        if (multi_n > 0 && static_cast<std::size_t>(multi_n) != multi_in.size())
          throw std::invalid_argument("--n does not match the number of programs");
        for (const auto& p : multi_in) {
          programs.push_back(load_program(p, s.features));
          names.push_back(p);
        }
      }
      const auto m = warp::warp_multi(programs, s, names);
      emit(multi_report, warp::to_json(m) + "\n");
      for (const auto& r : m.cpus)
        if (r.partition.rejection) return kExitRejected;
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}
