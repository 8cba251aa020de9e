#include "warp/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace warp {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json times_json(const TimeBreakdown& t) {
  return {{"t_cpu_active", t.t_cpu_active}, {"t_cpu_idle", t.t_cpu_idle}, {"t_hw_active", t.t_hw_active},
          {"t_total", t.t_total}};
}

TimeBreakdown times_from(const json& j) {
  TimeBreakdown t;
  t.t_cpu_active = j.at("t_cpu_active").get<double>();
  t.t_cpu_idle = j.at("t_cpu_idle").get<double>();
  t.t_hw_active = j.at("t_hw_active").get<double>();
  t.t_total = j.at("t_total").get<double>();
  return t;
}

json energy_json(const EnergyReport& e) {
  return {{"e_mb", e.e_mb}, {"e_hw", e.e_hw}, {"e_static", e.e_static}, {"e_total", e.e_total},
          {"reduction", e.reduction_vs_baseline}};
}

EnergyReport energy_from(const json& j) {
  EnergyReport e;
  e.e_mb = j.at("e_mb").get<double>();
  e.e_hw = j.at("e_hw").get<double>();
  e.e_static = j.at("e_static").get<double>();
  e.e_total = j.at("e_total").get<double>();
  e.reduction_vs_baseline = j.at("reduction").get<double>();
  return e;
}

json partition_json(const PartitionRecord& p) {
  json j = {{"hot_region", p.hot_region},
            {"region_start", p.region_start},
            {"region_end", p.region_end},
            {"region_count", p.region_count},
            {"eligible", p.eligible},
            {"estimated_luts", p.estimated_luts},
            {"luts", p.luts},
            {"wires", p.wires},
            {"mac_ops", p.mac_ops},
            {"critical_path_ns", p.critical_path_ns},
            {"compute_cycles", p.compute_cycles},
            {"route_iterations", p.route_iterations},
            {"routed_segments", p.routed_segments},
            {"fabric_columns", p.fabric_columns}};
  if (p.rejection) {
    j["rejection"] = {{"stage", p.rejection->stage},
                      {"reason", p.rejection->reason ? json(to_string(*p.rejection->reason)) : json(nullptr)},
                      {"detail", p.rejection->detail}};
  } else {
    j["rejection"] = nullptr;
  }
  return j;
}

PartitionRecord partition_from(const json& j) {
  PartitionRecord p;
  p.hot_region = j.at("hot_region").get<bool>();
  p.region_start = j.at("region_start").get<std::uint32_t>();
  p.region_end = j.at("region_end").get<std::uint32_t>();
  p.region_count = j.at("region_count").get<std::uint32_t>();
  p.eligible = j.at("eligible").get<bool>();
  p.estimated_luts = j.at("estimated_luts").get<std::size_t>();
  p.luts = j.at("luts").get<std::size_t>();
  p.wires = j.at("wires").get<std::size_t>();
  p.mac_ops = j.at("mac_ops").get<std::size_t>();
  p.critical_path_ns = j.at("critical_path_ns").get<double>();
  p.compute_cycles = j.at("compute_cycles").get<std::uint32_t>();
  p.route_iterations = j.at("route_iterations").get<int>();
  p.routed_segments = j.at("routed_segments").get<std::size_t>();
  p.fabric_columns = j.at("fabric_columns").get<int>();
  const auto& rj = j.at("rejection");
  if (!rj.is_null()) {
    StageRejection s;
    s.stage = rj.at("stage").get<std::string>();
    if (!rj.at("reason").is_null()) {
      s.reason = parse_reject_reason(rj.at("reason").get<std::string>());
      if (!s.reason) throw std::invalid_argument("unknown rejection reason in report");
    }
    s.detail = rj.at("detail").get<std::string>();
    p.rejection = s;
  }
  return p;
}

json report_json(const WarpReport& r) {
  const auto& b = r.breakdown;
  return {{"name", r.name},
          {"cpu_clock_hz", r.cpu_clock_hz},
          {"hw_clock_hz", r.hw_clock_hz},
          {"overhead", {{"config_cycles", r.overhead.config_cycles}, {"invoke_cycles", r.overhead.invoke_cycles}}},
          {"baseline_cycles", r.baseline_cycles},
          {"kernel_cycles", r.kernel_cycles},
          {"warped", r.warped},
          {"equivalent", r.equivalent},
          {"breakdown",
           {{"sw_cycles", b.sw_cycles},
            {"idle_cycles", b.idle_cycles},
            {"overhead_cycles", b.overhead_cycles},
            {"hw_cycles", b.hw_cycles},
            {"starts", b.starts}}},
          {"t_baseline", r.t_baseline},
          {"t_nonkernel", r.t_nonkernel},
          {"t_warped", r.t_warped},
          {"speedup", r.speedup},
          {"times_before", times_json(r.times_before)},
          {"times_after", times_json(r.times_after)},
          {"energy_before", energy_json(r.energy_before)},
          {"energy_after", energy_json(r.energy_after)},
          {"partition", partition_json(r.partition)}};
}

}  // namespace

std::string to_json(const WarpReport& r) { return report_json(r).dump(2); }

WarpReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  WarpReport r;
  r.name = j.at("name").get<std::string>();
  r.cpu_clock_hz = j.at("cpu_clock_hz").get<std::uint64_t>();
  r.hw_clock_hz = j.at("hw_clock_hz").get<std::uint64_t>();
  r.overhead.config_cycles = j.at("overhead").at("config_cycles").get<std::uint64_t>();
  r.overhead.invoke_cycles = j.at("overhead").at("invoke_cycles").get<std::uint64_t>();
  r.baseline_cycles = j.at("baseline_cycles").get<std::uint64_t>();
  r.kernel_cycles = j.at("kernel_cycles").get<std::uint64_t>();
  r.warped = j.at("warped").get<bool>();
  r.equivalent = j.at("equivalent").get<bool>();
  const auto& b = j.at("breakdown");
  r.breakdown.sw_cycles = b.at("sw_cycles").get<std::uint64_t>();
  r.breakdown.idle_cycles = b.at("idle_cycles").get<std::uint64_t>();
  r.breakdown.overhead_cycles = b.at("overhead_cycles").get<std::uint64_t>();
  r.breakdown.hw_cycles = b.at("hw_cycles").get<std::uint64_t>();
  r.breakdown.starts = b.at("starts").get<std::uint64_t>();
  r.t_baseline = j.at("t_baseline").get<double>();
  r.t_nonkernel = j.at("t_nonkernel").get<double>();
  r.t_warped = j.at("t_warped").get<double>();
  r.speedup = j.at("speedup").get<double>();
  r.times_before = times_from(j.at("times_before"));
  r.times_after = times_from(j.at("times_after"));
  r.energy_before = energy_from(j.at("energy_before"));
  r.energy_after = energy_from(j.at("energy_after"));
  r.partition = partition_from(j.at("partition"));
  return r;
}

CorpusSummary summarize(const std::vector<WarpReport>& reports, const std::string& exclude) {
  CorpusSummary s;
  s.benchmarks = reports.size();
  s.excluded = exclude;
  double sum = 0, log_sum = 0, energy = 0, sum_ex = 0, energy_ex = 0;
  std::size_t n_ex = 0;
  for (const auto& r : reports) {
    if (r.warped) ++s.warped;
    if (!r.partition.eligible) continue;
    ++s.eligible;
    sum += r.speedup;
    log_sum += std::log(r.speedup);
    energy += r.energy_after.reduction_vs_baseline;
    if (r.name != exclude) {
      ++n_ex;
      sum_ex += r.speedup;
      energy_ex += r.energy_after.reduction_vs_baseline;
    }
  }
  if (s.eligible) {
    const auto n = static_cast<double>(s.eligible);
    s.mean_speedup = sum / n;
    s.geomean_speedup = std::exp(log_sum / n);
    s.mean_energy_reduction = energy / n;
  }
  if (n_ex) {
    s.mean_speedup_excluding = sum_ex / static_cast<double>(n_ex);
    s.mean_energy_reduction_excluding = energy_ex / static_cast<double>(n_ex);
  }
  return s;
}

std::string format_summary(const CorpusSummary& s) {
  std::ostringstream os;
  os << "benchmarks " << s.benchmarks << ", eligible " << s.eligible << ", warped " << s.warped << '\n'
     << "mean speedup " << num(s.mean_speedup) << " (geomean " << num(s.geomean_speedup) << "), excluding "
     << s.excluded << ' ' << num(s.mean_speedup_excluding) << '\n'
     << "mean energy reduction " << num(100 * s.mean_energy_reduction) << "%, excluding " << s.excluded << ' '
     << num(100 * s.mean_energy_reduction_excluding) << "%\n"
     << "reference: speedup " << kReferenceSpeedup << " overall, " << kReferenceSpeedupExcludingBrev
     << " excluding brev; energy reduction " << 100 * kReferenceEnergyReduction << "% overall, "
     << 100 * kReferenceEnergyReductionExcludingBrev << "% excluding brev\n";
  return os.str();
}

std::string to_json(const std::vector<WarpReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  const auto s = summarize(reports);
  json j = {{"benchmarks", arr},
            {"summary",
             {{"eligible", s.eligible},
              {"warped", s.warped},
              {"mean_speedup", s.mean_speedup},
              {"geomean_speedup", s.geomean_speedup},
              {"mean_energy_reduction", s.mean_energy_reduction},
              {"excluded", s.excluded},
              {"mean_speedup_excluding", s.mean_speedup_excluding},
              {"mean_energy_reduction_excluding", s.mean_energy_reduction_excluding},
              {"reference_speedup", kReferenceSpeedup},
              {"reference_speedup_excluding", kReferenceSpeedupExcludingBrev},
              {"reference_energy_reduction", kReferenceEnergyReduction},
              {"reference_energy_reduction_excluding", kReferenceEnergyReductionExcludingBrev}}}};
  return j.dump(2);
}

std::string to_json(const MultiReport& m) {
  json cpus = json::array();
  for (const auto& r : m.cpus) cpus.push_back(report_json(r));
  return json{{"service_log", m.service_log}, {"columns", m.columns}, {"cpus", cpus}}.dump(2);
}

std::string to_csv(const std::vector<WarpReport>& reports) {
  std::ostringstream os;
  os << "name,eligible,warped,stage,reason,baseline_cycles,sw_cycles,idle_cycles,overhead_cycles,hw_cycles,"
        "starts,luts,critical_path_ns,speedup,energy_norm,energy_reduction\n";
  for (const auto& r : reports) {
    const auto& b = r.breakdown;
    const auto& rej = r.partition.rejection;
    os << r.name << ',' << r.partition.eligible << ',' << r.warped << ',' << (rej ? rej->stage : "") << ','
       << (rej && rej->reason ? to_string(*rej->reason) : "") << ',' << r.baseline_cycles << ',' << b.sw_cycles
       << ',' << b.idle_cycles << ',' << b.overhead_cycles << ',' << b.hw_cycles << ',' << b.starts << ','
       << r.partition.luts << ',' << num(r.partition.critical_path_ns) << ',' << num(r.speedup) << ','
       << num(1.0 - r.energy_after.reduction_vs_baseline) << ',' << num(r.energy_after.reduction_vs_baseline)
       << '\n';
  }
  const auto s = summarize(reports);
  if (s.eligible) {
    os << "mean,,,,,,,,,,,,," << num(s.mean_speedup) << ',' << num(1.0 - s.mean_energy_reduction) << ','
       << num(s.mean_energy_reduction) << '\n';
    os << "geomean,,,,,,,,,,,,," << num(s.geomean_speedup) << ",,\n";
  }
  return os.str();
}

std::string to_plotdata(const std::vector<WarpReport>& reports) {
  std::ostringstream os;
  os << "# name speedup energy_norm\n";
  for (const auto& r : reports)
    os << r.name << ' ' << num(r.speedup) << ' ' << num(1.0 - r.energy_after.reduction_vs_baseline) << '\n';
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace warp
