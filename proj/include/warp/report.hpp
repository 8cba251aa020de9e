// report.hpp - JSON, CSV and plot-data rendering of warp reports.
#pragma once

#include <string>
#include <vector>

#include "warp/warp.hpp"

namespace warp {

struct CorpusSummary {
  std::size_t benchmarks = 0;
  std::size_t eligible = 0;  // benchmarks whose hot loop passed partitioning
  std::size_t warped = 0;
  double mean_speedup = 0;      // arithmetic, over eligible benchmarks
  double geomean_speedup = 0;
  double mean_energy_reduction = 0;
  double mean_speedup_excluding = 0;  // same, without the excluded benchmark
  double mean_energy_reduction_excluding = 0;
  std::string excluded;
};

// Published reference points for the same kind of corpus, printed for comparison.
inline constexpr double kReferenceSpeedup = 5.8;
inline constexpr double kReferenceSpeedupExcludingBrev = 3.6;
inline constexpr double kReferenceEnergyReduction = 0.57;
inline constexpr double kReferenceEnergyReductionExcludingBrev = 0.49;

CorpusSummary summarize(const std::vector<WarpReport>& reports, const std::string& exclude = "brev");
std::string format_summary(const CorpusSummary& s);

std::string to_json(const WarpReport& r);
WarpReport report_from_json(const std::string& text);
std::string to_json(const std::vector<WarpReport>& reports);
std::string to_json(const MultiReport& m);

// One row per report, then `mean` and `geomean` rows when any benchmark was eligible.
std::string to_csv(const std::vector<WarpReport>& reports);
// `name speedup energy_norm` per report.
std::string to_plotdata(const std::vector<WarpReport>& reports);

// Throws std::runtime_error naming the path.
void write_file(const std::string& path, const std::string& content);

}  // namespace warp
