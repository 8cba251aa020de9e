#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "warp/report.hpp"

using namespace warp;

namespace {

const std::vector<WarpReport>& corpus_reports() {
  static const std::vector<WarpReport> reports = [] {
    std::vector<WarpReport> v;
    for (const auto& b : testing::corpus()) v.push_back(warp::warp(b.program(), WarpSettings{}, b.name));
    return v;
  }();
  return reports;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("an empty report list is a header-only CSV") {
  const std::string csv = to_csv({});
  CHECK(csv ==
        "name,eligible,warped,stage,reason,baseline_cycles,sw_cycles,idle_cycles,overhead_cycles,hw_cycles,"
        "starts,luts,critical_path_ns,speedup,energy_norm,energy_reduction\n");
  CHECK(to_plotdata({}) == "# name speedup energy_norm\n");
}

TEST_CASE("JSON reports round trip byte for byte") {
  for (const auto& r : corpus_reports()) {
    INFO(r.name);
    const std::string text = to_json(r);
    const WarpReport back = report_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.speedup == r.speedup);
    CHECK(back.breakdown.sw_cycles == r.breakdown.sw_cycles);
    CHECK(back.partition.rejection.has_value() == r.partition.rejection.has_value());
    if (r.partition.rejection) CHECK(back.partition.rejection->reason == r.partition.rejection->reason);
  }
  CHECK_THROWS(report_from_json("{}"));
  CHECK_THROWS(report_from_json("not json"));
}

TEST_CASE("summary means recompute from the CSV rows") {
  const auto& reports = corpus_reports();
  const auto rows = csv_rows(to_csv(reports));
  REQUIRE(rows.size() == reports.size() + 3);
  const auto& header = rows[0];
  REQUIRE(header.size() == 16);
  double sum = 0, logs = 0, energy = 0;
  int n = 0;
  for (std::size_t i = 1; i <= reports.size(); ++i) {
    REQUIRE(rows[i].size() == 16);
    CHECK(rows[i][0] == reports[i - 1].name);
    if (rows[i][1] != "1") continue;
    const double s = std::stod(rows[i][13]);
    sum += s;
    logs += std::log(s);
    energy += std::stod(rows[i][15]);
    ++n;
  }
  REQUIRE(n > 0);
  const auto& mean = rows[reports.size() + 1];
  const auto& geo = rows[reports.size() + 2];
  CHECK(mean[0] == "mean");
  CHECK(geo[0] == "geomean");
  CHECK(std::abs(std::stod(mean[13]) - sum / n) < 1e-9);
  CHECK(std::abs(std::stod(mean[15]) - energy / n) < 1e-9);
  CHECK(std::abs(std::stod(geo[13]) - std::exp(logs / n)) < 1e-9);

  const CorpusSummary s = summarize(reports);
  CHECK(s.benchmarks == reports.size());
  CHECK(s.eligible == static_cast<std::size_t>(n));
  CHECK(std::abs(s.mean_speedup - sum / n) < 1e-9);
  double ex_sum = 0;
  int ex_n = 0;
  for (const auto& r : reports)
    if (r.partition.eligible && r.name != "brev") {
      ex_sum += r.speedup;
      ++ex_n;
    }
  CHECK(std::abs(s.mean_speedup_excluding - ex_sum / ex_n) < 1e-9);
  const std::string text = format_summary(s);
  CHECK(text.find("reference:") != std::string::npos);
}

TEST_CASE("rejected benchmarks carry their stage and reason in the CSV") {
  const auto rows = csv_rows(to_csv(corpus_reports()));
  for (std::size_t i = 1; i + 2 < rows.size(); ++i) {
    const Benchmark& b = testing::bench(rows[i][0]);
    if (b.eligible_by_design()) {
      CHECK(rows[i][2] == "1");
      CHECK(rows[i][3].empty());
    } else {
      CHECK(rows[i][2] == "0");
      CHECK(rows[i][3] == "partition");
      CHECK(rows[i][4] == to_string(*b.expected));
      CHECK(rows[i][13] == "1");
    }
  }
}

TEST_CASE("a list with no eligible benchmark has no summary rows") {
  std::vector<WarpReport> only_rejected;
  for (const auto& r : corpus_reports())
    if (!r.partition.eligible) only_rejected.push_back(r);
  REQUIRE_FALSE(only_rejected.empty());
  CHECK(csv_rows(to_csv(only_rejected)).size() == only_rejected.size() + 1);
  const CorpusSummary s = summarize(only_rejected);
  CHECK(s.eligible == 0);
  CHECK(s.mean_speedup == 0);
}

TEST_CASE("corpus JSON holds every report and a summary") {
  const auto j = nlohmann::json::parse(to_json(corpus_reports()));
  CHECK(j.at("benchmarks").size() == corpus_reports().size());
  CHECK(j.at("summary").at("eligible").get<std::size_t>() == summarize(corpus_reports()).eligible);
}

TEST_CASE("multi-processor JSON lists each processor") {
  MultiReport m;
  m.cpus = {corpus_reports()[0], corpus_reports()[1]};
  m.service_log = {0, 1};
  m.columns = {8, 8};
  const auto j = nlohmann::json::parse(to_json(m));
  CHECK(j.at("cpus").size() == 2);
  CHECK(j.at("service_log") == nlohmann::json::array({0, 1}));
  CHECK(j.at("columns") == nlohmann::json::array({8, 8}));
}

TEST_CASE("plot data has one line per report") {
  const std::string text = to_plotdata(corpus_reports());
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# name speedup energy_norm");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string name;
    double speedup = 0, norm = 0;
    ls >> name >> speedup >> norm;
    CHECK(name == corpus_reports()[n].name);
    CHECK(speedup == Catch::Approx(corpus_reports()[n].speedup));
    ++n;
  }
  CHECK(n == corpus_reports().size());
}

TEST_CASE("writing to an unwritable path names the path") {
  const std::string bad = "/nonexistent-dir/report.json";
  try {
    write_file(bad, "{}");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(bad) != std::string::npos);
  }
  const auto ok = std::filesystem::temp_directory_path() / "warp_report_test.txt";
  write_file(ok.string(), "x");
  CHECK(std::filesystem::file_size(ok) == 1);
  std::filesystem::remove(ok);
}
