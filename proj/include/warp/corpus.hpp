// corpus.hpp - bundled benchmark kernels, seeded data images and reference models.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warp/error.hpp"
#include "warp/isa.hpp"

namespace warp {

// `count` words starting at `label` are drawn uniformly from [lo, hi] (signed
// bounds are stored two's complement).
struct FillSpec {
  std::string label;
  std::uint32_t count = 0;
  std::int64_t lo = 0;
  std::int64_t hi = 0xffffffff;
};

struct Benchmark {
  std::string name;
  std::string description;
  std::string source;
  std::vector<std::string> tags;  // wire-only, mac, shift-heavy, ineligible-by-design
  std::vector<FillSpec> fills;
  std::uint64_t seed = 1;
  std::string oracle;                    // reference model name
  std::optional<RejectReason> expected;  // rejection the flow should report

  bool has_tag(const std::string& tag) const;
  bool eligible_by_design() const { return !expected.has_value(); }

  // Assembled for `features` with the data image generated from `seed`.
  Program program(const CpuFeatures& features = {}) const;
  Program program(const CpuFeatures& features, std::uint64_t data_seed) const;
};

inline const std::vector<std::string> kCorpusTags = {"wire-only", "mac", "shift-heavy", "ineligible-by-design"};

// Directory of `<name>/kernel.s`, `<name>/meta`, `<name>/gen-seed`, sorted by name.
std::vector<Benchmark> load_corpus(const std::string& dir);
Benchmark load_benchmark(const std::string& dir);
Benchmark parse_benchmark(const std::string& name, const std::string& source, const std::string& meta,
                          std::uint64_t seed);

// Overwrites the fill regions of `program`'s data image.
void fill_data(Program& program, const std::vector<FillSpec>& fills, std::uint64_t seed);

// Final data image computed natively from the initial image, or nullopt for an
// unknown oracle name.
std::optional<std::vector<std::uint8_t>> reference_memory(const Benchmark& bench, const Program& initial);

}  // namespace warp
