// profiler.hpp - non-intrusive backward-branch frequency cache.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "warp/cpu.hpp"

namespace warp {

struct ProfileEntry {
  std::uint32_t branch_target = 0;
  std::uint32_t branch_pc = 0;
  std::uint16_t count = 0;
  bool operator==(const ProfileEntry&) const = default;
};

struct HotRegion {
  std::uint32_t target = 0;
  std::uint32_t branch_pc = 0;
  std::uint32_t count = 0;
  int rank = 0;
  bool operator==(const HotRegion&) const = default;
};

// Fully associative; a miss on a full cache replaces the entry with the lowest
// count (lowest slot on ties). Counters saturate at 0xffff.
class ProfileCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 16;
  static constexpr std::uint16_t kMaxCount = 0xffff;

  explicit ProfileCache(std::size_t capacity = kDefaultCapacity);

  // Only taken branches whose target precedes the branch are counted.
  void observe(const TraceEvent& event);

  std::span<const ProfileEntry> entries() const { return entries_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t evictions() const { return evictions_; }

 private:
  std::size_t capacity_;
  std::vector<ProfileEntry> entries_;
  std::uint64_t evictions_ = 0;
};

ProfileCache observe(ProfileCache cache, const TraceEvent& event);

// Sorted by count descending, ties to the lower target address.
std::vector<HotRegion> top_regions(const ProfileCache& cache, std::size_t n);

// CSV `target,branch_pc,count,rank`.
std::string format_profile(std::span<const HotRegion> regions);

}  // namespace warp
