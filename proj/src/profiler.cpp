#include "warp/profiler.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "warp/error.hpp"

namespace warp {

ProfileCache::ProfileCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("profile cache capacity must be positive");
  entries_.reserve(capacity);
}

void ProfileCache::observe(const TraceEvent& ev) {
  if (!ev.taken || !*ev.taken || ev.next_pc >= ev.pc) return;
  for (auto& e : entries_) {
    if (e.branch_pc == ev.pc && e.branch_target == ev.next_pc) {
      if (e.count < kMaxCount) ++e.count;
      return;
    }
  }
  const ProfileEntry fresh{ev.next_pc, ev.pc, 1};
  if (entries_.size() < capacity_) {
    entries_.push_back(fresh);
    return;
  }
  auto victim = std::min_element(entries_.begin(), entries_.end(),
                                 [](const ProfileEntry& a, const ProfileEntry& b) { return a.count < b.count; });
  *victim = fresh;
  ++evictions_;
}

ProfileCache observe(ProfileCache cache, const TraceEvent& event) {
  cache.observe(event);
  return cache;
}

std::vector<HotRegion> top_regions(const ProfileCache& cache, std::size_t n) {
  if (n < 1) throw std::invalid_argument("top_regions needs n >= 1");
  std::vector<HotRegion> out;
  for (const auto& e : cache.entries()) out.push_back({e.branch_target, e.branch_pc, e.count, 0});
  std::sort(out.begin(), out.end(), [](const HotRegion& a, const HotRegion& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.target != b.target) return a.target < b.target;
    return a.branch_pc < b.branch_pc;
  });
  if (out.size() > n) out.resize(n);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::string format_profile(std::span<const HotRegion> regions) {
  std::ostringstream os;
  os << "target,branch_pc,count,rank\n";
  for (const auto& r : regions)
    os << "0x" << SimFault::hex(r.target) << ",0x" << SimFault::hex(r.branch_pc) << ',' << r.count << ',' << r.rank << '\n';
  return os.str();
}

}  // namespace warp
