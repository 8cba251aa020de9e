#include "warp/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "warp/error.hpp"

namespace warp {

void FabricModel::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("fabric dimensions must be >= 1");
  if (channel_width < 1) throw std::invalid_argument("channel width must be >= 1");
  if (io_per_position < 1) throw std::invalid_argument("io_per_position must be >= 1");
  if (!(lut_delay_ns > 0) || !(segment_delay_ns > 0)) throw std::invalid_argument("delays must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("router iterations must be >= 1");
}

ClbCoord pad_location(const FabricModel& m, int p) {
  const int w = m.width, h = m.height;
  if (p < h) return {-1, p};
  if (p < h + w) return {p - h, h};
  if (p < 2 * h + w) return {w, h - 1 - (p - h - w)};
  return {w - 1 - (p - 2 * h - w), -1};
}

namespace {

int manhattan(ClbCoord a, ClbCoord b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// CLB next to a perimeter position.
ClbCoord pad_clb(const FabricModel& m, int p) {
  ClbCoord c = pad_location(m, p);
  c.x = std::clamp(c.x, 0, m.width - 1);
  c.y = std::clamp(c.y, 0, m.height - 1);
  return c;
}

}  // namespace

RoutingGraph::RoutingGraph(const FabricModel& model) : m_(model) {
  m_.validate();
  const int w = m_.width, h = m_.height, cw = m_.channel_width;
  pads_ = m_.perimeter() * m_.io_per_position;
  ipad0_ = 0;
  opad0_ = pads_;
  opin0_ = 2 * pads_;
  ipin0_ = opin0_ + w * h;
  chanx0_ = ipin0_ + w * h * 4;
  chany0_ = chanx0_ + w * (h + 1) * cw;
  adj_.resize(static_cast<std::size_t>(chany0_ + (w + 1) * h * cw));

  for (int cx = 0; cx <= w; ++cx)
    for (int cy = 0; cy <= h; ++cy)
      for (int t = 0; t < cw; ++t) {
        std::vector<int> segs;
        if (cx > 0) segs.push_back(chanx(cx - 1, cy, t));
        if (cx < w) segs.push_back(chanx(cx, cy, t));
        if (cy > 0) segs.push_back(chany(cx, cy - 1, t));
        if (cy < h) segs.push_back(chany(cx, cy, t));
        for (int a : segs)
          for (int b : segs)
            if (a != b) link(a, b);
      }

  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) {
      const ClbCoord c{x, y};
      for (int t = 0; t < cw; ++t)
        for (int s : {chanx(x, y, t), chanx(x, y + 1, t), chany(x, y, t), chany(x + 1, y, t)}) {
          link(opin(c), s);
          for (int k = 0; k < 4; ++k) link(s, ipin(c, k));
        }
      const ClbCoord nb[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (auto n : nb)
        if (n.x >= 0 && n.x < w && n.y >= 0 && n.y < h)
          for (int k = 0; k < 4; ++k) link(opin(c), ipin(n, k));
    }

  for (int p = 0; p < m_.perimeter(); ++p) {
    const ClbCoord loc = pad_location(m_, p);
    const ClbCoord clb = pad_clb(m_, p);
    for (int s = 0; s < m_.io_per_position; ++s) {
      const IoPin pin{p, s};
      for (int t = 0; t < cw; ++t) {
        int seg = 0;
        if (loc.x < 0) seg = chany(0, loc.y, t);
        else if (loc.y >= h) seg = chanx(loc.x, h, t);
        else if (loc.x >= w) seg = chany(w, loc.y, t);
        else seg = chanx(loc.x, 0, t);
        link(ipad(pin), seg);
        link(seg, opad(pin));
      }
      for (int k = 0; k < 4; ++k) link(ipad(pin), ipin(clb, k));
      link(opin(clb), opad(pin));
    }
  }
  finish();
}

void RoutingGraph::finish() {
  for (auto& v : adj_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

int RoutingGraph::ipad(IoPin p) const { return ipad0_ + p.position * m_.io_per_position + p.slot; }
int RoutingGraph::opad(IoPin p) const { return opad0_ + p.position * m_.io_per_position + p.slot; }
int RoutingGraph::opin(ClbCoord c) const { return opin0_ + c.y * m_.width + c.x; }
int RoutingGraph::ipin(ClbCoord c, int k) const { return ipin0_ + (c.y * m_.width + c.x) * 4 + k; }
int RoutingGraph::chanx(int x, int y, int t) const { return chanx0_ + (y * m_.width + x) * m_.channel_width + t; }
int RoutingGraph::chany(int x, int y, int t) const {
  return chany0_ + (y * (m_.width + 1) + x) * m_.channel_width + t;
}

RoutingGraph::Kind RoutingGraph::kind(int n) const {
  if (n < opad0_) return Kind::Ipad;
  if (n < opin0_) return Kind::Opad;
  if (n < ipin0_) return Kind::Opin;
  if (n < chanx0_) return Kind::Ipin;
  if (n < chany0_) return Kind::ChanX;
  return Kind::ChanY;
}

std::string RoutingGraph::name(int n) const {
  const int w = m_.width, cw = m_.channel_width, io = m_.io_per_position;
  auto s = [](auto... v) {
    std::ostringstream os;
    ((os << v), ...);
    return os.str();
  };
  switch (kind(n)) {
    case Kind::Ipad: return s("ipad(", (n - ipad0_) / io, ",", (n - ipad0_) % io, ")");
    case Kind::Opad: return s("opad(", (n - opad0_) / io, ",", (n - opad0_) % io, ")");
    case Kind::Opin: return s("opin(", (n - opin0_) % w, ",", (n - opin0_) / w, ")");
    case Kind::Ipin: {
      const int i = n - ipin0_;
      return s("ipin(", (i / 4) % w, ",", (i / 4) / w, ",", i % 4, ")");
    }
    case Kind::ChanX: {
      const int i = n - chanx0_;
      return s("chanx(", (i / cw) % w, ",", (i / cw) / w, ",", i % cw, ")");
    }
    case Kind::ChanY: {
      const int i = n - chany0_;
      return s("chany(", (i / cw) % (w + 1), ",", (i / cw) / (w + 1), ",", i % cw, ")");
    }
  }
  return "?";
}

namespace {

[[noreturn]] void capacity_error(const std::string& what) { throw CadError(CadError::Kind::CapacityExceeded, what); }

}  // namespace

Placement place(const LutNetlist& n, const FabricModel& m) {
  m.validate();
  if (n.luts.size() > m.capacity())
    capacity_error(std::to_string(n.luts.size()) + " LUTs exceed fabric capacity " + std::to_string(m.capacity()));
  Placement pl;
  const int positions = m.perimeter();
  // Output bits fill consecutive pad slots, centred on the west edge.
  int driven = 0;
  for (const auto& p : n.outputs)
    for (int net : p.bits) driven += (net != kNetConst0 && net != kNetConst1);
  const int needed = (driven + m.io_per_position - 1) / m.io_per_position;
  if (needed > positions) capacity_error("output bits exceed perimeter pads");
  const int first = std::max(0, (m.height - needed) / 2);
  int o = 0;
  for (const auto& p : n.outputs)
    for (int b = 0; b < kWordBits; ++b) {
      OutputBinding ob;
      ob.port = p.id;
      ob.bit = b;
      ob.net = p.bits[b];
      if (!ob.constant()) {
        ob.pin = {(first + o / m.io_per_position) % positions, o % m.io_per_position};
        ++o;
      }
      pl.outputs.push_back(ob);
    }

  const std::size_t count = n.luts.size();
  auto lut_of = [&](int net) { return net >= kFirstLutNet ? net - kFirstLutNet : -1; };
  std::vector<std::vector<int>> neighbours(count);
  for (std::size_t i = 0; i < count; ++i)
    for (int in : n.luts[i].inputs)
      if (int j = lut_of(in); j >= 0) {
        neighbours[i].push_back(j);
        neighbours[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
      }
  for (auto& v : neighbours) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::vector<std::vector<ClbCoord>> pads_of(count);
  std::vector<int> order;
  std::vector<bool> seen(count, false);
  std::queue<int> q;
  auto visit = [&](int i) {
    if (i >= 0 && !seen[static_cast<std::size_t>(i)]) {
      seen[static_cast<std::size_t>(i)] = true;
      q.push(i);
    }
  };
  for (const auto& ob : pl.outputs)
    if (int j = lut_of(ob.net); j >= 0) {
      pads_of[static_cast<std::size_t>(j)].push_back(pad_location(m, ob.pin.position));
      visit(j);
    }
  for (std::size_t start = 0; start <= count; ++start) {
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      order.push_back(i);
      for (int j : neighbours[static_cast<std::size_t>(i)]) visit(j);
    }
    if (start < count) visit(static_cast<int>(start));
  }

  pl.lut_sites.assign(count, {});
  std::vector<bool> placed(count, false), used(m.capacity(), false);
  for (int i : order) {
    int best = std::numeric_limits<int>::max();
    ClbCoord best_site{};
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        if (used[static_cast<std::size_t>(y * m.width + x)]) continue;
        const ClbCoord c{x, y};
        int cost = 0;
        for (int j : neighbours[static_cast<std::size_t>(i)])
          if (placed[static_cast<std::size_t>(j)]) cost += manhattan(c, pl.lut_sites[static_cast<std::size_t>(j)]);
        for (const auto& pad : pads_of[static_cast<std::size_t>(i)]) cost += manhattan(c, pad);
        if (cost < best) {
          best = cost;
          best_site = c;
        }
      }
    pl.lut_sites[static_cast<std::size_t>(i)] = best_site;
    placed[static_cast<std::size_t>(i)] = true;
    used[static_cast<std::size_t>(best_site.y * m.width + best_site.x)] = true;
  }

  std::map<int, std::vector<ClbCoord>> consumers;
  for (std::size_t i = 0; i < count; ++i)
    for (int in : n.luts[i].inputs)
      if (in >= 0 && in < kInputBits) consumers[in].push_back(pl.lut_sites[i]);
  for (const auto& ob : pl.outputs)
    if (ob.net >= 0 && ob.net < kInputBits) consumers[ob.net].push_back(pad_location(m, ob.pin.position));
  std::vector<int> slots_used(static_cast<std::size_t>(positions), 0);
  for (const auto& [net, sinks] : consumers) {
    int best = std::numeric_limits<int>::max(), best_pos = -1;
    for (int p = 0; p < positions; ++p) {
      if (slots_used[static_cast<std::size_t>(p)] >= m.io_per_position) continue;
      int cost = 0;
      for (const auto& s : sinks) cost += manhattan(pad_location(m, p), s);
      if (cost < best) {
        best = cost;
        best_pos = p;
      }
    }
    if (best_pos < 0) capacity_error("input bits exceed perimeter pads");
    pl.inputs.push_back({net, {best_pos, slots_used[static_cast<std::size_t>(best_pos)]++}});
  }
  return pl;
}

namespace {

struct NetSpec {
  int net = 0;
  int source = 0;
  std::vector<int> sinks;  // ascending node ids
};

std::vector<NetSpec> net_specs(const LutNetlist& n, const Placement& pl, const RoutingGraph& g) {
  std::map<int, NetSpec> specs;
  for (const auto& in : pl.inputs) specs[in.net] = {in.net, g.ipad(in.pin), {}};
  for (std::size_t i = 0; i < n.luts.size(); ++i) {
    const int net = n.luts[i].output;
    specs[net] = {net, g.opin(pl.lut_sites[i]), {}};
  }
  auto sink = [&](int net, int node) {
    auto it = specs.find(net);
    if (it == specs.end()) throw CadError(CadError::Kind::Unroutable, "net " + std::to_string(net) + " has no driver");
    it->second.sinks.push_back(node);
  };
  for (std::size_t i = 0; i < n.luts.size(); ++i)
    for (int k = 0; k < 4; ++k)
      if (n.luts[i].inputs[k] >= 0) sink(n.luts[i].inputs[k], g.ipin(pl.lut_sites[i], k));
  for (const auto& ob : pl.outputs)
    if (!ob.constant()) sink(ob.net, g.opad(ob.pin));
  std::vector<NetSpec> out;
  for (auto& [net, s] : specs) {
    if (s.sinks.empty()) continue;
    std::sort(s.sinks.begin(), s.sinks.end());
    out.push_back(std::move(s));
  }
  return out;
}

class Router {
 public:
  Router(const RoutingGraph& g, std::vector<NetSpec> nets)
      : g_(g), nets_(std::move(nets)), occ_(g.size(), 0), hist_(g.size(), 0.0) {}

  std::vector<NetRoute> run(int max_iterations, RouteStats* stats) {
    std::vector<NetRoute> routes(nets_.size());
    double pres_fac = 0.5;
    for (int iter = 1; iter <= max_iterations; ++iter) {
      for (std::size_t i = 0; i < nets_.size(); ++i) {
        adjust(routes[i], -1);
        routes[i] = route_net(nets_[i], pres_fac);
        adjust(routes[i], +1);
      }
      std::size_t overused = 0;
      for (std::size_t v = 0; v < occ_.size(); ++v)
        if (occ_[v] > 1) {
          ++overused;
          hist_[v] += occ_[v] - 1;
        }
      if (stats) stats->iterations = iter;
      if (overused == 0) return routes;
      pres_fac *= 1.6;
    }
    std::ostringstream os;
    os << "congestion remains after " << max_iterations << " iterations on nets";
    for (std::size_t i = 0; i < nets_.size(); ++i)
      for (auto [a, b] : routes[i].edges)
        if (g_.is_track(b) && occ_[static_cast<std::size_t>(b)] > 1) {
          os << ' ' << nets_[i].net;
          break;
        }
    throw CadError(CadError::Kind::Unroutable, os.str());
  }

 private:
  void adjust(const NetRoute& r, int delta) {
    for (auto [a, b] : r.edges)
      if (g_.is_track(b)) occ_[static_cast<std::size_t>(b)] += delta;
  }

  double cost(int v, double pres_fac) const {
    if (!g_.is_track(v)) return 0.0;
    const auto i = static_cast<std::size_t>(v);
    return (1.0 + hist_[i]) * (1.0 + pres_fac * occ_[i]);
  }

  NetRoute route_net(const NetSpec& spec, double pres_fac) {
    NetRoute r;
    r.net = spec.net;
    r.source = spec.source;
    std::map<int, int> segments{{spec.source, 0}};
    std::vector<double> dist(g_.size());
    std::vector<int> prev(g_.size());
    for (int target : spec.sinks) {
      if (segments.count(target)) continue;
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      std::fill(prev.begin(), prev.end(), -1);
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      for (const auto& [node, _] : segments) {
        dist[static_cast<std::size_t>(node)] = 0.0;
        pq.emplace(0.0, node);
      }
      while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        if (u == target) break;
        for (int v : g_.fanout(u)) {
          const auto k = g_.kind(v);
          // pins and pads that are not this net's sink are dead ends
          if ((k == RoutingGraph::Kind::Ipin || k == RoutingGraph::Kind::Opad) && v != target) continue;
          const double nd = d + cost(v, pres_fac);
          if (nd < dist[static_cast<std::size_t>(v)]) {
            dist[static_cast<std::size_t>(v)] = nd;
            prev[static_cast<std::size_t>(v)] = u;
            pq.emplace(nd, v);
          }
        }
      }
      if (prev[static_cast<std::size_t>(target)] < 0)
        throw CadError(CadError::Kind::Unroutable, "no path to " + g_.name(target) + " for net " + std::to_string(spec.net));
      std::vector<int> path;
      for (int v = target; !segments.count(v); v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
      std::reverse(path.begin(), path.end());
      int from = prev[static_cast<std::size_t>(path.front())];
      for (int v : path) {
        segments[v] = segments[from] + (g_.is_track(v) ? 1 : 0);
        r.edges.emplace_back(from, v);
        from = v;
      }
    }
    for (int s : spec.sinks) r.sinks.push_back({s, segments.at(s)});
    return r;
  }

  const RoutingGraph& g_;
  std::vector<NetSpec> nets_;
  std::vector<int> occ_;
  std::vector<double> hist_;
};

}  // namespace

std::vector<NetRoute> route(const LutNetlist& n, const Placement& pl, const FabricModel& m, RouteStats* stats) {
  const RoutingGraph g(m);
  Router router(g, net_specs(n, pl, g));
  return router.run(m.max_iterations, stats);
}

double timing(const FabricConfig& c) {
  const RoutingGraph g(c.model);
  std::map<int, std::pair<int, int>> sink_info;  // node -> (net, segments)
  for (const auto& r : c.routes)
    for (const auto& s : r.sinks) sink_info[s.node] = {r.net, s.segments};
  std::map<int, double> arrival;
  for (const auto& in : c.inputs) arrival[in.net] = 0.0;
  auto at = [&](int node) -> double {
    auto it = sink_info.find(node);
    if (it == sink_info.end()) return 0.0;
    return arrival[it->second.first] + it->second.second * c.model.segment_delay_ns;
  };
  for (std::size_t i = 0; i < c.luts.size(); ++i) {
    double t = 0.0;
    for (int k = 0; k < 4; ++k) t = std::max(t, at(g.ipin(c.luts[i].site, k)));
    arrival[c.lut_nets[i]] = t + c.model.lut_delay_ns;
  }
  double crit = 0.0;
  for (const auto& ob : c.outputs)
    if (!ob.constant()) crit = std::max(crit, at(g.opad(ob.pin)));
  return crit;
}

FabricConfig implement(const LutNetlist& n, const FabricModel& m) {
  const Placement pl = place(n, m);
  RouteStats stats;
  FabricConfig c;
  c.routes = route(n, pl, m, &stats);
  c.model = m;
  for (std::size_t i = 0; i < n.luts.size(); ++i) {
    c.luts.push_back({pl.lut_sites[i], n.luts[i].truth});
    c.lut_nets.push_back(n.luts[i].output);
  }
  c.inputs = pl.inputs;
  c.outputs = pl.outputs;
  c.reg_bindings = n.reg_bindings;
  c.route_iterations = stats.iterations;
  c.critical_path_ns = timing(c);
  return c;
}

FabricSimulator::FabricSimulator(const FabricConfig& c) : lut_nets_(c.lut_nets) {
  const RoutingGraph g(c.model);
  std::vector<int> driver(g.size(), -1);
  for (const auto& r : c.routes) {
    // follow the tree from its source; only reachable nodes carry the net
    std::map<int, std::vector<int>> children;
    for (auto [a, b] : r.edges) children[a].push_back(b);
    std::vector<int> stack{r.source};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      int& d = driver[static_cast<std::size_t>(v)];
      if (d >= 0 && d != r.net)
        throw CadError(CadError::Kind::Unroutable, "nets " + std::to_string(d) + " and " + std::to_string(r.net) +
                                                       " share " + g.name(v));
      if (d == r.net) continue;
      d = r.net;
      for (int w : children[v]) stack.push_back(w);
    }
  }
  for (const auto& l : c.luts) {
    truth_.push_back(l.truth);
    std::array<int, 4> pins{};
    for (int k = 0; k < 4; ++k) pins[k] = driver[static_cast<std::size_t>(g.ipin(l.site, k))];
    lut_inputs_.push_back(pins);
  }
  for (const auto& ob : c.outputs) {
    if (ports_.empty() || !(ports_.back() == ob.port)) ports_.push_back(ob.port);
    int net = ob.net;
    if (!ob.constant()) {
      net = driver[static_cast<std::size_t>(g.opad(ob.pin))];
      if (net < 0) throw CadError(CadError::Kind::Unroutable, "output " + ob.port.name() + " bit " +
                                                                  std::to_string(ob.bit) + " is not connected");
    }
    outputs_.push_back({ob.port, ob.bit, net});
  }
}

PortValues FabricSimulator::run(const RegValues& regs) const {
  std::vector<std::uint8_t> nets(static_cast<std::size_t>(kFirstLutNet) + lut_nets_.size() + 1, 0);
  auto at = [&](int net) -> std::uint8_t& {
    if (static_cast<std::size_t>(net) >= nets.size()) nets.resize(static_cast<std::size_t>(net) + 1, 0);
    return nets[static_cast<std::size_t>(net)];
  };
  for (int i = 0; i < kInputBits; ++i) at(i) = (regs[static_cast<std::size_t>(i / 32)] >> (i % 32)) & 1u;
  at(kNetConst1) = 1;
  for (std::size_t i = 0; i < truth_.size(); ++i) {
    unsigned index = 0;
    for (int k = 0; k < 4; ++k)
      if (lut_inputs_[i][k] >= 0 && at(lut_inputs_[i][k])) index |= 1u << k;
    at(lut_nets_[i]) = (truth_[i] >> index) & 1u;
  }
  PortValues out(ports_.size(), 0);
  for (const auto& o : outputs_) {
    const auto p = static_cast<std::size_t>(std::find(ports_.begin(), ports_.end(), o.port) - ports_.begin());
    if (at(o.net)) out[p] |= 1u << o.bit;
  }
  return out;
}

PortValues simulate(const FabricConfig& c, const RegValues& regs) { return FabricSimulator(c).run(regs); }

std::size_t used_segments(const FabricConfig& c) {
  const RoutingGraph g(c.model);
  std::set<int> used;
  for (const auto& r : c.routes)
    for (auto [a, b] : r.edges)
      if (g.is_track(b)) used.insert(b);
  return used.size();
}

std::size_t overused_segments(const FabricConfig& c) {
  const RoutingGraph g(c.model);
  std::map<int, std::set<int>> users;
  for (const auto& r : c.routes)
    for (auto [a, b] : r.edges)
      if (g.is_track(b)) users[b].insert(r.net);
  std::size_t n = 0;
  for (const auto& [node, nets] : users)
    if (nets.size() > 1) ++n;
  return n;
}

std::uint32_t compute_cycles(double critical_path_ns, double period_ns) {
  if (!(period_ns > 0)) throw std::invalid_argument("clock period must be > 0");
  const double c = std::ceil(critical_path_ns / period_ns - 1e-9);
  return c < 1.0 ? 1u : static_cast<std::uint32_t>(c);
}

namespace {

class Writer {
 public:
  std::vector<std::uint8_t> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() {
    const std::uint64_t lo = u32(), hi = u32();
    const std::uint64_t v = lo | (hi << 32);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::size_t count() {
    const std::uint32_t n = u32();
    if (n > b_.size()) throw CadError(CadError::Kind::Io, "bitstream count field out of range");
    return n;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw CadError(CadError::Kind::Io, "truncated bitstream");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> to_bitstream(const FabricConfig& c) {
  Writer w;
  for (char ch : {'W', 'B', 'I', 'T'}) w.u8(static_cast<std::uint8_t>(ch));
  w.u8(kBitstreamVersion);
  const auto& m = c.model;
  for (int v : {m.width, m.height, m.channel_width, m.io_per_position, m.max_iterations}) w.i32(v);
  w.f64(m.lut_delay_ns);
  w.f64(m.segment_delay_ns);
  for (int r : c.reg_bindings) w.i32(r);
  w.u32(static_cast<std::uint32_t>(c.luts.size()));
  for (std::size_t i = 0; i < c.luts.size(); ++i) {
    w.i32(c.luts[i].site.x);
    w.i32(c.luts[i].site.y);
    w.u32(c.luts[i].truth);
    w.i32(c.lut_nets[i]);
  }
  w.u32(static_cast<std::uint32_t>(c.inputs.size()));
  for (const auto& in : c.inputs) {
    w.i32(in.net);
    w.i32(in.pin.position);
    w.i32(in.pin.slot);
  }
  w.u32(static_cast<std::uint32_t>(c.outputs.size()));
  for (const auto& o : c.outputs) {
    w.u8(static_cast<std::uint8_t>(o.port.kind));
    w.i32(o.port.slot);
    w.i32(o.bit);
    w.i32(o.net);
    w.i32(o.pin.position);
    w.i32(o.pin.slot);
  }
  w.u32(static_cast<std::uint32_t>(c.routes.size()));
  for (const auto& r : c.routes) {
    w.i32(r.net);
    w.i32(r.source);
    w.u32(static_cast<std::uint32_t>(r.edges.size()));
    for (auto [a, b] : r.edges) {
      w.i32(a);
      w.i32(b);
    }
    w.u32(static_cast<std::uint32_t>(r.sinks.size()));
    for (const auto& s : r.sinks) {
      w.i32(s.node);
      w.i32(s.segments);
    }
  }
  w.f64(c.critical_path_ns);
  w.i32(c.route_iterations);
  return w.bytes;
}

FabricConfig from_bitstream(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char ch : {'W', 'B', 'I', 'T'})
    if (r.u8() != static_cast<std::uint8_t>(ch)) throw CadError(CadError::Kind::Io, "not a fabric bitstream");
  if (r.u8() != kBitstreamVersion) throw CadError(CadError::Kind::Io, "unsupported bitstream version");
  FabricConfig c;
  auto& m = c.model;
  m.width = r.i32();
  m.height = r.i32();
  m.channel_width = r.i32();
  m.io_per_position = r.i32();
  m.max_iterations = r.i32();
  m.lut_delay_ns = r.f64();
  m.segment_delay_ns = r.f64();
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw CadError(CadError::Kind::Io, std::string("bad fabric model: ") + e.what());
  }
  for (int& b : c.reg_bindings) b = r.i32();
  for (std::size_t i = 0, n = r.count(); i < n; ++i) {
    ConfiguredLut l;
    l.site.x = r.i32();
    l.site.y = r.i32();
    l.truth = static_cast<std::uint16_t>(r.u32());
    c.luts.push_back(l);
    c.lut_nets.push_back(r.i32());
  }
  for (std::size_t i = 0, n = r.count(); i < n; ++i) {
    InputBinding in;
    in.net = r.i32();
    in.pin.position = r.i32();
    in.pin.slot = r.i32();
    c.inputs.push_back(in);
  }
  for (std::size_t i = 0, n = r.count(); i < n; ++i) {
    OutputBinding o;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(PortId::Kind::MacB)) throw CadError(CadError::Kind::Io, "bad port kind");
    o.port.kind = static_cast<PortId::Kind>(kind);
    o.port.slot = r.i32();
    o.bit = r.i32();
    o.net = r.i32();
    o.pin.position = r.i32();
    o.pin.slot = r.i32();
    c.outputs.push_back(o);
  }
  const RoutingGraph g(m);
  auto node = [&] {
    const int v = r.i32();
    if (v < 0 || static_cast<std::size_t>(v) >= g.size()) throw CadError(CadError::Kind::Io, "routing node out of range");
    return v;
  };
  for (std::size_t i = 0, n = r.count(); i < n; ++i) {
    NetRoute rt;
    rt.net = r.i32();
    rt.source = node();
    for (std::size_t e = 0, ne = r.count(); e < ne; ++e) {
      const int a = node();
      rt.edges.emplace_back(a, node());
    }
    for (std::size_t s = 0, ns = r.count(); s < ns; ++s) {
      RouteSink sk;
      sk.node = node();
      sk.segments = r.i32();
      rt.sinks.push_back(sk);
    }
    c.routes.push_back(std::move(rt));
  }
  c.critical_path_ns = r.f64();
  c.route_iterations = r.i32();
  if (!r.done()) throw CadError(CadError::Kind::Io, "trailing bytes after bitstream");
  return c;
}

std::string format_config(const FabricConfig& c) {
  const RoutingGraph g(c.model);
  std::ostringstream os;
  os << "fabric " << c.model.width << 'x' << c.model.height << " channel " << c.model.channel_width << '\n';
  for (std::size_t i = 0; i < c.luts.size(); ++i) {
    char hex[8];
    std::snprintf(hex, sizeof hex, "%04x", c.luts[i].truth);
    os << "lut " << i << " at " << c.luts[i].site.x << ',' << c.luts[i].site.y << ' ' << hex << " -> n"
       << c.lut_nets[i] << '\n';
  }
  for (const auto& in : c.inputs)
    os << "input reg" << in.net / 32 << '[' << in.net % 32 << "] pad " << in.pin.position << '.' << in.pin.slot << '\n';
  for (const auto& o : c.outputs) {
    os << "output " << o.port.name() << '[' << o.bit << "] ";
    if (o.constant()) os << "const " << (o.net == kNetConst1 ? 1 : 0) << '\n';
    else os << "net " << o.net << " pad " << o.pin.position << '.' << o.pin.slot << '\n';
  }
  for (const auto& r : c.routes) {
    os << "route " << r.net << ' ' << g.name(r.source);
    for (auto [a, b] : r.edges) os << ' ' << g.name(b);
    os << '\n';
  }
  os << "critical_path_ns " << c.critical_path_ns << '\n';
  return os.str();
}

}  // namespace warp
