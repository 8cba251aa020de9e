// fabric.hpp - placement, routing and timing on the simple LUT fabric.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "warp/netlist.hpp"

namespace warp {

struct FabricModel {
  int width = 16;
  int height = 16;
  int channel_width = 8;
  int io_per_position = 4;  // input pads and output pads per perimeter position
  double lut_delay_ns = 1.0;
  double segment_delay_ns = 0.5;
  int max_iterations = 30;

  void validate() const;
  std::size_t capacity() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  int perimeter() const { return 2 * (width + height); }
  bool operator==(const FabricModel&) const = default;
};

struct ClbCoord {
  int x = 0;
  int y = 0;
  bool operator==(const ClbCoord&) const = default;
};

// Perimeter positions run clockwise: west side bottom to top, north left to
// right, east top to bottom, south right to left.
struct IoPin {
  int position = 0;
  int slot = 0;
  bool operator==(const IoPin&) const = default;
};

// Grid coordinate just outside the fabric next to a perimeter position.
ClbCoord pad_location(const FabricModel& m, int position);

class RoutingGraph {
 public:
  enum class Kind : std::uint8_t { Ipad, Opad, Opin, Ipin, ChanX, ChanY };

  explicit RoutingGraph(const FabricModel& model);

  int ipad(IoPin p) const;
  int opad(IoPin p) const;
  int opin(ClbCoord c) const;
  int ipin(ClbCoord c, int k) const;
  int chanx(int x, int y, int t) const;  // x in [0,W), y in [0,H]
  int chany(int x, int y, int t) const;  // x in [0,W], y in [0,H)

  Kind kind(int node) const;
  bool is_track(int node) const { auto k = kind(node); return k == Kind::ChanX || k == Kind::ChanY; }
  const std::vector<int>& fanout(int node) const { return adj_[static_cast<std::size_t>(node)]; }
  std::size_t size() const { return adj_.size(); }
  std::string name(int node) const;

 private:
  void link(int a, int b) { adj_[static_cast<std::size_t>(a)].push_back(b); }
  void finish();

  FabricModel m_;
  int pads_ = 0, ipad0_ = 0, opad0_ = 0, opin0_ = 0, ipin0_ = 0, chanx0_ = 0, chany0_ = 0;
  std::vector<std::vector<int>> adj_;
};

// Where an output bit of the datapath leaves the fabric.
struct OutputBinding {
  PortId port;
  int bit = 0;
  int net = 0;  // source net (kNetConst0/1 for constants)
  IoPin pin;    // unused for constants
  bool constant() const { return net == kNetConst0 || net == kNetConst1; }
  bool operator==(const OutputBinding&) const = default;
};

struct InputBinding {
  int net = 0;  // Reg bit
  IoPin pin;
  bool operator==(const InputBinding&) const = default;
};

struct Placement {
  std::vector<ClbCoord> lut_sites;  // per LUT
  std::vector<InputBinding> inputs;
  std::vector<OutputBinding> outputs;
};

struct RouteSink {
  int node = 0;
  int segments = 0;  // channel segments between source and this sink
  bool operator==(const RouteSink&) const = default;
};

struct NetRoute {
  int net = 0;
  int source = 0;
  std::vector<std::pair<int, int>> edges;  // (from, to) routing-graph edges of the tree
  std::vector<RouteSink> sinks;
  bool operator==(const NetRoute&) const = default;
};

struct RouteStats {
  int iterations = 0;
};

// Throws CadError(CapacityExceeded).
Placement place(const LutNetlist& netlist, const FabricModel& model);

// Negotiated-congestion routing. Throws CadError(Unroutable).
std::vector<NetRoute> route(const LutNetlist& netlist, const Placement& placement, const FabricModel& model,
                            RouteStats* stats = nullptr);

struct ConfiguredLut {
  ClbCoord site;
  std::uint16_t truth = 0;
  bool operator==(const ConfiguredLut&) const = default;
};

// Everything needed to run the fabric; independent of the netlist it came from.
struct FabricConfig {
  FabricModel model;
  std::vector<ConfiguredLut> luts;  // evaluation order
  std::vector<int> lut_nets;        // output net of each LUT
  std::vector<InputBinding> inputs;
  std::vector<OutputBinding> outputs;
  std::vector<NetRoute> routes;
  std::array<int, kDatapathRegs> reg_bindings{-1, -1, -1};
  double critical_path_ns = 0.0;
  int route_iterations = 0;
  bool operator==(const FabricConfig&) const = default;
};

// Longest input-to-output delay over the routed configuration.
double timing(const FabricConfig& config);

FabricConfig implement(const LutNetlist& netlist, const FabricModel& model);

// Bit-level simulation that follows the routed wires into LUT pins. Throws
// CadError when a pin is left floating or two nets share a wire.
class FabricSimulator {
 public:
  explicit FabricSimulator(const FabricConfig& config);
  PortValues run(const RegValues& regs) const;

 private:
  struct Pin {
    PortId port;
    int bit = 0;
    int net = 0;
  };
  std::vector<std::uint16_t> truth_;
  std::vector<std::array<int, 4>> lut_inputs_;  // driving net per LUT pin, -1 when unused
  std::vector<int> lut_nets_;
  std::vector<Pin> outputs_;
  std::vector<PortId> ports_;
};

PortValues simulate(const FabricConfig& config, const RegValues& regs);

// Channel segments used by more than one net (zero for a legal routing).
std::size_t overused_segments(const FabricConfig& config);
std::size_t used_segments(const FabricConfig& config);

std::uint32_t compute_cycles(double critical_path_ns, double period_ns);

inline constexpr std::uint8_t kBitstreamVersion = 1;
std::vector<std::uint8_t> to_bitstream(const FabricConfig& config);
FabricConfig from_bitstream(std::span<const std::uint8_t> bytes);
std::string format_config(const FabricConfig& config);

}  // namespace warp
