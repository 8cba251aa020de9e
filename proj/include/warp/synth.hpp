// synth.hpp - datapath synthesis, logic optimization and 4-LUT mapping.
#pragma once

#include <cstddef>

#include "warp/cdfg.hpp"
#include "warp/netlist.hpp"

namespace warp {

// Array ref i binds to Reg i. Throws PartitionError(UnsupportedOp) for nodes with
// no synthesis rule (div, loop-register inputs) and RegionTooLarge past 3 refs.
RtlNetlist synthesize(const Cdfg& cdfg);

// Constant propagation, structural hashing, double-inverter and dead-cell removal.
RtlNetlist optimize(const RtlNetlist& netlist);

// Greedy cone packing into K-input LUTs (K is 3 or 4).
LutNetlist tech_map(const RtlNetlist& netlist, int k = 4);

std::size_t estimate_luts(const Cdfg& cdfg);

// Output port order used by synthesize(): written refs by slot, then MAC a and b.
std::vector<PortId> datapath_ports(const Cdfg& cdfg);
PortValues port_values(const Cdfg& cdfg, const IterationValues& it);

}  // namespace warp
