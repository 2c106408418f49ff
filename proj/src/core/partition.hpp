#pragma once

#include <vector>

#include "core/netlist.hpp"

namespace gp {

struct PartitionConfig {
  int target_parts = 1;      // grow the part count at least this far
  int max_part_cells = 2048; // hard cap on cells per part
  double epsilon = 0.1;      // bisection balance slack
};

// belong[cell] = 0 for terminals and root-resident movables, i >= 1 for
// members of parts[i-1]. Parts contain movable cells only, are disjoint,
// connected in the induced sub-hypergraph, and never exceed max_part_cells.
struct PartitionResult {
  std::vector<std::vector<int>> parts;
  std::vector<int> belong;
};

// Recursive bisection with Fiduccia-Mattheyses refinement over a
// clustering-based coarsening ladder. Deterministic; ties break toward the
// lowest cell id. Disconnected parts are split post hoc and parts that end
// up with fewer than two cells are dissolved into the root. When one part
// would suffice (target_parts <= 1 and the movables fit max_part_cells) the
// result has no parts at all and the hierarchy degenerates to the input.
PartitionResult partition(const Netlist& nl, const PartitionConfig& cfg);

// Hyperedge cut of a two-way split (nets with pins on both sides), used by
// the brute-force test oracle as well.
int bisection_cut(const Netlist& nl, const std::vector<int>& cells,
                  const std::vector<char>& side_of_cell);

}  // namespace gp
