#pragma once

#include <string>
#include <vector>

#include "core/netlist.hpp"
#include "core/partition.hpp"

namespace gp {

// One graph of the two-level hierarchy. Feature rows are inherited from the
// featurization of the original netlist (pseudo cells and pseudo pins get
// rows computed by the same rules).
struct HierGraph {
  Netlist nl;
  FeatureSet feat;
  std::vector<int> orig_cell;      // local cell -> original cell id, -1 for pseudo
  std::vector<int> pseudo_branch;  // local cell -> branch index, -1 otherwise
};

struct HierNetlist {
  HierGraph root;
  std::vector<HierGraph> branches;       // aligned with PartitionResult::parts
  std::vector<int> branch_anchor;        // per branch: original id of the cell
                                         // fixed at the branch origin
  double eta = 0.0;                      // sum over branches of incident net
                                         // counts, divided by the original
                                         // net count
};

// Builds branch graphs (one per part, the largest cell re-rooted as the sole
// terminal at the origin) and the root graph where each part collapses to a
// movable pseudo cell of side sqrt(5 * part area).
HierNetlist build_hierarchy(const Netlist& nl, const PartitionResult& part);

// Composes per-graph placements back onto the original netlist: a branch
// cell lands at (root position of its pseudo cell) + (its branch-local
// position).
Placement uncoarsen(const Netlist& nl, const HierNetlist& hier,
                    const Placement& root_pl, const std::vector<Placement>& branch_pls);

// Derives per-graph placements from a placement of the original netlist
// (root pseudo cells at the anchor position, branch cells relative to it).
// uncoarsen inverts this exactly.
void project_placement(const Netlist& nl, const HierNetlist& hier, const Placement& pl,
                       Placement* root_pl, std::vector<Placement>* branch_pls);

// Writes every graph as a Bookshelf file set plus manifest.json (branch to
// pseudo cell mapping and the measured overlap ratio).
void dump_hierarchy(const HierNetlist& hier, const std::string& dir);

}  // namespace gp
