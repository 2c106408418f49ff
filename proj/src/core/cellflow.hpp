#pragma once

#include <vector>

#include "core/netlist.hpp"

namespace gp {

// Directed acyclic edge structure grown by breadth-first traversal from the
// terminals. Every movable cell is reached; each cell remembers the first
// edge that reached it (its income edge) and the net that edge traveled.
struct CellFlow {
  std::vector<int> edge_src;   // cell ids
  std::vector<int> edge_dst;   // always movable
  std::vector<int> edge_net;   // net traveled by the edge
  std::vector<int> income;     // cell -> edge id of first arrival (-1 for terminals)
  std::vector<int> pop_order;  // cell -> BFS pop rank, -1 if never popped

  // Incoming-edge CSR keyed by destination cell, used by the decoder.
  std::vector<int> in_start;  // size cells+1
  std::vector<int> in_edges;

  int num_edges() const { return static_cast<int>(edge_src.size()); }
};

CellFlow build_cellflow(const Netlist& nl);

// Income-chain lengths (edge counts back to a terminal) for the given cells.
std::vector<int> cell_path_lengths(const CellFlow& flow, const std::vector<int>& targets);

// Mean income-chain length over all movable cells.
double mean_path_length(const Netlist& nl, const CellFlow& flow);

}  // namespace gp
