#pragma once

#include <string>
#include <vector>

#include "core/types.hpp"

namespace gp {

struct Cell {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  bool is_terminal = false;
  double area() const { return width * height; }
};

// Pin offsets are relative to the owning cell's center.
struct Pin {
  int cell = -1;
  int net = -1;
  double dx = 0.0;
  double dy = 0.0;
};

// Placed hypergraph. Terminal positions are part of the netlist (they are
// inputs, not decision variables); movable positions live in Placement.
struct Netlist {
  std::vector<Cell> cells;
  std::vector<std::string> net_names;
  std::vector<Pin> pins;  // grouped by net, net-major order
  std::vector<Vec2> terminal_pos;  // indexed by cell id; meaningful for terminals
  Rect core;

  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_nets() const { return static_cast<int>(net_names.size()); }
  int num_pins() const { return static_cast<int>(pins.size()); }
  int num_terminals() const;
  int num_movable() const { return num_cells() - num_terminals(); }

  // CSR adjacency, built lazily by finalize().
  std::vector<int> cell_pin_start;  // size cells+1
  std::vector<int> cell_pin_ids;
  std::vector<int> net_pin_start;  // size nets+1
  std::vector<int> net_pin_ids;

  int cell_degree(int cell) const {
    return cell_pin_start[cell + 1] - cell_pin_start[cell];
  }
  int net_degree(int net) const {
    return net_pin_start[net + 1] - net_pin_start[net];
  }

  // Builds CSR indexes. Must be called after the pin list is complete.
  void finalize();

  // Checks structural invariants; throws Error(validation) on the first
  // violation. require_terminal_reach additionally runs the union-find
  // check that every connected component contains a terminal.
  void validate(bool require_terminal_reach = true) const;
};

struct Placement {
  std::vector<Vec2> pos;  // indexed by cell id, terminals included
};

// Initial placement with terminals at their fixed positions and movable
// cells at the core center.
Placement make_centered_placement(const Netlist& nl);

// Movable cells uniform in the core; terminals fixed.
Placement make_random_placement(const Netlist& nl, uint64_t seed);

// Clamps every movable center so its cell lies inside the core (cells wider
// or taller than the core are centered on that axis). Terminals untouched.
void clamp_to_core(const Netlist& nl, Placement& pl);

// Raw feature matrices consumed by the GNN.
//   X_V columns: log1p(width), log1p(height), log1p(area), log1p(degree), is_terminal
//   X_U columns: log1p(net degree)
//   X_P columns: dx/width, dy/height, log1p(cell degree), log1p(net degree),
//                is_terminal, 0, 0, 0
struct FeatureSet {
  Mat x_cell;
  Mat x_net;
  Mat x_pin;
};

constexpr int kCellFeatureDim = 5;
constexpr int kNetFeatureDim = 1;
constexpr int kPinFeatureDim = 8;

FeatureSet featurize(const Netlist& nl);

// Single feature row helpers, shared with the hierarchy builder so pseudo
// cells are featurized by the same rule as ordinary cells.
void cell_feature_row(double width, double height, int degree, bool is_terminal,
                      double* out5);
void pin_feature_row(double dx, double dy, double cell_width, double cell_height,
                     int cell_degree, int net_degree, bool is_terminal,
                     double* out8);

double hpwl(const Netlist& nl, const Placement& pl);

}  // namespace gp
