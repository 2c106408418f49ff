#pragma once

#include <vector>

#include "core/cellflow.hpp"
#include "core/netlist.hpp"

namespace gp {

// Relative position encoding over the flow edges. For edge (i, j):
//   rho    = |p_j - p_i|, clamped below at kRhoEpsilon
//   dtheta = direction of (i -> j) minus the reference direction of i,
//            wrapped to (-pi, pi]
// The reference of a movable cell is the direction its income edge traveled;
// the reference of a terminal is the polar angle of its fixed position
// (0 when the terminal sits at the origin). rho is invariant under rigid
// motions; dtheta is invariant under rotations about the origin, and under
// translations for every edge whose source is movable.
struct RelEncoding {
  std::vector<double> rho;
  std::vector<double> dtheta;
};

constexpr double kRhoEpsilon = 1e-9;

RelEncoding encode(const Netlist& nl, const CellFlow& flow, const Placement& pl);

// Inverse of encode for consistent encodings. Chain angles and chain
// positions are accumulated per cell in pop order; each edge estimates its
// destination from the source's chain position, and a cell's final position
// is the arithmetic mean of its incoming estimates.
Placement decode(const Netlist& nl, const CellFlow& flow, const RelEncoding& enc);

}  // namespace gp
