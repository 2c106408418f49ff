#pragma once

#include <vector>

#include "core/netlist.hpp"
#include "core/types.hpp"

namespace gp {

// Charge density, potential, and field of a placement on an m x m bin grid
// over the core, mirrored (Neumann) boundaries. Grids are Mat with row = x
// bin index and column = y bin index.
struct DensityField {
  int m = 0;
  double bin_w = 0.0, bin_h = 0.0;
  Mat occupancy;         // overlap area deposited per bin
  Mat rho;               // occupancy with the mean removed
  Mat potential;         // psi with -laplace(psi) = rho, zero-mean
  Mat field_x, field_y;  // E = -grad psi by spectral differentiation
};

// Poisson solver in the DCT-II basis, which diagonalizes the five-point
// Laplacian under mirrored boundaries, so the discrete residual vanishes to
// machine precision. Transform matrices are dense and cached per solver; m
// stays small, so the O(m^3) products are cheap.
class DensitySolver {
 public:
  DensitySolver(const Rect& core, int m);

  const Rect& core() const { return core_; }
  int grid() const { return m_; }

  DensityField analyze(const Netlist& nl, const Placement& pl) const;

  // Potential energy sum_i q_i psi(center of i) with q_i the full cell area
  // and bilinear sampling between bin centers. The gradient is the complete
  // derivative of that value: the local sampling term plus the response of
  // psi to the moving charge, obtained from a second (adjoint) solve. grad
  // gets one entry per cell; terminal entries stay zero.
  double energy(const Netlist& nl, const Placement& pl, std::vector<Vec2>* grad) const;

  // Movable area sitting in bins whose total occupancy exceeds
  // target_density * bin area, over total movable area.
  double overflow_ratio(const Netlist& nl, const Placement& pl,
                        double target_density) const;

  // Occupancy of the cell rectangles alone (movable_only drops terminals).
  Mat splat(const Netlist& nl, const Placement& pl, bool movable_only = false) const;

  // Zero-mean solution of -laplace(psi) = rho - mean(rho).
  Mat solve(const Mat& rho) const;

 private:
  Rect core_;
  int m_;
  double bw_, bh_;
  Mat dct_;                 // orthonormal C, coefficient = C F C^T
  Mat dct_t_;               // C^T
  Mat dsin_x_, dsin_y_;     // spectral d/dx, d/dy sample matrices
  std::vector<double> lam_x_, lam_y_;  // five-point Neumann eigenvalues
};

}  // namespace gp
