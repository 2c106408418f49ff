#include "core/density.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace gp {
namespace {

using EMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CEMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EMap emap(Mat& m) { return EMap(m.v.data(), m.rows, m.cols); }
CEMap emap(const Mat& m) { return CEMap(m.v.data(), m.rows, m.cols); }

// Clamped bilinear sample over bin centers. Outside the center lattice the
// sample is held constant, so the corresponding derivative is zero there.
struct BilinSample {
  int i0, j0;
  double tx, ty;
  bool free_x, free_y;  // false when the coordinate was clamped
};

BilinSample locate(const Rect& core, double bw, double bh, int m, Vec2 p) {
  BilinSample s;
  double gx = (p.x - core.x_lo) / bw - 0.5;
  double gy = (p.y - core.y_lo) / bh - 0.5;
  s.free_x = gx > 0.0 && gx < m - 1;
  s.free_y = gy > 0.0 && gy < m - 1;
  gx = std::min(static_cast<double>(m - 1), std::max(0.0, gx));
  gy = std::min(static_cast<double>(m - 1), std::max(0.0, gy));
  s.i0 = std::min(m - 2, static_cast<int>(gx));
  s.j0 = std::min(m - 2, static_cast<int>(gy));
  s.tx = gx - s.i0;
  s.ty = gy - s.j0;
  return s;
}

}  // namespace

DensitySolver::DensitySolver(const Rect& core, int m) : core_(core), m_(m) {
  if (m < 2) fail_usage("density grid must be at least 2x2");
  if (core.width() <= 0.0 || core.height() <= 0.0)
    fail_usage("degenerate core region");
  bw_ = core.width() / m;
  bh_ = core.height() / m;

  dct_ = Mat(m, m);
  dct_t_ = Mat(m, m);
  dsin_x_ = Mat(m, m);
  dsin_y_ = Mat(m, m);
  for (int k = 0; k < m; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / m);
    for (int n = 0; n < m; ++n) {
      const double phase = kPi * k * (n + 0.5) / m;
      dct_(k, n) = s * std::cos(phase);
      dct_t_(n, k) = dct_(k, n);
      // d/dx of the basis function cos(pi k (g + 1/2) / m), g in bin units,
      // converted to layout units.
      dsin_x_(n, k) = -s * (kPi * k / m) / bw_ * std::sin(phase);
      dsin_y_(n, k) = -s * (kPi * k / m) / bh_ * std::sin(phase);
    }
  }
  lam_x_.resize(m);
  lam_y_.resize(m);
  for (int k = 0; k < m; ++k) {
    const double w = 2.0 - 2.0 * std::cos(kPi * k / m);
    lam_x_[k] = w / (bw_ * bw_);
    lam_y_[k] = w / (bh_ * bh_);
  }
}

Mat DensitySolver::splat(const Netlist& nl, const Placement& pl, bool movable_only) const {
  Mat occ(m_, m_);
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (movable_only && nl.cells[i].is_terminal) continue;
    const Cell& c = nl.cells[i];
    if (c.width <= 0.0 || c.height <= 0.0) continue;
    const double xl = std::max(pl.pos[i].x - c.width / 2.0, core_.x_lo);
    const double xh = std::min(pl.pos[i].x + c.width / 2.0, core_.x_hi);
    const double yl = std::max(pl.pos[i].y - c.height / 2.0, core_.y_lo);
    const double yh = std::min(pl.pos[i].y + c.height / 2.0, core_.y_hi);
    if (xl >= xh || yl >= yh) continue;
    const int ix0 = std::min(m_ - 1, std::max(0, static_cast<int>((xl - core_.x_lo) / bw_)));
    const int ix1 = std::min(m_ - 1, std::max(0, static_cast<int>((xh - core_.x_lo) / bw_)));
    const int iy0 = std::min(m_ - 1, std::max(0, static_cast<int>((yl - core_.y_lo) / bh_)));
    const int iy1 = std::min(m_ - 1, std::max(0, static_cast<int>((yh - core_.y_lo) / bh_)));
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double bx_lo = core_.x_lo + ix * bw_;
      const double ox = std::min(xh, bx_lo + bw_) - std::max(xl, bx_lo);
      if (ox <= 0.0) continue;
      for (int iy = iy0; iy <= iy1; ++iy) {
        const double by_lo = core_.y_lo + iy * bh_;
        const double oy = std::min(yh, by_lo + bh_) - std::max(yl, by_lo);
        if (oy > 0.0) occ(ix, iy) += ox * oy;
      }
    }
  }
  return occ;
}

Mat DensitySolver::solve(const Mat& rho) const {
  Mat coef(m_, m_);
  emap(coef) = emap(dct_) * emap(rho) * emap(dct_t_);
  coef(0, 0) = 0.0;
  for (int k = 0; k < m_; ++k)
    for (int l = 0; l < m_; ++l) {
      if (k == 0 && l == 0) continue;
      coef(k, l) /= lam_x_[k] + lam_y_[l];
    }
  Mat psi(m_, m_);
  emap(psi) = emap(dct_t_) * emap(coef) * emap(dct_);
  return psi;
}

DensityField DensitySolver::analyze(const Netlist& nl, const Placement& pl) const {
  DensityField f;
  f.m = m_;
  f.bin_w = bw_;
  f.bin_h = bh_;
  f.occupancy = splat(nl, pl);
  f.rho = f.occupancy;
  double mean = 0.0;
  for (double v : f.rho.v) mean += v;
  mean /= f.rho.size();
  for (double& v : f.rho.v) v -= mean;
  f.potential = solve(f.rho);

  Mat coef(m_, m_);
  emap(coef) = emap(dct_) * emap(f.potential) * emap(dct_t_);
  f.field_x = Mat(m_, m_);
  f.field_y = Mat(m_, m_);
  // The derivative matrices carry the basis' negative-sin factor, so one
  // more negation yields E = -grad psi.
  emap(f.field_x) = -(emap(dsin_x_) * emap(coef) * emap(dct_)).eval();
  emap(f.field_y) = -(emap(dct_t_) * emap(coef) * emap(dsin_y_).transpose()).eval();
  return f;
}

double DensitySolver::energy(const Netlist& nl, const Placement& pl,
                             std::vector<Vec2>* grad) const {
  const Mat occ = splat(nl, pl);
  const Mat psi = solve(occ);  // DC of the input is irrelevant: solve zeroes it

  double value = 0.0;
  Mat sample_w(m_, m_);  // bilinear deposit of q at cell centers
  for (int i = 0; i < nl.num_cells(); ++i) {
    const double q = nl.cells[i].area();
    if (q <= 0.0) continue;
    const BilinSample s = locate(core_, bw_, bh_, m_, pl.pos[i]);
    const double w00 = (1 - s.tx) * (1 - s.ty), w10 = s.tx * (1 - s.ty);
    const double w01 = (1 - s.tx) * s.ty, w11 = s.tx * s.ty;
    value += q * (w00 * psi(s.i0, s.j0) + w10 * psi(s.i0 + 1, s.j0) +
                  w01 * psi(s.i0, s.j0 + 1) + w11 * psi(s.i0 + 1, s.j0 + 1));
    if (grad) {
      sample_w(s.i0, s.j0) += q * w00;
      sample_w(s.i0 + 1, s.j0) += q * w10;
      sample_w(s.i0, s.j0 + 1) += q * w01;
      sample_w(s.i0 + 1, s.j0 + 1) += q * w11;
    }
  }
  if (!grad) return value;

  grad->assign(nl.num_cells(), Vec2{0.0, 0.0});
  const Mat phi = solve(sample_w);  // adjoint potential; the solver is symmetric

  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal) continue;
    const Cell& c = nl.cells[i];
    const double q = c.area();
    Vec2 g{0.0, 0.0};
    if (q > 0.0) {
      // Sampling term: the cell's center moves through the frozen potential.
      const BilinSample s = locate(core_, bw_, bh_, m_, pl.pos[i]);
      if (s.free_x) {
        g.x += q / bw_ *
               ((1 - s.ty) * (psi(s.i0 + 1, s.j0) - psi(s.i0, s.j0)) +
                s.ty * (psi(s.i0 + 1, s.j0 + 1) - psi(s.i0, s.j0 + 1)));
      }
      if (s.free_y) {
        g.y += q / bh_ *
               ((1 - s.tx) * (psi(s.i0, s.j0 + 1) - psi(s.i0, s.j0)) +
                s.tx * (psi(s.i0 + 1, s.j0 + 1) - psi(s.i0 + 1, s.j0)));
      }
      // Field-response term: the moving charge changes psi everywhere; the
      // adjoint potential phi contracts that with the splat derivative,
      // which lives on the columns (rows) holding the cell's edges.
      const double xl = pl.pos[i].x - c.width / 2.0;
      const double xh = pl.pos[i].x + c.width / 2.0;
      const double yl = pl.pos[i].y - c.height / 2.0;
      const double yh = pl.pos[i].y + c.height / 2.0;
      const double cxl = std::max(xl, core_.x_lo), cxh = std::min(xh, core_.x_hi);
      const double cyl = std::max(yl, core_.y_lo), cyh = std::min(yh, core_.y_hi);
      if (cxl < cxh && cyl < cyh) {
        const int ix0 = std::min(m_ - 1, std::max(0, static_cast<int>((cxl - core_.x_lo) / bw_)));
        const int ix1 = std::min(m_ - 1, std::max(0, static_cast<int>((cxh - core_.x_lo) / bw_)));
        const int iy0 = std::min(m_ - 1, std::max(0, static_cast<int>((cyl - core_.y_lo) / bh_)));
        const int iy1 = std::min(m_ - 1, std::max(0, static_cast<int>((cyh - core_.y_lo) / bh_)));
        auto col_overlap = [&](int ix) {
          const double b = core_.x_lo + ix * bw_;
          return std::max(0.0, std::min(cxh, b + bw_) - std::max(cxl, b));
        };
        auto row_overlap = [&](int iy) {
          const double b = core_.y_lo + iy * bh_;
          return std::max(0.0, std::min(cyh, b + bh_) - std::max(cyl, b));
        };
        // d(column overlap)/dx is +1 in the column holding the right edge
        // and -1 in the one holding the left edge (they cancel when equal).
        // An edge flush with the core wall keeps its term (the one-sided
        // derivative from inside, which is what a clamped step sees).
        const bool right_in = xh <= core_.x_hi;
        const bool left_in = xl >= core_.x_lo;
        for (int iy = iy0; iy <= iy1; ++iy) {
          const double oy = row_overlap(iy);
          if (oy <= 0.0) continue;
          if (right_in) g.x += oy * phi(ix1, iy);
          if (left_in) g.x -= oy * phi(ix0, iy);
        }
        const bool top_in = yh <= core_.y_hi;
        const bool bot_in = yl >= core_.y_lo;
        for (int ix = ix0; ix <= ix1; ++ix) {
          const double ox = col_overlap(ix);
          if (ox <= 0.0) continue;
          if (top_in) g.y += ox * phi(ix, iy1);
          if (bot_in) g.y -= ox * phi(ix, iy0);
        }
      }
    }
    (*grad)[i] = g;
  }
  return value;
}

double DensitySolver::overflow_ratio(const Netlist& nl, const Placement& pl,
                                     double target_density) const {
  const Mat total = splat(nl, pl);
  const Mat mov = splat(nl, pl, /*movable_only=*/true);
  const double cap = target_density * bw_ * bh_;
  // Bins fully inside a cell land exactly on cap up to rounding; a tolerance
  // keeps them from counting as over-capacity on floating-point ties.
  const double tol = 1e-9 * std::max(cap, 1e-300);
  double over = 0.0;
  for (size_t b = 0; b < total.size(); ++b)
    if (total.v[b] > cap + tol) over += mov.v[b];
  double area = 0.0;
  for (int i = 0; i < nl.num_cells(); ++i)
    if (!nl.cells[i].is_terminal) area += nl.cells[i].area();
  return area > 0.0 ? over / area : 0.0;
}

}  // namespace gp
