#include "core/wirelength.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace gp {
namespace {

// One axis of one net. coords/weight buffers are scratch owned by the
// caller. Returns WA_max - WA_min and adds per-pin derivatives into dout.
double wa_axis(const std::vector<double>& x, double gamma, std::vector<double>* dout) {
  const size_t n = x.size();
  double hi = x[0], lo = x[0];
  for (double v : x) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  double a_hi = 0, b_hi = 0, a_lo = 0, b_lo = 0;
  for (double v : x) {
    const double wh = std::exp(gamma * (v - hi));
    const double wl = std::exp(-gamma * (v - lo));
    a_hi += v * wh;
    b_hi += wh;
    a_lo += v * wl;
    b_lo += wl;
  }
  if (dout) {
    for (size_t i = 0; i < n; ++i) {
      const double wh = std::exp(gamma * (x[i] - hi));
      const double wl = std::exp(-gamma * (x[i] - lo));
      const double d_hi = wh * ((1.0 + gamma * x[i]) * b_hi - gamma * a_hi) / (b_hi * b_hi);
      const double d_lo = wl * ((1.0 - gamma * x[i]) * b_lo + gamma * a_lo) / (b_lo * b_lo);
      (*dout)[i] = d_hi - d_lo;
    }
  }
  return a_hi / b_hi - a_lo / b_lo;
}

}  // namespace

double wa_wirelength(const Netlist& nl, const Placement& pl, double gamma,
                     std::vector<Vec2>* grad) {
  if (gamma <= 0.0) fail_usage("wa_wirelength: gamma must be positive");
  if (grad) grad->assign(nl.num_cells(), Vec2{0.0, 0.0});
  double total = 0.0;
  std::vector<double> xs, ys, dxs, dys;
  for (int u = 0; u < nl.num_nets(); ++u) {
    const int deg = nl.net_degree(u);
    xs.resize(deg);
    ys.resize(deg);
    for (int k = 0; k < deg; ++k) {
      const Pin& p = nl.pins[nl.net_pin_ids[nl.net_pin_start[u] + k]];
      xs[k] = pl.pos[p.cell].x + p.dx;
      ys[k] = pl.pos[p.cell].y + p.dy;
    }
    if (grad) {
      dxs.resize(deg);
      dys.resize(deg);
    }
    total += wa_axis(xs, gamma, grad ? &dxs : nullptr);
    total += wa_axis(ys, gamma, grad ? &dys : nullptr);
    if (grad) {
      for (int k = 0; k < deg; ++k) {
        const Pin& p = nl.pins[nl.net_pin_ids[nl.net_pin_start[u] + k]];
        (*grad)[p.cell].x += dxs[k];
        (*grad)[p.cell].y += dys[k];
      }
    }
  }
  return total;
}

}  // namespace gp
