#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "core/cellflow.hpp"
#include "core/density.hpp"
#include "core/errors.hpp"
#include "core/hier.hpp"

namespace gp {
namespace {

constexpr uint64_t kRcCalibrationSeed = 1729;

void spread_net(Mat& demand, const Rect& core, double bw, double bh, int m,
                double x_lo, double y_lo, double x_hi, double y_hi) {
  const double w = x_hi - x_lo, h = y_hi - y_lo;
  const double mass = w + h;
  if (mass <= 0.0) return;
  if (w <= 0.0 || h <= 0.0) {
    // Degenerate box: the whole perimeter demand lands in one bin.
    const double cx = (x_lo + x_hi) / 2.0, cy = (y_lo + y_hi) / 2.0;
    const int ix = std::min(m - 1, std::max(0, static_cast<int>((cx - core.x_lo) / bw)));
    const int iy = std::min(m - 1, std::max(0, static_cast<int>((cy - core.y_lo) / bh)));
    demand(ix, iy) += mass;
    return;
  }
  const double density = mass / (w * h);
  const int ix0 = std::min(m - 1, std::max(0, static_cast<int>((x_lo - core.x_lo) / bw)));
  const int ix1 = std::min(m - 1, std::max(0, static_cast<int>((x_hi - core.x_lo) / bw)));
  const int iy0 = std::min(m - 1, std::max(0, static_cast<int>((y_lo - core.y_lo) / bh)));
  const int iy1 = std::min(m - 1, std::max(0, static_cast<int>((y_hi - core.y_lo) / bh)));
  for (int ix = ix0; ix <= ix1; ++ix) {
    const double bx = core.x_lo + ix * bw;
    const double ox = std::min(x_hi, bx + bw) - std::max(x_lo, bx);
    if (ox <= 0.0) continue;
    for (int iy = iy0; iy <= iy1; ++iy) {
      const double by = core.y_lo + iy * bh;
      const double oy = std::min(y_hi, by + bh) - std::max(y_lo, by);
      if (oy > 0.0) demand(ix, iy) += density * ox * oy;
    }
  }
}

Mat demand_map(const Netlist& nl, const Placement& pl, int m) {
  Mat demand(m, m);
  const double bw = nl.core.width() / m;
  const double bh = nl.core.height() / m;
  for (int u = 0; u < nl.num_nets(); ++u) {
    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
    bool first = true;
    for (int k = nl.net_pin_start[u]; k < nl.net_pin_start[u + 1]; ++k) {
      const Pin& p = nl.pins[nl.net_pin_ids[k]];
      const double x = pl.pos[p.cell].x + p.dx;
      const double y = pl.pos[p.cell].y + p.dy;
      if (first) {
        x_lo = x_hi = x;
        y_lo = y_hi = y;
        first = false;
      } else {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
    spread_net(demand, nl.core, bw, bh, m, x_lo, y_lo, x_hi, y_hi);
  }
  return demand;
}

}  // namespace

CongestionGrid rudy_map(const Netlist& nl, const Placement& pl, int m, double rc) {
  if (m < 1) fail_usage("rudy_map: grid must be at least 1x1");
  if (rc < 0.0) fail_usage("rudy_map: negative capacity");
  if (nl.core.width() <= 0.0 || nl.core.height() <= 0.0)
    fail_usage("rudy_map: degenerate core region");
  CongestionGrid g;
  g.m = m;
  g.rc = rc;
  g.demand = demand_map(nl, pl, m);
  g.overflow = Mat(m, m);
  for (size_t i = 0; i < g.demand.size(); ++i) {
    g.overflow.v[i] = std::max(0.0, g.demand.v[i] - rc);
    g.tof += g.overflow.v[i];
  }
  return g;
}

double calibrate_rc(const Netlist& nl, int m) {
  const Placement pl = make_random_placement(nl, kRcCalibrationSeed);
  Mat demand = demand_map(nl, pl, m);
  std::sort(demand.v.begin(), demand.v.end());
  const size_t n = demand.size();
  const size_t rank = std::min(n - 1, static_cast<size_t>(std::ceil(0.8 * n)) - 1);
  return demand.v[rank];
}

nlohmann::json evaluate(const Netlist& nl, const Placement& pl,
                        const MetricsConfig& mcfg, const PartitionConfig& pcfg,
                        uint64_t seed, const nlohmann::json& runtime_breakdown) {
  const double rc = mcfg.rc > 0.0 ? mcfg.rc : calibrate_rc(nl, mcfg.grid_m);
  const CongestionGrid cong = rudy_map(nl, pl, mcfg.grid_m, rc);

  const DensitySolver solver(nl.core, mcfg.density_grid);
  const double dens_overflow = solver.overflow_ratio(nl, pl, mcfg.target_density);

  const CellFlow flow = build_cellflow(nl);
  const HierNetlist hier = build_hierarchy(nl, partition(nl, pcfg));

  nlohmann::json report;
  report["hpwl"] = hpwl(nl, pl);
  report["tof"] = cong.tof;
  report["rc"] = rc;
  report["density_overflow_ratio"] = dens_overflow;
  report["eta"] = hier.eta;
  report["omega"] = mean_path_length(nl, flow);
  report["num_flow_edges"] = flow.num_edges();
  report["num_pins"] = nl.num_pins();
  report["num_cells"] = nl.num_cells();
  report["num_nets"] = nl.num_nets();
  report["seed"] = seed;
  report["runtime_breakdown"] =
      runtime_breakdown.is_object() ? runtime_breakdown : nlohmann::json::object();
  return report;
}

}  // namespace gp
