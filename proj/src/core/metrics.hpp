#pragma once

#include <cstdint>

#include "json.hpp"

#include "core/netlist.hpp"
#include "core/partition.hpp"
#include "core/types.hpp"

namespace gp {

// Wire-demand grid. Each net spreads (bbox_w + bbox_h) / (bbox_w * bbox_h)
// per unit area across its bounding box, so a net's deposited demand totals
// its half-perimeter.
struct CongestionGrid {
  int m = 0;
  double rc = 0.0;  // uniform per-bin capacity
  Mat demand;
  Mat overflow;  // max(0, demand - rc)
  double tof = 0.0;
};

CongestionGrid rudy_map(const Netlist& nl, const Placement& pl, int m, double rc);

// Capacity that puts about 20% of bins over capacity for a uniform random
// placement of this netlist (the 80th percentile of bin demands under a
// fixed internal seed). Deterministic per netlist.
double calibrate_rc(const Netlist& nl, int m);

struct MetricsConfig {
  int grid_m = 64;
  double rc = 0.0;  // 0 -> calibrate_rc
  int density_grid = 128;
  double target_density = 1.0;
};

// Quality report: hpwl, tof, density_overflow_ratio, eta, omega, flow and
// pin counts, the run seed, and the caller-supplied runtime breakdown.
// Deterministic given inputs; inputs are not mutated.
nlohmann::json evaluate(const Netlist& nl, const Placement& pl,
                        const MetricsConfig& mcfg, const PartitionConfig& pcfg,
                        uint64_t seed, const nlohmann::json& runtime_breakdown);

}  // namespace gp
