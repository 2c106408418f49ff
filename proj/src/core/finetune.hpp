#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "core/netlist.hpp"

namespace gp {

struct RigidSpec {
  double theta_deg = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

struct FinetuneConfig {
  double learning_rate = 1e-3;  // step in normalized layout units
  double lambda_d_init = 0.1;   // scaled by |grad W|_1 / |grad D|_1 at start
  int max_iterations = 1000;
  double upper_pcof = 1.05;
  double gamma = 20.0;  // WA sharpness per normalized layout unit
  int grid_m = 128;     // density bins per side, power of two >= 16
  std::optional<RigidSpec> rigid;  // auto-fit when unset
  double stop_overflow = 0.1;
  // Divisor of delta-HPWL inside the lambda schedule. 0 selects the scaled
  // default 350000 * HPWL_0 / 1e7, which makes the schedule behave alike
  // across instance sizes; any positive value is used verbatim.
  double hpwl_divisor = 0.0;
  double target_density = 1.0;
};

// One multiplicative lambda step. mu = upper_pcof * max(0.999^epochs, 0.98)
// when delta_hpwl < 0, else upper_pcof^(1 - delta_hpwl / divisor).
double lambda_update(double lambda_d, double delta_hpwl, int epochs,
                     double upper_pcof, double divisor = 350000.0);

// Rotates movable positions by theta (degrees) about the core center, then
// translates by (dx, dy); terminals untouched; result clamped to the core.
Placement rigid_transform(const Netlist& nl, const Placement& pl,
                          double theta_deg, double dx, double dy);

// 12-angle HPWL search (0, 30, ..., 330 degrees, ties to the smaller
// angle) followed by one translation that centers the movable centroid.
Placement auto_fit_rigid(const Netlist& nl, const Placement& pl);

struct HistoryRow {
  int iter = 0;
  double hpwl = 0.0;      // layout units
  double wl = 0.0;        // WA wirelength term, normalized frame
  double density = 0.0;   // density term, normalized frame
  double lambda = 0.0;    // weight used for this iteration's step
  double overflow = 0.0;
};

struct FinetuneResult {
  Placement placement;
  std::vector<HistoryRow> history;
  int iterations = 0;
  double hpwl = 0.0;
  double overflow = 0.0;
};

// Gradient descent on movable positions for wirelength plus lambda * density
// with Nesterov momentum 0.9, working in the frame scaled by the longer
// core side. Applies cfg.rigid (auto-fit when unset) first, clamps to the
// core every step, and stops early once the overflow ratio drops under
// cfg.stop_overflow. When history_out is given, one JSON object per
// iteration is appended.
FinetuneResult finetune(const Netlist& nl, const Placement& init,
                        const FinetuneConfig& cfg, std::ostream* history_out);

}  // namespace gp
