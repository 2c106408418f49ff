#include "core/finetune.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"

#include "core/density.hpp"
#include "core/errors.hpp"
#include "core/wirelength.hpp"

namespace gp {

double lambda_update(double lambda_d, double delta_hpwl, int epochs,
                     double upper_pcof, double divisor) {
  if (lambda_d <= 0.0) fail_usage("lambda_update: lambda_d must be positive");
  if (divisor <= 0.0) fail_usage("lambda_update: divisor must be positive");
  double mu;
  if (delta_hpwl < 0.0) {
    mu = upper_pcof * std::max(std::pow(0.999, epochs), 0.98);
  } else {
    mu = std::pow(upper_pcof, 1.0 - delta_hpwl / divisor);
  }
  return lambda_d * mu;
}

Placement rigid_transform(const Netlist& nl, const Placement& pl,
                          double theta_deg, double dx, double dy) {
  if (!std::isfinite(theta_deg) || !std::isfinite(dx) || !std::isfinite(dy))
    fail_usage("rigid_transform: non-finite parameters");
  const double th = theta_deg * kPi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const Vec2 ctr{(nl.core.x_lo + nl.core.x_hi) / 2.0,
                 (nl.core.y_lo + nl.core.y_hi) / 2.0};
  Placement out = pl;
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal) continue;
    const Vec2 r = pl.pos[i] - ctr;
    out.pos[i] = {ctr.x + c * r.x - s * r.y + dx, ctr.y + s * r.x + c * r.y + dy};
  }
  clamp_to_core(nl, out);
  return out;
}

Placement auto_fit_rigid(const Netlist& nl, const Placement& pl) {
  double best_hpwl = 0.0;
  int best_k = 0;
  for (int k = 0; k < 12; ++k) {
    const Placement cand = rigid_transform(nl, pl, 30.0 * k, 0.0, 0.0);
    const double h = hpwl(nl, cand);
    if (k == 0 || h < best_hpwl) {
      best_hpwl = h;
      best_k = k;
    }
  }
  // Center the rotated (unclamped) movable centroid, then clamp once.
  const double th = best_k * 30.0 * kPi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const Vec2 ctr{(nl.core.x_lo + nl.core.x_hi) / 2.0,
                 (nl.core.y_lo + nl.core.y_hi) / 2.0};
  Vec2 centroid{0.0, 0.0};
  int n_mov = 0;
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal) continue;
    const Vec2 r = pl.pos[i] - ctr;
    centroid = centroid + Vec2{ctr.x + c * r.x - s * r.y, ctr.y + s * r.x + c * r.y};
    ++n_mov;
  }
  if (n_mov == 0) return pl;
  centroid = centroid * (1.0 / n_mov);
  return rigid_transform(nl, pl, 30.0 * best_k, ctr.x - centroid.x, ctr.y - centroid.y);
}

namespace {

Netlist scale_netlist(const Netlist& nl, double s) {
  Netlist out = nl;
  for (Cell& c : out.cells) {
    c.width *= s;
    c.height *= s;
  }
  for (Pin& p : out.pins) {
    p.dx *= s;
    p.dy *= s;
  }
  for (Vec2& t : out.terminal_pos) t = t * s;
  out.core = {nl.core.x_lo * s, nl.core.y_lo * s, nl.core.x_hi * s, nl.core.y_hi * s};
  return out;
}

bool power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace

FinetuneResult finetune(const Netlist& nl, const Placement& init,
                        const FinetuneConfig& cfg, std::ostream* history_out) {
  if (cfg.learning_rate <= 0.0) fail_usage("finetune: learning_rate must be positive");
  if (cfg.gamma <= 0.0) fail_usage("finetune: gamma must be positive");
  if (!power_of_two(cfg.grid_m) || cfg.grid_m < 16)
    fail_usage("finetune: grid_m must be a power of two >= 16");
  if (cfg.max_iterations < 0) fail_usage("finetune: negative iteration count");

  Placement start = cfg.rigid
                        ? rigid_transform(nl, init, cfg.rigid->theta_deg,
                                          cfg.rigid->dx, cfg.rigid->dy)
                        : auto_fit_rigid(nl, init);

  const double span = std::max(nl.core.width(), nl.core.height());
  if (span <= 0.0) fail_usage("finetune: degenerate core region");
  const double s = 1.0 / span;
  const Netlist snl = scale_netlist(nl, s);
  Placement spl;
  spl.pos.resize(start.pos.size());
  for (size_t i = 0; i < start.pos.size(); ++i) spl.pos[i] = start.pos[i] * s;

  const DensitySolver solver(snl.core, cfg.grid_m);
  const int n = nl.num_cells();

  std::vector<Vec2> gw, gd, grad(n), vel(n, Vec2{0.0, 0.0});
  Placement look = spl;

  // Balance the two objective terms at the starting point.
  wa_wirelength(snl, spl, cfg.gamma, &gw);
  solver.energy(snl, spl, &gd);
  double nw = 0.0, nd = 0.0;
  for (int i = 0; i < n; ++i) {
    if (nl.cells[i].is_terminal) continue;
    nw += std::abs(gw[i].x) + std::abs(gw[i].y);
    nd += std::abs(gd[i].x) + std::abs(gd[i].y);
  }
  double lambda = nd > 0.0 ? cfg.lambda_d_init * nw / nd : cfg.lambda_d_init;
  if (lambda <= 0.0) lambda = cfg.lambda_d_init;

  double prev_hpwl = hpwl(snl, spl) / s;
  const double divisor = cfg.hpwl_divisor > 0.0
                             ? cfg.hpwl_divisor
                             : 350000.0 * std::max(prev_hpwl, 1e-12) / 1e7;
  const double mom = 0.9;
  const double max_move = 1.0 / cfg.grid_m;

  FinetuneResult res;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (int i = 0; i < n; ++i) look.pos[i] = spl.pos[i] + vel[i] * mom;
    clamp_to_core(snl, look);
    const double wl = wa_wirelength(snl, look, cfg.gamma, &gw);
    const double dl = solver.energy(snl, look, &gd);
    double check = 0.0;
    for (int i = 0; i < n; ++i) {
      grad[i] = gw[i] + gd[i] * lambda;
      check += grad[i].x + grad[i].y;
    }
    if (!std::isfinite(check))
      fail_numeric("finetune: non-finite gradient at iteration " + std::to_string(it));

    const Placement prev_pos = spl;
    for (int i = 0; i < n; ++i) {
      if (nl.cells[i].is_terminal) continue;
      vel[i] = vel[i] * mom - grad[i] * cfg.learning_rate;
      spl.pos[i] = spl.pos[i] + vel[i];
      // Fixed-step NAG has no line search, so a per-iteration move limit of
      // one bin keeps a large lambda from slingshotting cells across the core.
      const double dx = spl.pos[i].x - prev_pos.pos[i].x;
      const double dy = spl.pos[i].y - prev_pos.pos[i].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > max_move)
        spl.pos[i] = {prev_pos.pos[i].x + dx * (max_move / d),
                      prev_pos.pos[i].y + dy * (max_move / d)};
    }
    clamp_to_core(snl, spl);
    // Velocity keeps only the movement that survived clamping, so walls
    // absorb momentum instead of storing it.
    for (int i = 0; i < n; ++i)
      if (!nl.cells[i].is_terminal) vel[i] = spl.pos[i] - prev_pos.pos[i];

    const double cur_hpwl = hpwl(snl, spl) / s;
    const double overflow = solver.overflow_ratio(snl, spl, cfg.target_density);

    HistoryRow row;
    row.iter = it;
    row.hpwl = cur_hpwl;
    row.wl = wl;
    row.density = dl;
    row.lambda = lambda;
    row.overflow = overflow;
    res.history.push_back(row);
    if (history_out) {
      nlohmann::json j{{"iter", row.iter},     {"hpwl", row.hpwl},
                       {"wl", row.wl},         {"density", row.density},
                       {"lambda", row.lambda}, {"overflow", row.overflow}};
      *history_out << j.dump() << "\n";
    }

    lambda = lambda_update(lambda, cur_hpwl - prev_hpwl, it, cfg.upper_pcof, divisor);
    prev_hpwl = cur_hpwl;
    res.iterations = it + 1;
    if (overflow < cfg.stop_overflow) break;
  }

  res.placement.pos.resize(n);
  for (int i = 0; i < n; ++i) {
    res.placement.pos[i] =
        nl.cells[i].is_terminal ? nl.terminal_pos[i] : spl.pos[i] * (1.0 / s);
  }
  res.hpwl = hpwl(nl, res.placement);
  res.overflow = res.history.empty() ? solver.overflow_ratio(snl, spl, cfg.target_density)
                                     : res.history.back().overflow;
  return res;
}

}  // namespace gp
