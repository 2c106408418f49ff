#include "core/se2codec.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace gp {
namespace {

double terminal_reference(Vec2 p) {
  if (p.x == 0.0 && p.y == 0.0) return 0.0;
  return std::atan2(p.y, p.x);
}

}  // namespace

RelEncoding encode(const Netlist& nl, const CellFlow& flow, const Placement& pl) {
  if (pl.pos.size() != static_cast<size_t>(nl.num_cells()))
    fail_usage("placement size does not match netlist");
  const int ne = flow.num_edges();
  RelEncoding enc;
  enc.rho.resize(ne);
  enc.dtheta.resize(ne);
  std::vector<double> edge_theta(ne, 0.0);

  // Edges were appended in pop order of their sources, so the income edge of
  // any movable source is already resolved when an outgoing edge needs it.
  for (int e = 0; e < ne; ++e) {
    const int i = flow.edge_src[e];
    const int j = flow.edge_dst[e];
    const Vec2 d = pl.pos[j] - pl.pos[i];
    const double r = norm(d);
    const double ref = flow.income[i] >= 0 ? edge_theta[flow.income[i]]
                                           : terminal_reference(pl.pos[i]);
    double theta;
    if (r < kRhoEpsilon) {
      enc.rho[e] = kRhoEpsilon;
      theta = ref;  // direction undefined; keep the chain angle
    } else {
      enc.rho[e] = r;
      theta = std::atan2(d.y, d.x);
    }
    edge_theta[e] = theta;
    enc.dtheta[e] = wrap_angle(theta - ref);
  }
  return enc;
}

Placement decode(const Netlist& nl, const CellFlow& flow, const RelEncoding& enc) {
  const int nc = nl.num_cells();
  const int ne = flow.num_edges();
  if (static_cast<int>(enc.rho.size()) != ne || static_cast<int>(enc.dtheta.size()) != ne)
    fail_usage("encoding size does not match flow");

  std::vector<int> by_rank(nc, -1);
  for (int i = 0; i < nc; ++i)
    if (flow.pop_order[i] >= 0) by_rank[flow.pop_order[i]] = i;

  std::vector<double> chain_angle(nc, 0.0);
  std::vector<Vec2> chain_pos(nc);
  Placement out;
  out.pos.assign(nc, Vec2{});

  for (int r = 0; r < nc; ++r) {
    const int v = by_rank[r];
    if (v < 0) break;
    if (nl.cells[v].is_terminal) {
      chain_pos[v] = nl.terminal_pos[v];
      chain_angle[v] = terminal_reference(nl.terminal_pos[v]);
      out.pos[v] = nl.terminal_pos[v];
      continue;
    }
    // Chain state follows the income edge only (telescoped walk from the
    // terminal); the output position averages every incoming estimate.
    const int einc = flow.income[v];
    const int src = flow.edge_src[einc];
    const double a_inc = chain_angle[src] + enc.dtheta[einc];
    chain_angle[v] = a_inc;
    chain_pos[v] = chain_pos[src] +
                   Vec2{enc.rho[einc] * std::cos(a_inc), enc.rho[einc] * std::sin(a_inc)};

    Vec2 sum{0.0, 0.0};
    int n_in = 0;
    for (int k = flow.in_start[v]; k < flow.in_start[v + 1]; ++k) {
      const int e = flow.in_edges[k];
      const int s = flow.edge_src[e];
      const double a = chain_angle[s] + enc.dtheta[e];
      sum = sum + chain_pos[s] + Vec2{enc.rho[e] * std::cos(a), enc.rho[e] * std::sin(a)};
      ++n_in;
    }
    out.pos[v] = (1.0 / n_in) * sum;
  }
  return out;
}

}  // namespace gp
