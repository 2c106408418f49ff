#include "core/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace gp {

int Netlist::num_terminals() const {
  int n = 0;
  for (const Cell& c : cells)
    if (c.is_terminal) ++n;
  return n;
}

void Netlist::finalize() {
  const int nc = num_cells();
  const int nn = num_nets();
  for (const Pin& p : pins)
    if (p.cell < 0 || p.cell >= nc || p.net < 0 || p.net >= nn)
      fail_validation("pin references unknown cell or net");
  cell_pin_start.assign(nc + 1, 0);
  net_pin_start.assign(nn + 1, 0);
  for (const Pin& p : pins) {
    ++cell_pin_start[p.cell + 1];
    ++net_pin_start[p.net + 1];
  }
  std::partial_sum(cell_pin_start.begin(), cell_pin_start.end(), cell_pin_start.begin());
  std::partial_sum(net_pin_start.begin(), net_pin_start.end(), net_pin_start.begin());
  cell_pin_ids.resize(pins.size());
  net_pin_ids.resize(pins.size());
  std::vector<int> ccur(cell_pin_start.begin(), cell_pin_start.end() - 1);
  std::vector<int> ncur(net_pin_start.begin(), net_pin_start.end() - 1);
  for (int i = 0; i < static_cast<int>(pins.size()); ++i) {
    cell_pin_ids[ccur[pins[i].cell]++] = i;
    net_pin_ids[ncur[pins[i].net]++] = i;
  }
}

namespace {

// Union-find over cells; pins of one net are merged into one set.
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void Netlist::validate(bool require_terminal_reach) const {
  const int nc = num_cells();
  const int nn = num_nets();
  if (cell_pin_start.size() != static_cast<size_t>(nc) + 1)
    fail_validation("netlist not finalized");
  if (core.width() <= 0.0 || core.height() <= 0.0)
    fail_validation("core region is empty");
  for (int i = 0; i < nc; ++i) {
    const Cell& c = cells[i];
    if (c.width < 0.0 || c.height < 0.0 || !std::isfinite(c.width) || !std::isfinite(c.height))
      fail_validation("cell '" + c.name + "' has invalid dimensions");
    if (c.is_terminal && !core.contains(terminal_pos[i]))
      fail_validation("terminal '" + c.name + "' lies outside the core region");
  }
  std::vector<char> seen(pins.size(), 0);
  for (const Pin& p : pins) {
    if (p.cell < 0 || p.cell >= nc) fail_validation("pin references unknown cell");
    if (p.net < 0 || p.net >= nn) fail_validation("pin references unknown net");
  }
  // No duplicate (cell, net) pair.
  {
    std::vector<std::pair<int, int>> keys;
    keys.reserve(pins.size());
    for (const Pin& p : pins) keys.emplace_back(p.cell, p.net);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      fail_validation("duplicate (cell, net) pin pair");
  }
  for (int u = 0; u < nn; ++u) {
    if (net_degree(u) < 2)
      fail_validation("net '" + net_names[u] + "' has degree < 2");
  }
  if (require_terminal_reach) {
    DisjointSet ds(nc);
    for (int u = 0; u < nn; ++u) {
      const int first = pins[net_pin_ids[net_pin_start[u]]].cell;
      for (int k = net_pin_start[u] + 1; k < net_pin_start[u + 1]; ++k)
        ds.merge(first, pins[net_pin_ids[k]].cell);
    }
    std::vector<char> root_has_terminal(nc, 0);
    for (int i = 0; i < nc; ++i)
      if (cells[i].is_terminal) root_has_terminal[ds.find(i)] = 1;
    for (int i = 0; i < nc; ++i) {
      if (!cells[i].is_terminal && !root_has_terminal[ds.find(i)])
        fail_validation("cell '" + cells[i].name +
                        "' is in a connected component with no terminal");
    }
  }
  (void)seen;
}

Placement make_centered_placement(const Netlist& nl) {
  Placement pl;
  pl.pos.resize(nl.num_cells());
  const Vec2 center{(nl.core.x_lo + nl.core.x_hi) / 2.0,
                    (nl.core.y_lo + nl.core.y_hi) / 2.0};
  for (int i = 0; i < nl.num_cells(); ++i)
    pl.pos[i] = nl.cells[i].is_terminal ? nl.terminal_pos[i] : center;
  return pl;
}

void clamp_to_core(const Netlist& nl, Placement& pl) {
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal) continue;
    const double hw = nl.cells[i].width / 2.0;
    const double hh = nl.cells[i].height / 2.0;
    Vec2& p = pl.pos[i];
    if (nl.core.x_lo + hw > nl.core.x_hi - hw) {
      p.x = (nl.core.x_lo + nl.core.x_hi) / 2.0;
    } else {
      p.x = std::min(nl.core.x_hi - hw, std::max(nl.core.x_lo + hw, p.x));
    }
    if (nl.core.y_lo + hh > nl.core.y_hi - hh) {
      p.y = (nl.core.y_lo + nl.core.y_hi) / 2.0;
    } else {
      p.y = std::min(nl.core.y_hi - hh, std::max(nl.core.y_lo + hh, p.y));
    }
  }
}

Placement make_random_placement(const Netlist& nl, uint64_t seed) {
  Placement pl;
  pl.pos.resize(nl.num_cells());
  Rng rng(seed);
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal) {
      pl.pos[i] = nl.terminal_pos[i];
    } else {
      pl.pos[i] = {rng.uniform(nl.core.x_lo, nl.core.x_hi),
                   rng.uniform(nl.core.y_lo, nl.core.y_hi)};
    }
  }
  return pl;
}

void cell_feature_row(double width, double height, int degree, bool is_terminal,
                      double* out5) {
  out5[0] = std::log1p(width);
  out5[1] = std::log1p(height);
  out5[2] = std::log1p(width * height);
  out5[3] = std::log1p(static_cast<double>(degree));
  out5[4] = is_terminal ? 1.0 : 0.0;
}

void pin_feature_row(double dx, double dy, double cell_width, double cell_height,
                     int cell_degree, int net_degree, bool is_terminal,
                     double* out8) {
  const double wn = cell_width > 0.0 ? cell_width : 1.0;
  const double hn = cell_height > 0.0 ? cell_height : 1.0;
  out8[0] = dx / wn;
  out8[1] = dy / hn;
  out8[2] = std::log1p(static_cast<double>(cell_degree));
  out8[3] = std::log1p(static_cast<double>(net_degree));
  out8[4] = is_terminal ? 1.0 : 0.0;
  out8[5] = 0.0;
  out8[6] = 0.0;
  out8[7] = 0.0;
}

FeatureSet featurize(const Netlist& nl) {
  FeatureSet fs;
  fs.x_cell = Mat(nl.num_cells(), kCellFeatureDim);
  fs.x_net = Mat(nl.num_nets(), kNetFeatureDim);
  fs.x_pin = Mat(nl.num_pins(), kPinFeatureDim);
  for (int i = 0; i < nl.num_cells(); ++i) {
    const Cell& c = nl.cells[i];
    cell_feature_row(c.width, c.height, nl.cell_degree(i), c.is_terminal, fs.x_cell.row(i));
  }
  for (int u = 0; u < nl.num_nets(); ++u)
    fs.x_net(u, 0) = std::log1p(static_cast<double>(nl.net_degree(u)));
  for (int p = 0; p < nl.num_pins(); ++p) {
    const Pin& pin = nl.pins[p];
    const Cell& c = nl.cells[pin.cell];
    pin_feature_row(pin.dx, pin.dy, c.width, c.height, nl.cell_degree(pin.cell),
                    nl.net_degree(pin.net), c.is_terminal, fs.x_pin.row(p));
  }
  return fs;
}

double hpwl(const Netlist& nl, const Placement& pl) {
  double total = 0.0;
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
    total += (x_hi - x_lo) + (y_hi - y_lo);
  }
  return total;
}

}  // namespace gp
