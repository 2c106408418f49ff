#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace gp {
namespace {

constexpr int kMaxNetDegree = 64;

struct GridIndex {
  int g;
  double cell_w, cell_h;
  Rect core;
  std::vector<std::vector<int>> buckets;

  GridIndex(const Rect& r, int n) : core(r) {
    g = std::max(1, static_cast<int>(std::sqrt(n / 8.0)));
    cell_w = r.width() / g;
    cell_h = r.height() / g;
    buckets.resize(static_cast<size_t>(g) * g);
  }
  int bucket_of(Vec2 p) const {
    int bx = std::clamp(static_cast<int>((p.x - core.x_lo) / cell_w), 0, g - 1);
    int by = std::clamp(static_cast<int>((p.y - core.y_lo) / cell_h), 0, g - 1);
    return by * g + bx;
  }
  void insert(int id, Vec2 p) { buckets[bucket_of(p)].push_back(id); }

  // Cells in the square ring of buckets at Chebyshev distance `ring` around p.
  void collect_ring(Vec2 p, int ring, std::vector<int>& out) const {
    int bx = std::clamp(static_cast<int>((p.x - core.x_lo) / cell_w), 0, g - 1);
    int by = std::clamp(static_cast<int>((p.y - core.y_lo) / cell_h), 0, g - 1);
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const int x = bx + dx, y = by + dy;
        if (x < 0 || x >= g || y < 0 || y >= g) continue;
        const auto& b = buckets[static_cast<size_t>(y) * g + x];
        out.insert(out.end(), b.begin(), b.end());
      }
    }
  }
};

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

Netlist generate_synthetic(const SynthSpec& spec, Placement* latent) {
  if (spec.n_movable < 1) fail_usage("generator needs at least one movable cell");
  if (spec.n_terminals < 1) fail_usage("generator needs at least one terminal");
  if (spec.avg_net_degree < 2.0) fail_usage("average net degree must be >= 2");
  const int total = spec.n_movable + spec.n_terminals;
  if (spec.avg_net_degree > total)
    fail_usage("infeasible spec: average net degree exceeds cell count");

  Netlist nl;
  nl.core = spec.core;
  if (nl.core.width() <= 0.0 || nl.core.height() <= 0.0) {
    // Default die: sized so movable cells fill roughly 55% of it.
    const double side = std::ceil(std::sqrt(spec.n_movable * 16.0 / 0.55));
    nl.core = {0.0, 0.0, side, side};
  }

  Rng size_rng(stage_seed(spec.seed, "synth.sizes"));
  Rng pos_rng(stage_seed(spec.seed, "synth.positions"));
  Rng net_rng(stage_seed(spec.seed, "synth.nets"));
  Rng off_rng(stage_seed(spec.seed, "synth.offsets"));

  // Movable cells: mostly standard-cell sized with a few larger blocks.
  double area_sum = 0.0;
  for (int i = 0; i < spec.n_movable; ++i) {
    Cell c;
    c.name = "o" + std::to_string(i);
    if (size_rng.uniform(0.0, 1.0) < 0.08) {
      c.width = size_rng.uniform(8.0, 24.0);
      c.height = size_rng.uniform(8.0, 24.0);
    } else {
      c.width = size_rng.uniform(1.5, 5.0);
      c.height = size_rng.uniform(1.5, 5.0);
    }
    area_sum += c.area();
    nl.cells.push_back(std::move(c));
  }
  // Rescale so total movable area is 55% of the core.
  const double scale = std::sqrt(0.55 * nl.core.area() / area_sum);
  for (Cell& c : nl.cells) {
    c.width *= scale;
    c.height *= scale;
  }
  for (int j = 0; j < spec.n_terminals; ++j) {
    Cell c;
    c.name = "p" + std::to_string(j);
    c.is_terminal = true;
    c.width = 2.0;
    c.height = 2.0;
    nl.cells.push_back(std::move(c));
  }

  // Latent positions: movables uniform in the core, most terminals on the
  // boundary like IO pads, the rest inside like preplaced macros.
  std::vector<Vec2> lp(total);
  for (int i = 0; i < spec.n_movable; ++i)
    lp[i] = {pos_rng.uniform(nl.core.x_lo, nl.core.x_hi),
             pos_rng.uniform(nl.core.y_lo, nl.core.y_hi)};
  nl.terminal_pos.assign(total, Vec2{});
  const double perim = 2.0 * (nl.core.width() + nl.core.height());
  for (int j = 0; j < spec.n_terminals; ++j) {
    const int id = spec.n_movable + j;
    Vec2 p;
    if (pos_rng.uniform(0.0, 1.0) < 0.8) {
      double t = pos_rng.uniform(0.0, perim);
      if (t < nl.core.width()) {
        p = {nl.core.x_lo + t, nl.core.y_lo};
      } else if (t < nl.core.width() + nl.core.height()) {
        p = {nl.core.x_hi, nl.core.y_lo + (t - nl.core.width())};
      } else if (t < 2.0 * nl.core.width() + nl.core.height()) {
        p = {nl.core.x_hi - (t - nl.core.width() - nl.core.height()), nl.core.y_hi};
      } else {
        p = {nl.core.x_lo, nl.core.y_hi - (t - 2.0 * nl.core.width() - nl.core.height())};
      }
    } else {
      p = {pos_rng.uniform(nl.core.x_lo, nl.core.x_hi),
           pos_rng.uniform(nl.core.y_lo, nl.core.y_hi)};
    }
    lp[id] = p;
    nl.terminal_pos[id] = p;
  }

  GridIndex grid(nl.core, total);
  for (int i = 0; i < total; ++i) grid.insert(i, lp[i]);

  // Nets: every cell seeds at least one net; members are sampled from the
  // seed's latent neighborhood. Shifted-geometric degrees, mean matching the
  // requested average, capped at kMaxNetDegree.
  const int n_nets = std::max(1, static_cast<int>(std::lround(total * 1.15)));
  const double p_geom =
      spec.avg_net_degree <= 2.0 ? 1.0 : 1.0 / (spec.avg_net_degree - 1.0);
  std::vector<int> candidates;
  for (int u = 0; u < n_nets; ++u) {
    int degree = 2;
    while (degree < kMaxNetDegree && net_rng.uniform(0.0, 1.0) > p_geom) ++degree;
    degree = std::min(degree, total);
    const int seed_cell = u % total;
    std::vector<int> members{seed_cell};
    candidates.clear();
    int ring = 0;
    while (static_cast<int>(members.size()) < degree) {
      // Grow the candidate pool outward until it can cover the net.
      while (static_cast<int>(candidates.size()) < 4 * degree && ring <= grid.g) {
        grid.collect_ring(lp[seed_cell], ring, candidates);
        ++ring;
      }
      bool added = false;
      for (int tries = 0; tries < 8 && !added; ++tries) {
        const int pick = candidates[static_cast<size_t>(
            net_rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))];
        if (std::find(members.begin(), members.end(), pick) == members.end()) {
          members.push_back(pick);
          added = true;
        }
      }
      if (!added) {
        if (ring > grid.g) break;  // pool exhausted (tiny instances)
        grid.collect_ring(lp[seed_cell], ring, candidates);
        ++ring;
      }
    }
    if (static_cast<int>(members.size()) < 2) continue;
    const int net_id = nl.num_nets();
    nl.net_names.push_back("n" + std::to_string(net_id));
    for (int cell : members) nl.pins.push_back({cell, net_id, 0.0, 0.0});
  }

  // Connectivity repair: every component must contain a terminal. Link each
  // terminal-free component to the latent-nearest terminal with a 2-pin net.
  DisjointSet ds(total);
  {
    size_t k = 0;
    for (int u = 0; u < nl.num_nets(); ++u) {
      size_t start = k;
      while (k < nl.pins.size() && nl.pins[k].net == u) ++k;
      for (size_t i = start + 1; i < k; ++i) ds.merge(nl.pins[start].cell, nl.pins[i].cell);
    }
  }
  std::vector<char> comp_ok(total, 0);
  for (int j = 0; j < spec.n_terminals; ++j) comp_ok[ds.find(spec.n_movable + j)] = 1;
  for (int i = 0; i < spec.n_movable; ++i) {
    if (comp_ok[ds.find(i)]) continue;
    // Nearest terminal by latent distance.
    int best = spec.n_movable;
    double best_d = norm(lp[i] - lp[best]);
    for (int j = 1; j < spec.n_terminals; ++j) {
      const double d = norm(lp[i] - lp[spec.n_movable + j]);
      if (d < best_d) {
        best_d = d;
        best = spec.n_movable + j;
      }
    }
    const int net_id = nl.num_nets();
    nl.net_names.push_back("n" + std::to_string(net_id));
    nl.pins.push_back({i, net_id, 0.0, 0.0});
    nl.pins.push_back({best, net_id, 0.0, 0.0});
    comp_ok[ds.find(i)] = 0;  // recompute after merge
    ds.merge(i, best);
    comp_ok[ds.find(i)] = 1;
  }

  // Pin offsets, inside the owning cell.
  for (Pin& p : nl.pins) {
    const Cell& c = nl.cells[p.cell];
    p.dx = off_rng.uniform(-0.4, 0.4) * c.width;
    p.dy = off_rng.uniform(-0.4, 0.4) * c.height;
  }

  nl.finalize();
  nl.validate();
  if (latent != nullptr) {
    latent->pos = lp;
  }
  return nl;
}

}  // namespace gp
