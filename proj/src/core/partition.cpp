#include "core/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "core/errors.hpp"

namespace gp {
namespace {

// Local hypergraph view used during bisection. Vertices carry a weight,
// which is the number of original cells a coarse vertex represents.
struct HyperGraph {
  int n = 0;
  std::vector<int> weight;
  std::vector<std::vector<int>> net_pins;   // per net, distinct vertex ids
  std::vector<std::vector<int>> vertex_nets;

  void build_adjacency() {
    vertex_nets.assign(n, {});
    for (int u = 0; u < static_cast<int>(net_pins.size()); ++u)
      for (int v : net_pins[u]) vertex_nets[v].push_back(u);
  }
};

HyperGraph induce(const Netlist& nl, const std::vector<int>& cells,
                  std::vector<int>& local_of) {
  HyperGraph hg;
  hg.n = static_cast<int>(cells.size());
  hg.weight.assign(hg.n, 1);
  for (int i = 0; i < hg.n; ++i) local_of[cells[i]] = i;
  std::vector<int> scratch;
  std::vector<char> net_seen(nl.num_nets(), 0);
  for (int idx = 0; idx < hg.n; ++idx) {
    const int c = cells[idx];
    for (int k = nl.cell_pin_start[c]; k < nl.cell_pin_start[c + 1]; ++k) {
      const int u = nl.pins[nl.cell_pin_ids[k]].net;
      if (net_seen[u]) continue;
      net_seen[u] = 1;
      scratch.clear();
      for (int m = nl.net_pin_start[u]; m < nl.net_pin_start[u + 1]; ++m) {
        const int w = nl.pins[nl.net_pin_ids[m]].cell;
        if (local_of[w] >= 0) scratch.push_back(local_of[w]);
      }
      if (scratch.size() >= 2) hg.net_pins.push_back(scratch);
    }
  }
  for (int c : cells)
    for (int k = nl.cell_pin_start[c]; k < nl.cell_pin_start[c + 1]; ++k)
      net_seen[nl.pins[nl.cell_pin_ids[k]].net] = 0;
  hg.build_adjacency();
  return hg;
}

// One clustering level: greedy heavy-edge matching by id order.
HyperGraph coarsen(const HyperGraph& fine, std::vector<int>& coarse_of) {
  const int n = fine.n;
  coarse_of.assign(n, -1);
  std::vector<double> rating(n, 0.0);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    if (coarse_of[v] >= 0) continue;
    // Best unmatched neighbor by connectivity rating 1/(|u|-1).
    int best = -1;
    double best_r = 0.0;
    for (int u : fine.vertex_nets[v]) {
      const double r = 1.0 / (fine.net_pins[u].size() - 1.0);
      for (int w : fine.net_pins[u]) {
        if (w == v || coarse_of[w] >= 0) continue;
        rating[w] += r;
        if (rating[w] > best_r || (rating[w] == best_r && (best < 0 || w < best))) {
          best_r = rating[w];
          best = w;
        }
      }
    }
    for (int u : fine.vertex_nets[v])
      for (int w : fine.net_pins[u]) rating[w] = 0.0;
    coarse_of[v] = next;
    if (best >= 0) coarse_of[best] = next;
    ++next;
  }
  HyperGraph coarse;
  coarse.n = next;
  coarse.weight.assign(next, 0);
  for (int v = 0; v < n; ++v) coarse.weight[coarse_of[v]] += fine.weight[v];
  std::vector<int> scratch;
  std::set<std::vector<int>> dedup;
  for (const auto& pins : fine.net_pins) {
    scratch.clear();
    for (int v : pins) scratch.push_back(coarse_of[v]);
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    if (scratch.size() >= 2 && dedup.insert(scratch).second)
      coarse.net_pins.push_back(scratch);
  }
  coarse.build_adjacency();
  return coarse;
}

int cut_of(const HyperGraph& hg, const std::vector<char>& side) {
  int cut = 0;
  for (const auto& pins : hg.net_pins) {
    const char s0 = side[pins[0]];
    for (size_t i = 1; i < pins.size(); ++i) {
      if (side[pins[i]] != s0) {
        ++cut;
        break;
      }
    }
  }
  return cut;
}

// One FM pass. side[] is updated in place; returns the cut after the pass.
int fm_pass(const HyperGraph& hg, std::vector<char>& side, int w_min, int w_max) {
  const int n = hg.n;
  const int nn = static_cast<int>(hg.net_pins.size());
  std::vector<int> cnt[2];
  cnt[0].assign(nn, 0);
  cnt[1].assign(nn, 0);
  for (int u = 0; u < nn; ++u)
    for (int v : hg.net_pins[u]) ++cnt[static_cast<int>(side[v])][u];
  int w[2] = {0, 0};
  for (int v = 0; v < n; ++v) w[static_cast<int>(side[v])] += hg.weight[v];

  std::vector<int> gain(n, 0);
  for (int v = 0; v < n; ++v) {
    for (int u : hg.vertex_nets[v]) {
      const int from = side[v];
      if (cnt[from][u] == 1) ++gain[v];
      if (cnt[1 - from][u] == 0) --gain[v];
    }
  }
  // Ordered by (-gain, id): deterministic max-gain selection.
  std::set<std::pair<int, int>> order;
  std::vector<char> locked(n, 0);
  for (int v = 0; v < n; ++v) order.insert({-gain[v], v});

  auto regain = [&](int v, int delta) {
    order.erase({-gain[v], v});
    gain[v] += delta;
    order.insert({-gain[v], v});
  };

  int cut = cut_of(hg, side);
  int best_cut = cut;
  std::vector<int> moves;
  int best_prefix = 0;

  for (int step = 0; step < n; ++step) {
    int pick = -1;
    for (const auto& [ng, v] : order) {
      const int from = side[v];
      const int nw_from = w[from] - hg.weight[v];
      const int nw_to = w[1 - from] + hg.weight[v];
      if (nw_from >= w_min && nw_to <= w_max) {
        pick = v;
        break;
      }
    }
    if (pick < 0) break;
    const int v = pick;
    const int from = side[v];
    const int to = 1 - from;
    order.erase({-gain[v], v});
    locked[v] = 1;
    cut -= gain[v];
    w[from] -= hg.weight[v];
    w[to] += hg.weight[v];
    for (int u : hg.vertex_nets[v]) {
      if (cnt[to][u] == 0) {
        for (int x : hg.net_pins[u])
          if (!locked[x]) regain(x, +1);
      } else if (cnt[to][u] == 1) {
        for (int x : hg.net_pins[u])
          if (!locked[x] && side[x] == to) regain(x, -1);
      }
      --cnt[from][u];
      ++cnt[to][u];
      if (cnt[from][u] == 0) {
        for (int x : hg.net_pins[u])
          if (!locked[x]) regain(x, -1);
      } else if (cnt[from][u] == 1) {
        for (int x : hg.net_pins[u])
          if (!locked[x] && side[x] == from) regain(x, +1);
      }
    }
    side[v] = static_cast<char>(to);
    moves.push_back(v);
    if (cut < best_cut) {
      best_cut = cut;
      best_prefix = static_cast<int>(moves.size());
    }
  }
  // Roll back past the best prefix.
  for (int i = static_cast<int>(moves.size()) - 1; i >= best_prefix; --i)
    side[moves[i]] = static_cast<char>(1 - side[moves[i]]);
  return best_cut;
}

void refine(const HyperGraph& hg, std::vector<char>& side, int w_min, int w_max) {
  int prev = cut_of(hg, side);
  for (int pass = 0; pass < 12; ++pass) {
    const int now = fm_pass(hg, side, w_min, w_max);
    if (now >= prev) break;
    prev = now;
  }
}

// Balanced greedy growth from a seed vertex; BFS over shared nets.
std::vector<char> grow_from(const HyperGraph& hg, int seed, int half_weight) {
  std::vector<char> side(hg.n, 1);
  std::vector<char> visited(hg.n, 0);
  std::vector<int> queue{seed};
  visited[seed] = 1;
  int grown = 0;
  size_t qi = 0;
  while (grown < half_weight) {
    int v;
    if (qi < queue.size()) {
      v = queue[qi++];
    } else {
      v = -1;  // disconnected remainder: take lowest-id unvisited vertex
      for (int x = 0; x < hg.n; ++x)
        if (!visited[x]) {
          v = x;
          break;
        }
      if (v < 0) break;
      visited[v] = 1;
      queue.push_back(v);
      ++qi;
    }
    side[v] = 0;
    grown += hg.weight[v];
    for (int u : hg.vertex_nets[v]) {
      for (int w : hg.net_pins[u]) {
        if (!visited[w]) {
          visited[w] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  return side;
}

// Two-way split of `cells`; returns local side labels (0/1).
std::vector<char> bisect(const Netlist& nl, const std::vector<int>& cells,
                         std::vector<int>& local_of, double epsilon) {
  HyperGraph base = induce(nl, cells, local_of);
  for (int c : cells) local_of[c] = -1;

  // Coarsening ladder.
  std::vector<HyperGraph> levels{std::move(base)};
  std::vector<std::vector<int>> maps;
  while (levels.back().n > 48) {
    std::vector<int> coarse_of;
    HyperGraph next = coarsen(levels.back(), coarse_of);
    if (next.n >= levels.back().n * 9 / 10) break;
    maps.push_back(std::move(coarse_of));
    levels.push_back(std::move(next));
  }

  const int total = static_cast<int>(cells.size());
  const int w_max = std::min(total - 1,
                             static_cast<int>(std::ceil(total / 2.0 * (1.0 + epsilon))));
  const int w_min = total - w_max;

  // Initial split at the coarsest level: several greedy growths, keep the
  // best after refinement.
  const HyperGraph& top = levels.back();
  std::vector<char> best_side;
  int best_cut = -1;
  const int n_seeds = std::min(4, top.n);
  for (int s = 0; s < n_seeds; ++s) {
    const int seed = static_cast<int>(static_cast<long long>(s) * top.n / n_seeds);
    std::vector<char> side = grow_from(top, seed, total / 2);
    refine(top, side, w_min, w_max);
    const int cut = cut_of(top, side);
    if (best_cut < 0 || cut < best_cut) {
      best_cut = cut;
      best_side = std::move(side);
    }
  }

  // Project down the ladder, refining at each level.
  for (int l = static_cast<int>(levels.size()) - 2; l >= 0; --l) {
    std::vector<char> side(levels[l].n);
    for (int v = 0; v < levels[l].n; ++v) side[v] = best_side[maps[l][v]];
    refine(levels[l], side, w_min, w_max);
    best_side = std::move(side);
  }
  return best_side;
}

// Movable-cell connected components of the induced sub-hypergraph.
std::vector<std::vector<int>> components_of(const Netlist& nl,
                                            const std::vector<int>& cells,
                                            std::vector<int>& local_of) {
  HyperGraph hg = induce(nl, cells, local_of);
  for (int c : cells) local_of[c] = -1;
  std::vector<int> comp(hg.n, -1);
  int nc = 0;
  for (int v = 0; v < hg.n; ++v) {
    if (comp[v] >= 0) continue;
    std::vector<int> stack{v};
    comp[v] = nc;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int u : hg.vertex_nets[x])
        for (int w : hg.net_pins[u])
          if (comp[w] < 0) {
            comp[w] = nc;
            stack.push_back(w);
          }
    }
    ++nc;
  }
  std::vector<std::vector<int>> out(nc);
  for (int v = 0; v < hg.n; ++v) out[comp[v]].push_back(cells[v]);
  return out;
}

}  // namespace

int bisection_cut(const Netlist& nl, const std::vector<int>& cells,
                  const std::vector<char>& side_of_cell) {
  std::vector<int> local_of(nl.num_cells(), -1);
  HyperGraph hg = induce(nl, cells, local_of);
  std::vector<char> side(hg.n);
  for (size_t i = 0; i < cells.size(); ++i) side[local_of[cells[i]]] = side_of_cell[cells[i]];
  for (int c : cells) local_of[c] = -1;
  return cut_of(hg, side);
}

PartitionResult partition(const Netlist& nl, const PartitionConfig& cfg) {
  if (cfg.max_part_cells < 2) fail_usage("max_part_cells must be >= 2");
  if (cfg.epsilon < 0.0 || cfg.epsilon >= 1.0) fail_usage("epsilon must be in [0, 1)");

  std::vector<int> movable;
  for (int i = 0; i < nl.num_cells(); ++i)
    if (!nl.cells[i].is_terminal) movable.push_back(i);

  // Nothing to split: every movable stays in the root graph.
  if (cfg.target_parts <= 1 &&
      static_cast<int>(movable.size()) <= cfg.max_part_cells) {
    PartitionResult res;
    res.belong.assign(nl.num_cells(), 0);
    return res;
  }

  std::vector<int> local_of(nl.num_cells(), -1);

  // Start from connected components, then bisect anything too large, then
  // keep bisecting the largest part until the requested count is reached.
  std::vector<std::vector<int>> final_parts;
  std::vector<std::vector<int>> work = components_of(nl, movable, local_of);
  while (!work.empty()) {
    std::vector<int> cells = std::move(work.back());
    work.pop_back();
    if (static_cast<int>(cells.size()) <= cfg.max_part_cells) {
      final_parts.push_back(std::move(cells));
      continue;
    }
    std::vector<char> side = bisect(nl, cells, local_of, cfg.epsilon);
    std::vector<int> a, b;
    for (size_t i = 0; i < cells.size(); ++i)
      (side[i] == 0 ? a : b).push_back(cells[i]);
    if (a.empty() || b.empty()) {
      final_parts.push_back(std::move(cells));  // refinement degenerated; accept
      continue;
    }
    work.push_back(std::move(a));
    work.push_back(std::move(b));
  }
  const int target = std::max(1, cfg.target_parts);
  auto largest = [&]() {
    size_t best = 0;
    for (size_t i = 1; i < final_parts.size(); ++i)
      if (final_parts[i].size() > final_parts[best].size()) best = i;
    return best;
  };
  while (static_cast<int>(final_parts.size()) < target) {
    const size_t idx = largest();
    if (final_parts[idx].size() < 4) break;
    std::vector<int> cells = std::move(final_parts[idx]);
    final_parts.erase(final_parts.begin() + idx);
    std::vector<char> side = bisect(nl, cells, local_of, cfg.epsilon);
    std::vector<int> a, b;
    for (size_t i = 0; i < cells.size(); ++i)
      (side[i] == 0 ? a : b).push_back(cells[i]);
    if (a.empty() || b.empty()) {
      final_parts.push_back(std::move(cells));
      break;
    }
    final_parts.push_back(std::move(a));
    final_parts.push_back(std::move(b));
  }

  // Bisection can disconnect a part; split into components and drop parts
  // too small to carry a branch graph.
  std::vector<std::vector<int>> connected;
  for (auto& part : final_parts) {
    auto comps = components_of(nl, part, local_of);
    for (auto& c : comps)
      if (c.size() >= 2) connected.push_back(std::move(c));
  }
  for (auto& part : connected) std::sort(part.begin(), part.end());
  std::sort(connected.begin(), connected.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  PartitionResult res;
  res.parts = std::move(connected);
  res.belong.assign(nl.num_cells(), 0);
  for (size_t p = 0; p < res.parts.size(); ++p)
    for (int c : res.parts[p]) res.belong[c] = static_cast<int>(p) + 1;
  return res;
}

}  // namespace gp
