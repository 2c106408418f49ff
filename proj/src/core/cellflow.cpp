#include "core/cellflow.hpp"

#include <deque>
#include <numeric>
#include <string>

#include "core/errors.hpp"

namespace gp {

CellFlow build_cellflow(const Netlist& nl) {
  const int nc = nl.num_cells();
  CellFlow flow;
  flow.income.assign(nc, -1);
  flow.pop_order.assign(nc, -1);

  std::vector<char> net_traveled(nl.num_nets(), 0);
  std::vector<char> queued(nc, 0);
  std::deque<int> queue;
  for (int i = 0; i < nc; ++i) {
    if (nl.cells[i].is_terminal) {
      queue.push_back(i);
      queued[i] = 1;
    }
  }

  int rank = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    flow.pop_order[v] = rank++;
    for (int k = nl.cell_pin_start[v]; k < nl.cell_pin_start[v + 1]; ++k) {
      const int u = nl.pins[nl.cell_pin_ids[k]].net;
      if (net_traveled[u]) continue;
      net_traveled[u] = 1;
      for (int m = nl.net_pin_start[u]; m < nl.net_pin_start[u + 1]; ++m) {
        const int w = nl.pins[nl.net_pin_ids[m]].cell;
        if (w == v || nl.cells[w].is_terminal) continue;
        const int e = flow.num_edges();
        flow.edge_src.push_back(v);
        flow.edge_dst.push_back(w);
        flow.edge_net.push_back(u);
        if (flow.income[w] < 0) flow.income[w] = e;
        if (!queued[w]) {
          queued[w] = 1;
          queue.push_back(w);
        }
      }
    }
  }

  for (int i = 0; i < nc; ++i) {
    if (!nl.cells[i].is_terminal && flow.income[i] < 0)
      fail_validation("cell '" + nl.cells[i].name +
                      "' unreachable from any terminal; cell flow undefined");
  }

  flow.in_start.assign(nc + 1, 0);
  for (int d : flow.edge_dst) ++flow.in_start[d + 1];
  std::partial_sum(flow.in_start.begin(), flow.in_start.end(), flow.in_start.begin());
  flow.in_edges.resize(flow.edge_dst.size());
  std::vector<int> cur(flow.in_start.begin(), flow.in_start.end() - 1);
  for (int e = 0; e < flow.num_edges(); ++e) flow.in_edges[cur[flow.edge_dst[e]]++] = e;
  return flow;
}

std::vector<int> cell_path_lengths(const CellFlow& flow, const std::vector<int>& targets) {
  std::vector<int> out;
  out.reserve(targets.size());
  for (int t : targets) {
    int len = 0;
    int v = t;
    while (flow.income[v] >= 0) {
      ++len;
      v = flow.edge_src[flow.income[v]];
    }
    out.push_back(len);
  }
  return out;
}

double mean_path_length(const Netlist& nl, const CellFlow& flow) {
  // One pass in pop order; income sources are always popped earlier.
  const int nc = nl.num_cells();
  std::vector<int> by_rank(nc, -1);
  for (int i = 0; i < nc; ++i)
    if (flow.pop_order[i] >= 0) by_rank[flow.pop_order[i]] = i;
  std::vector<int> len(nc, 0);
  long long total = 0;
  int count = 0;
  for (int r = 0; r < nc; ++r) {
    const int v = by_rank[r];
    if (v < 0) break;
    if (flow.income[v] >= 0) len[v] = len[flow.edge_src[flow.income[v]]] + 1;
    if (!nl.cells[v].is_terminal) {
      total += len[v];
      ++count;
    }
  }
  return count == 0 ? 0.0 : static_cast<double>(total) / count;
}

}  // namespace gp
