#include "core/hier.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/bookshelf.hpp"
#include "core/errors.hpp"

#include <json.hpp>

namespace gp {
namespace {

void copy_row(const Mat& src, int src_row, Mat& dst, int dst_row) {
  std::copy(src.row(src_row), src.row(src_row) + src.cols, dst.row(dst_row));
}

}  // namespace

HierNetlist build_hierarchy(const Netlist& nl, const PartitionResult& part) {
  const FeatureSet base = featurize(nl);
  HierNetlist hier;
  const int n_parts = static_cast<int>(part.parts.size());
  hier.branches.reserve(n_parts);
  hier.branch_anchor.assign(n_parts, -1);

  long long incident_net_total = 0;

  for (int bi = 0; bi < n_parts; ++bi) {
    const std::vector<int>& cells = part.parts[bi];
    HierGraph g;
    std::vector<int> local_of(nl.num_cells(), -1);
    for (size_t i = 0; i < cells.size(); ++i) local_of[cells[i]] = static_cast<int>(i);

    // Anchor: biggest cell by area, lowest id on ties. It becomes the
    // branch's only terminal, fixed at the origin.
    int anchor = cells[0];
    for (int c : cells)
      if (nl.cells[c].area() > nl.cells[anchor].area()) anchor = c;
    hier.branch_anchor[bi] = anchor;

    g.orig_cell = cells;
    g.pseudo_branch.assign(cells.size(), -1);
    g.nl.cells.reserve(cells.size());
    g.nl.terminal_pos.assign(cells.size(), Vec2{});
    for (int c : cells) {
      Cell cell = nl.cells[c];
      cell.is_terminal = (c == anchor);
      g.nl.cells.push_back(std::move(cell));
    }
    g.nl.core = {-nl.core.width() / 2.0, -nl.core.height() / 2.0,
                 nl.core.width() / 2.0, nl.core.height() / 2.0};

    // Incident nets in ascending id; keep those with two or more pins inside
    // the part. The overlap ratio counts the full incident set.
    std::vector<int> incident;
    for (int c : cells)
      for (int k = nl.cell_pin_start[c]; k < nl.cell_pin_start[c + 1]; ++k)
        incident.push_back(nl.pins[nl.cell_pin_ids[k]].net);
    std::sort(incident.begin(), incident.end());
    incident.erase(std::unique(incident.begin(), incident.end()), incident.end());
    incident_net_total += static_cast<long long>(incident.size());

    std::vector<int> kept_pin_rows;
    for (int u : incident) {
      std::vector<int> rows;
      for (int m = nl.net_pin_start[u]; m < nl.net_pin_start[u + 1]; ++m) {
        const int pid = nl.net_pin_ids[m];
        if (local_of[nl.pins[pid].cell] >= 0) rows.push_back(pid);
      }
      if (rows.size() < 2) continue;
      const int local_net = g.nl.num_nets();
      g.nl.net_names.push_back(nl.net_names[u]);
      for (int pid : rows) {
        const Pin& p = nl.pins[pid];
        g.nl.pins.push_back({local_of[p.cell], local_net, p.dx, p.dy});
        kept_pin_rows.push_back(pid);
      }
    }
    g.nl.finalize();
    g.nl.validate();

    // Inherited feature rows; the anchor's terminal flag is updated.
    g.feat.x_cell = Mat(g.nl.num_cells(), kCellFeatureDim);
    for (int i = 0; i < g.nl.num_cells(); ++i) copy_row(base.x_cell, cells[i], g.feat.x_cell, i);
    g.feat.x_cell(local_of[anchor], kCellFeatureDim - 1) = 1.0;
    g.feat.x_net = Mat(g.nl.num_nets(), kNetFeatureDim);
    {
      int local_net = 0;
      for (int u : incident) {
        int inside = 0;
        for (int m = nl.net_pin_start[u]; m < nl.net_pin_start[u + 1]; ++m)
          if (local_of[nl.pins[nl.net_pin_ids[m]].cell] >= 0) ++inside;
        if (inside < 2) continue;
        copy_row(base.x_net, u, g.feat.x_net, local_net);
        ++local_net;
      }
    }
    g.feat.x_pin = Mat(g.nl.num_pins(), kPinFeatureDim);
    for (int i = 0; i < g.nl.num_pins(); ++i) {
      copy_row(base.x_pin, kept_pin_rows[i], g.feat.x_pin, i);
      if (nl.pins[kept_pin_rows[i]].cell == anchor) g.feat.x_pin(i, 4) = 1.0;
    }
    hier.branches.push_back(std::move(g));
  }
  hier.eta = nl.num_nets() > 0
                 ? static_cast<double>(incident_net_total) / nl.num_nets()
                 : 0.0;

  // Root graph: terminals, unpartitioned movables, one pseudo cell per part.
  HierGraph& root = hier.root;
  std::vector<int> root_local(nl.num_cells(), -1);
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (nl.cells[i].is_terminal || part.belong[i] == 0) {
      root_local[i] = root.nl.num_cells();
      root.orig_cell.push_back(i);
      root.pseudo_branch.push_back(-1);
      root.nl.cells.push_back(nl.cells[i]);
    }
  }
  std::vector<int> pseudo_local(n_parts, -1);
  std::vector<double> part_area(n_parts, 0.0);
  for (int bi = 0; bi < n_parts; ++bi) {
    for (int c : part.parts[bi]) part_area[bi] += nl.cells[c].area();
    const double side = std::sqrt(5.0 * part_area[bi]);
    Cell c;
    c.name = "pseudo" + std::to_string(bi);
    c.width = side;
    c.height = side;
    pseudo_local[bi] = root.nl.num_cells();
    root.orig_cell.push_back(-1);
    root.pseudo_branch.push_back(bi);
    root.nl.cells.push_back(std::move(c));
  }
  root.nl.core = nl.core;
  root.nl.terminal_pos.assign(root.nl.num_cells(), Vec2{});
  for (int i = 0; i < nl.num_cells(); ++i)
    if (nl.cells[i].is_terminal) root.nl.terminal_pos[root_local[i]] = nl.terminal_pos[i];

  // A net survives if it touches any movable cell; its root pins are the
  // surviving original pins plus one pseudo pin per part it touches. Nets
  // that end up with fewer than two root pins vanish into their part.
  std::vector<int> pseudo_degree(n_parts, 0);
  struct RootNet {
    int orig_net;
    std::vector<int> orig_pins;
    std::vector<int> parts;
  };
  std::vector<RootNet> root_nets;
  for (int u = 0; u < nl.num_nets(); ++u) {
    bool touches_movable = false;
    RootNet rn;
    rn.orig_net = u;
    int last_part = -1;
    for (int m = nl.net_pin_start[u]; m < nl.net_pin_start[u + 1]; ++m) {
      const int pid = nl.net_pin_ids[m];
      const int c = nl.pins[pid].cell;
      if (!nl.cells[c].is_terminal) touches_movable = true;
      if (root_local[c] >= 0) {
        rn.orig_pins.push_back(pid);
      } else {
        const int bi = part.belong[c] - 1;
        if (bi != last_part &&
            std::find(rn.parts.begin(), rn.parts.end(), bi) == rn.parts.end())
          rn.parts.push_back(bi);
        last_part = bi;
      }
    }
    if (!touches_movable) continue;
    if (rn.orig_pins.size() + rn.parts.size() < 2) continue;
    for (int bi : rn.parts) ++pseudo_degree[bi];
    root_nets.push_back(std::move(rn));
  }

  for (const RootNet& rn : root_nets) {
    const int local_net = root.nl.num_nets();
    root.nl.net_names.push_back(nl.net_names[rn.orig_net]);
    for (int pid : rn.orig_pins) {
      const Pin& p = nl.pins[pid];
      root.nl.pins.push_back({root_local[p.cell], local_net, p.dx, p.dy});
    }
    for (int bi : rn.parts)
      root.nl.pins.push_back({pseudo_local[bi], local_net, 0.0, 0.0});
  }
  root.nl.finalize();
  root.nl.validate();

  // Root features: inherited rows plus computed rows for pseudo cells/pins.
  root.feat.x_cell = Mat(root.nl.num_cells(), kCellFeatureDim);
  for (int i = 0; i < root.nl.num_cells(); ++i) {
    if (root.orig_cell[i] >= 0) {
      copy_row(base.x_cell, root.orig_cell[i], root.feat.x_cell, i);
    } else {
      const int bi = root.pseudo_branch[i];
      cell_feature_row(root.nl.cells[i].width, root.nl.cells[i].height,
                       pseudo_degree[bi], false, root.feat.x_cell.row(i));
    }
  }
  root.feat.x_net = Mat(root.nl.num_nets(), kNetFeatureDim);
  for (size_t r = 0; r < root_nets.size(); ++r)
    copy_row(base.x_net, root_nets[r].orig_net, root.feat.x_net, static_cast<int>(r));
  root.feat.x_pin = Mat(root.nl.num_pins(), kPinFeatureDim);
  {
    int row = 0;
    for (const RootNet& rn : root_nets) {
      for (int pid : rn.orig_pins) copy_row(base.x_pin, pid, root.feat.x_pin, row++);
      for (int bi : rn.parts) {
        const Cell& pc = root.nl.cells[pseudo_local[bi]];
        pin_feature_row(0.0, 0.0, pc.width, pc.height, pseudo_degree[bi],
                        nl.net_degree(rn.orig_net), false, root.feat.x_pin.row(row++));
      }
    }
  }
  return hier;
}

Placement uncoarsen(const Netlist& nl, const HierNetlist& hier,
                    const Placement& root_pl, const std::vector<Placement>& branch_pls) {
  if (branch_pls.size() != hier.branches.size())
    fail_usage("uncoarsen: expected one placement per branch");
  Placement out;
  out.pos.assign(nl.num_cells(), Vec2{});
  for (int i = 0; i < nl.num_cells(); ++i)
    if (nl.cells[i].is_terminal) out.pos[i] = nl.terminal_pos[i];

  std::vector<Vec2> pseudo_pos(hier.branches.size(), Vec2{});
  for (int i = 0; i < hier.root.nl.num_cells(); ++i) {
    if (hier.root.pseudo_branch[i] >= 0) {
      pseudo_pos[hier.root.pseudo_branch[i]] = root_pl.pos[i];
    } else if (!hier.root.nl.cells[i].is_terminal) {
      out.pos[hier.root.orig_cell[i]] = root_pl.pos[i];
    }
  }
  for (size_t bi = 0; bi < hier.branches.size(); ++bi) {
    const HierGraph& g = hier.branches[bi];
    for (int i = 0; i < g.nl.num_cells(); ++i)
      out.pos[g.orig_cell[i]] = pseudo_pos[bi] + branch_pls[bi].pos[i];
  }
  return out;
}

void project_placement(const Netlist& nl, const HierNetlist& hier, const Placement& pl,
                       Placement* root_pl, std::vector<Placement>* branch_pls) {
  (void)nl;
  root_pl->pos.assign(hier.root.nl.num_cells(), Vec2{});
  for (int i = 0; i < hier.root.nl.num_cells(); ++i) {
    if (hier.root.pseudo_branch[i] >= 0) {
      root_pl->pos[i] = pl.pos[hier.branch_anchor[hier.root.pseudo_branch[i]]];
    } else {
      root_pl->pos[i] = pl.pos[hier.root.orig_cell[i]];
    }
  }
  branch_pls->resize(hier.branches.size());
  for (size_t bi = 0; bi < hier.branches.size(); ++bi) {
    const HierGraph& g = hier.branches[bi];
    const Vec2 anchor = pl.pos[hier.branch_anchor[bi]];
    (*branch_pls)[bi].pos.resize(g.nl.num_cells());
    for (int i = 0; i < g.nl.num_cells(); ++i)
      (*branch_pls)[bi].pos[i] = pl.pos[g.orig_cell[i]] - anchor;
  }
}

void dump_hierarchy(const HierNetlist& hier, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_netlist(hier.root.nl, dir, "root");
  nlohmann::json manifest;
  manifest["eta"] = hier.eta;
  manifest["num_branches"] = hier.branches.size();
  manifest["branches"] = nlohmann::json::array();
  for (size_t bi = 0; bi < hier.branches.size(); ++bi) {
    const std::string base = "branch" + std::to_string(bi);
    write_netlist(hier.branches[bi].nl, dir, base);
    nlohmann::json b;
    b["file"] = base + ".aux";
    b["pseudo_cell"] = "pseudo" + std::to_string(bi);
    b["cells"] = hier.branches[bi].nl.num_cells();
    manifest["branches"].push_back(b);
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) fail_io("cannot write hierarchy manifest in '" + dir + "'");
  out << manifest.dump(2) << "\n";
}

}  // namespace gp
