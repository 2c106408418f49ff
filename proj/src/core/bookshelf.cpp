#include "core/bookshelf.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "core/errors.hpp"

namespace fs = std::filesystem;

namespace gp {
namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

// Tokenized, comment-stripped lines. A leading "# CoreRegion:" comment is
// surfaced through *core if requested.
std::vector<Line> read_lines(const std::string& path, Rect* core = nullptr,
                             bool* have_core = nullptr) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open '" + path + "'");
  std::vector<Line> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto pos = raw.find('#'); pos != std::string::npos) {
      if (core != nullptr) {
        std::istringstream cs(raw.substr(pos + 1));
        std::string tag;
        cs >> tag;
        if (tag == "CoreRegion:") {
          Rect r;
          if (cs >> r.x_lo >> r.y_lo >> r.x_hi >> r.y_hi) {
            *core = r;
            if (have_core) *have_core = true;
          }
        }
      }
      raw.erase(pos);
    }
    Line line;
    line.number = number;
    std::istringstream ss(raw);
    std::string tok;
    while (ss >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
  fail_validation(path + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& path, int line, const std::string& tok) {
  try {
    size_t used = 0;
    double d = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return d;
  } catch (const std::exception&) {
    parse_fail(path, line, "expected a number, got '" + tok + "'");
  }
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Netlist parse_netlist(const std::string& aux_path) {
  const auto aux_lines = read_lines(aux_path);
  if (aux_lines.empty()) fail_validation(aux_path + ": empty aux file");
  std::string nodes_path, nets_path, pl_path;
  for (const auto& tok : aux_lines.front().tokens) {
    const fs::path p = fs::path(aux_path).parent_path() / tok;
    if (tok.ends_with(".nodes")) nodes_path = p.string();
    if (tok.ends_with(".nets")) nets_path = p.string();
    if (tok.ends_with(".pl")) pl_path = p.string();
  }
  if (nodes_path.empty() || nets_path.empty() || pl_path.empty())
    fail_validation(aux_path + ": manifest must name .nodes, .nets and .pl files");

  Netlist nl;
  std::unordered_map<std::string, int> cell_index;

  for (const Line& line : read_lines(nodes_path)) {
    const auto& t = line.tokens;
    if (t.size() < 3 || t.size() > 4)
      parse_fail(nodes_path, line.number, "expected 'name width height [terminal]'");
    Cell c;
    c.name = t[0];
    c.width = to_double(nodes_path, line.number, t[1]);
    c.height = to_double(nodes_path, line.number, t[2]);
    if (t.size() == 4) {
      if (t[3] != "terminal")
        parse_fail(nodes_path, line.number, "unexpected token '" + t[3] + "'");
      c.is_terminal = true;
    }
    if (cell_index.count(c.name))
      parse_fail(nodes_path, line.number, "duplicate cell '" + c.name + "'");
    cell_index[c.name] = nl.num_cells();
    nl.cells.push_back(std::move(c));
  }

  const auto net_lines = read_lines(nets_path);
  std::set<std::pair<int, int>> pin_seen;
  size_t li = 0;
  while (li < net_lines.size()) {
    const Line& head = net_lines[li];
    if (head.tokens.size() < 3 || head.tokens[0] != "NetDegree" || head.tokens[1] != ":")
      parse_fail(nets_path, head.number, "expected 'NetDegree : k [name]'");
    const double degree_raw = to_double(nets_path, head.number, head.tokens[2]);
    const int degree = static_cast<int>(degree_raw);
    if (degree_raw != degree || degree < 0)
      parse_fail(nets_path, head.number, "invalid net degree '" + head.tokens[2] + "'");
    std::string name = head.tokens.size() > 3 ? head.tokens[3]
                                              : "n" + std::to_string(nl.num_nets());
    if (li + 1 + degree > net_lines.size())
      parse_fail(nets_path, head.number, "net truncated: expected " +
                                             std::to_string(degree) + " pin lines");
    const int net_id = nl.num_nets();
    std::vector<Pin> net_pins;
    for (int k = 0; k < degree; ++k) {
      const Line& pl = net_lines[li + 1 + k];
      const auto& t = pl.tokens;
      if (t.size() != 5 || t[2] != ":")
        parse_fail(nets_path, pl.number, "expected 'cell I/O : dx dy'");
      auto it = cell_index.find(t[0]);
      if (it == cell_index.end())
        parse_fail(nets_path, pl.number, "pin references undeclared cell '" + t[0] + "'");
      Pin p;
      p.cell = it->second;
      p.net = net_id;
      p.dx = to_double(nets_path, pl.number, t[3]);
      p.dy = to_double(nets_path, pl.number, t[4]);
      if (!pin_seen.insert({p.cell, p.net}).second) {
        std::cerr << nets_path << ":" << pl.number << ": note: dropping duplicate pin ("
                  << t[0] << ", " << name << ")\n";
        continue;
      }
      net_pins.push_back(p);
    }
    li += 1 + degree;
    if (static_cast<int>(net_pins.size()) < 2) {
      std::cerr << nets_path << ":" << head.number << ": note: dropping net '" << name
                << "' with degree " << net_pins.size() << "\n";
      for (const Pin& p : net_pins) pin_seen.erase({p.cell, p.net});
      continue;
    }
    nl.net_names.push_back(std::move(name));
    for (const Pin& p : net_pins) nl.pins.push_back(p);
  }

  nl.terminal_pos.assign(nl.num_cells(), Vec2{});
  bool have_core = false;
  for (const Line& line : read_lines(pl_path, &nl.core, &have_core)) {
    const auto& t = line.tokens;
    if (t.size() < 5 || t[3] != ":")
      parse_fail(pl_path, line.number, "expected 'name x y : N [/FIXED]'");
    auto it = cell_index.find(t[0]);
    if (it == cell_index.end())
      parse_fail(pl_path, line.number, "placement references undeclared cell '" + t[0] + "'");
    const Vec2 p{to_double(pl_path, line.number, t[1]),
                 to_double(pl_path, line.number, t[2])};
    if (nl.cells[it->second].is_terminal) nl.terminal_pos[it->second] = p;
  }
  if (!have_core) {
    // No recorded core region: use the terminal bounding box, padded a
    // little so boundary terminals stay strictly inside.
    bool first = true;
    Rect r;
    for (int i = 0; i < nl.num_cells(); ++i) {
      if (!nl.cells[i].is_terminal) continue;
      const Vec2 p = nl.terminal_pos[i];
      if (first) {
        r = {p.x, p.y, p.x, p.y};
        first = false;
      } else {
        r.x_lo = std::min(r.x_lo, p.x);
        r.y_lo = std::min(r.y_lo, p.y);
        r.x_hi = std::max(r.x_hi, p.x);
        r.y_hi = std::max(r.y_hi, p.y);
      }
    }
    if (first) fail_validation(pl_path + ": no terminals and no CoreRegion comment");
    const double pad = std::max({1.0, r.width() * 0.05, r.height() * 0.05});
    if (r.width() <= 0) {
      r.x_lo -= pad;
      r.x_hi += pad;
    }
    if (r.height() <= 0) {
      r.y_lo -= pad;
      r.y_hi += pad;
    }
    nl.core = r;
  }

  nl.finalize();
  nl.validate();
  return nl;
}

void write_netlist(const Netlist& nl, const std::string& dir, const std::string& base,
                   const Placement* pl) {
  fs::create_directories(dir);
  const fs::path root = fs::path(dir);
  {
    std::ofstream out(root / (base + ".aux"));
    if (!out) fail_io("cannot write aux file in '" + dir + "'");
    out << "RowBasedPlacement : " << base << ".nodes " << base << ".nets " << base
        << ".pl\n";
  }
  {
    std::ofstream out(root / (base + ".nodes"));
    for (const Cell& c : nl.cells) {
      out << c.name << ' ' << fmt_num(c.width) << ' ' << fmt_num(c.height);
      if (c.is_terminal) out << " terminal";
      out << '\n';
    }
  }
  {
    std::ofstream out(root / (base + ".nets"));
    for (int u = 0; u < nl.num_nets(); ++u) {
      out << "NetDegree : " << nl.net_degree(u) << ' ' << nl.net_names[u] << '\n';
      bool first = true;
      for (int k = nl.net_pin_start[u]; k < nl.net_pin_start[u + 1]; ++k) {
        const Pin& p = nl.pins[nl.net_pin_ids[k]];
        out << "  " << nl.cells[p.cell].name << ' ' << (first ? 'O' : 'I') << " : "
            << fmt_num(p.dx) << ' ' << fmt_num(p.dy) << '\n';
        first = false;
      }
    }
  }
  Placement fallback;
  if (pl == nullptr) {
    fallback = make_centered_placement(nl);
    pl = &fallback;
  }
  write_placement(nl, *pl, (root / (base + ".pl")).string());
}

Placement parse_placement(const Netlist& nl, const std::string& pl_path) {
  std::unordered_map<std::string, int> cell_index;
  for (int i = 0; i < nl.num_cells(); ++i) cell_index[nl.cells[i].name] = i;
  Placement pl;
  pl.pos.resize(nl.num_cells());
  std::vector<char> seen(nl.num_cells(), 0);
  for (const Line& line : read_lines(pl_path)) {
    const auto& t = line.tokens;
    if (t.size() < 5 || t[3] != ":")
      parse_fail(pl_path, line.number, "expected 'name x y : N [/FIXED]'");
    auto it = cell_index.find(t[0]);
    if (it == cell_index.end())
      parse_fail(pl_path, line.number, "placement references undeclared cell '" + t[0] + "'");
    pl.pos[it->second] = {to_double(pl_path, line.number, t[1]),
                          to_double(pl_path, line.number, t[2])};
    seen[it->second] = 1;
  }
  for (int i = 0; i < nl.num_cells(); ++i) {
    if (!seen[i]) fail_validation(pl_path + ": missing position for cell '" +
                                  nl.cells[i].name + "'");
    if (nl.cells[i].is_terminal) pl.pos[i] = nl.terminal_pos[i];
  }
  return pl;
}

void write_placement(const Netlist& nl, const Placement& pl, const std::string& path) {
  if (pl.pos.size() != static_cast<size_t>(nl.num_cells()))
    fail_usage("placement size does not match netlist");
  std::ofstream out(path);
  if (!out) fail_io("cannot write '" + path + "'");
  out << "# CoreRegion: " << fmt_num(nl.core.x_lo) << ' ' << fmt_num(nl.core.y_lo) << ' '
      << fmt_num(nl.core.x_hi) << ' ' << fmt_num(nl.core.y_hi) << '\n';
  for (int i = 0; i < nl.num_cells(); ++i) {
    const Vec2 p = nl.cells[i].is_terminal ? nl.terminal_pos[i] : pl.pos[i];
    out << nl.cells[i].name << ' ' << fmt_num(p.x) << ' ' << fmt_num(p.y) << " : N";
    if (nl.cells[i].is_terminal) out << " /FIXED";
    out << '\n';
  }
}

}  // namespace gp
