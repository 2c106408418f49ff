#pragma once

#include <string>

#include "core/netlist.hpp"

namespace gp {

// Bookshelf-style file set:
//   <base>.aux    manifest: "RowBasedPlacement : <base>.nodes <base>.nets <base>.pl"
//   <base>.nodes  "name width height [terminal]"
//   <base>.nets   "NetDegree : k [name]" followed by k lines "cell I/O : dx dy"
//   <base>.pl     "name x y : N [/FIXED]"
// '#' starts a comment; blank lines are ignored. The .pl written by this
// module carries the core region in a "# CoreRegion: ..." comment since the
// subset has no .scl file.
//
// Degree-0/1 nets and duplicate (cell, net) pins are dropped with a note to
// stderr; coordinates are read as doubles.

Netlist parse_netlist(const std::string& aux_path);

// Writes <dir>/<base>.{aux,nodes,nets,pl}. The .pl records terminal positions
// and the given movable positions (pass nullptr for core-centered movables).
void write_netlist(const Netlist& nl, const std::string& dir, const std::string& base,
                   const Placement* pl = nullptr);

Placement parse_placement(const Netlist& nl, const std::string& pl_path);
void write_placement(const Netlist& nl, const Placement& pl, const std::string& path);

}  // namespace gp
