#pragma once

#include <cstdint>

#include "core/netlist.hpp"

namespace gp {

struct SynthSpec {
  int n_movable = 1000;
  int n_terminals = 32;
  double avg_net_degree = 4.0;
  uint64_t seed = 0;
  Rect core{0.0, 0.0, 0.0, 0.0};  // empty: sized automatically from cell count
};

// Random mixed-size circuit. Cells are given latent positions and nets are
// formed among latent neighbors, which gives the instance the locality real
// netlists have (partitions with small cut, modest net overlap across
// branches). The latent movable positions are returned as *latent if
// non-null; they make a sensible reference placement.
//
// Deterministic: one seed, one byte-identical netlist.
Netlist generate_synthetic(const SynthSpec& spec, Placement* latent = nullptr);

}  // namespace gp
