#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "core/cellflow.hpp"
#include "core/errors.hpp"
#include "core/netlist.hpp"
#include "core/rng.hpp"
#include "core/se2codec.hpp"
#include "core/synth.hpp"
#include "core/tpgnn.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace gp;

namespace {

Netlist small_circuit(uint64_t seed, int movable = 20, int terminals = 4) {
  SynthSpec spec;
  spec.n_movable = movable;
  spec.n_terminals = terminals;
  spec.seed = seed;
  return generate_synthetic(spec);
}

GraphBatch batch_of(const Netlist& nl, const RelEncoding* target = nullptr) {
  return make_batch(nl, featurize(nl), build_cellflow(nl), target);
}

int param_index(const ModelParams& p, const std::string& name) {
  for (size_t i = 0; i < p.mats.size(); ++i)
    if (p.mats[i].first == name) return static_cast<int>(i);
  REQUIRE(false);
  return -1;
}

}  // namespace

TEST_CASE("zeroed readout heads give the neutral prediction") {
  Netlist nl = small_circuit(3);
  ModelParams p = init_model(ModelConfig{}, 7);
  for (const char* name : {"head_rho_w", "head_rho_b", "head_theta_w", "head_theta_b"})
    for (double& x : p.at(name).v) x = 0.0;
  RelEncoding enc = predict(p, batch_of(nl));
  for (double r : enc.rho) CHECK(r == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  for (double d : enc.dtheta) CHECK(d == doctest::Approx(0.0));
}

TEST_CASE("predictions respect the codomain even with saturated heads") {
  Netlist nl = small_circuit(4);
  ModelParams p = init_model(ModelConfig{}, 8);
  for (double& x : p.at("head_rho_w").v) x = 1e6;
  for (double& x : p.at("head_theta_w").v) x = -1e6;
  RelEncoding enc = predict(p, batch_of(nl));
  const double lo = std::exp(-2.0 - 15.0);
  const double hi = std::exp(-2.0 + 15.0);
  for (double r : enc.rho) {
    CHECK(r >= lo);
    CHECK(r <= hi);
    CHECK(std::isfinite(r));
  }
  for (double d : enc.dtheta) {
    CHECK(d > -kPi);
    CHECK(d < kPi);
  }
}

TEST_CASE("make_batch wires income stand-ins for terminal sources") {
  Netlist nl = small_circuit(5);
  CellFlow flow = build_cellflow(nl);
  GraphBatch g = make_batch(nl, featurize(nl), flow, nullptr);
  REQUIRE(g.num_edges == flow.num_edges());
  int standins = 0;
  for (int e = 0; e < g.num_edges; ++e) {
    const int src = flow.edge_src[e];
    if (flow.income[src] < 0) {
      CHECK(nl.cells[src].is_terminal);
      CHECK((*g.income_src)[e] == g.num_cells);
      CHECK((*g.income_net)[e] == g.num_nets);
      ++standins;
    } else {
      CHECK((*g.income_src)[e] == flow.edge_src[flow.income[src]]);
      CHECK((*g.income_net)[e] == flow.edge_net[flow.income[src]]);
    }
  }
  CHECK(standins > 0);
  CHECK(standins < g.num_edges);
}

TEST_CASE("forward output is equivariant under cell and net relabeling") {
  Netlist nl = small_circuit(6);
  ModelParams p = init_model(ModelConfig{}, 9);
  GraphBatch g = batch_of(nl);
  RelEncoding base = predict(p, g);

  Rng rng(99);
  std::vector<int> cperm(g.num_cells), nperm(g.num_nets);
  for (int i = 0; i < g.num_cells; ++i) cperm[i] = i;
  for (int i = 0; i < g.num_nets; ++i) nperm[i] = i;
  for (int i = g.num_cells - 1; i > 0; --i)
    std::swap(cperm[i], cperm[static_cast<int>(rng.uniform_int(0, i))]);
  for (int i = g.num_nets - 1; i > 0; --i)
    std::swap(nperm[i], nperm[static_cast<int>(rng.uniform_int(0, i))]);

  GraphBatch h = g;
  h.x_cell = Mat(g.num_cells, g.x_cell.cols);
  h.x_net = Mat(g.num_nets, g.x_net.cols);
  for (int i = 0; i < g.num_cells; ++i)
    for (int c = 0; c < g.x_cell.cols; ++c)
      h.x_cell(cperm[i], c) = g.x_cell(i, c);
  for (int i = 0; i < g.num_nets; ++i)
    for (int c = 0; c < g.x_net.cols; ++c)
      h.x_net(nperm[i], c) = g.x_net(i, c);
  auto remap = [&](const IndexVec& src, const std::vector<int>& perm, int standin) {
    auto out = std::make_shared<std::vector<int>>(*src);
    for (int& v : *out) v = (v == standin) ? standin : perm[v];
    return IndexVec(out);
  };
  h.pin_cell = remap(g.pin_cell, cperm, -1);
  h.pin_net = remap(g.pin_net, nperm, -1);
  h.edge_src = remap(g.edge_src, cperm, -1);
  h.edge_dst = remap(g.edge_dst, cperm, -1);
  h.edge_net = remap(g.edge_net, nperm, -1);
  h.income_src = remap(g.income_src, cperm, g.num_cells);
  h.income_net = remap(g.income_net, nperm, g.num_nets);

  RelEncoding perm = predict(p, h);
  for (int e = 0; e < g.num_edges; ++e) {
    CHECK(perm.rho[e] == doctest::Approx(base.rho[e]).epsilon(1e-9));
    CHECK(perm.dtheta[e] == doctest::Approx(base.dtheta[e]).epsilon(1e-9));
  }
}

TEST_CASE("lambda_theta zero blocks gradient into the theta head") {
  Netlist nl = small_circuit(7);
  CellFlow flow = build_cellflow(nl);
  RelEncoding target = encode(nl, flow, make_random_placement(nl, 21));
  GraphBatch g = make_batch(nl, featurize(nl), flow, &target);
  ModelParams p = init_model(ModelConfig{}, 10);

  Tape t;
  ForwardIds ids = forward(t, p, g, 0.0);
  REQUIRE(ids.loss >= 0);
  t.backward(ids.loss);

  for (const char* name : {"head_theta_w", "head_theta_b", "null_cell", "null_net"}) {
    const int pid = ids.params[param_index(p, name)];
    if (!t.has_grad(pid)) continue;
    for (double gval : t.grad(pid).v) CHECK(gval == 0.0);
  }
  const int rho_pid = ids.params[param_index(p, "head_rho_w")];
  REQUIRE(t.has_grad(rho_pid));
  double mag = 0.0;
  for (double gval : t.grad(rho_pid).v) mag += std::abs(gval);
  CHECK(mag > 0.0);
}

TEST_CASE("loss gradient matches finite differences across weight groups") {
  Netlist nl = small_circuit(8, 16, 3);
  CellFlow flow = build_cellflow(nl);
  RelEncoding target = encode(nl, flow, make_random_placement(nl, 31));
  GraphBatch g = make_batch(nl, featurize(nl), flow, &target);
  ModelConfig mc;
  mc.d_cell = 8;
  mc.d_net = 8;
  mc.d_pin = 4;
  mc.hidden = 8;
  mc.layers = 2;
  ModelParams p = init_model(mc, 11);
  const double lam = 0.35;

  Tape t;
  ForwardIds ids = forward(t, p, g, lam);
  t.backward(ids.loss);

  auto loss_at = [&](const ModelParams& q) {
    Tape t2;
    return t2.val(forward(t2, q, g, lam).loss)(0, 0);
  };

  Rng rng(12);
  const double h = 1e-5;
  int checked = 0;
  for (size_t mi = 0; mi < p.mats.size(); ++mi) {
    const int pid = ids.params[mi];
    REQUIRE(t.has_grad(pid));
    const Mat& grad = t.grad(pid);
    for (int probe = 0; probe < 3; ++probe) {
      const size_t k = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(p.mats[mi].second.size()) - 1));
      ModelParams hi = p, lo = p;
      hi.mats[mi].second.v[k] += h;
      lo.mats[mi].second.v[k] -= h;
      const double fd = (loss_at(hi) - loss_at(lo)) / (2.0 * h);
      if (std::abs(fd) < 1e-10 && std::abs(grad.v[k]) < 1e-10) continue;
      CHECK(testutil::rel_err(grad.v[k], fd) < 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("initialization and training are deterministic") {
  ModelParams a = init_model(ModelConfig{}, 42);
  ModelParams b = init_model(ModelConfig{}, 42);
  ModelParams c = init_model(ModelConfig{}, 43);
  REQUIRE(a.mats.size() == b.mats.size());
  bool differs = false;
  for (size_t i = 0; i < a.mats.size(); ++i) {
    CHECK(a.mats[i].second.v == b.mats[i].second.v);
    if (a.mats[i].second.v != c.mats[i].second.v) differs = true;
  }
  CHECK(differs);

  Netlist nl = small_circuit(9);
  CellFlow flow = build_cellflow(nl);
  RelEncoding target = encode(nl, flow, make_random_placement(nl, 5));
  std::vector<GraphBatch> graphs = {make_batch(nl, featurize(nl), flow, &target)};
  TrainConfig tc;
  tc.epochs = 8;
  ModelParams m1 = init_model(ModelConfig{}, 42);
  ModelParams m2 = init_model(ModelConfig{}, 42);
  TrainStats s1 = train(m1, graphs, tc, nullptr);
  TrainStats s2 = train(m2, graphs, tc, nullptr);
  CHECK(s1.loss == s2.loss);
  for (size_t i = 0; i < m1.mats.size(); ++i)
    CHECK(m1.mats[i].second.v == m2.mats[i].second.v);
}

TEST_CASE("training reduces the loss and logs one JSON object per epoch") {
  Netlist nl = small_circuit(10);
  CellFlow flow = build_cellflow(nl);
  RelEncoding target = encode(nl, flow, make_random_placement(nl, 6));
  std::vector<GraphBatch> graphs = {make_batch(nl, featurize(nl), flow, &target)};
  TrainConfig tc;
  tc.epochs = 40;
  tc.adam.lr = 1e-3;
  ModelParams m = init_model(ModelConfig{}, 1);
  std::ostringstream log;
  TrainStats stats = train(m, graphs, tc, &log);
  REQUIRE(stats.loss.size() == 40);
  CHECK(stats.loss.back() < stats.loss.front());

  std::istringstream in(log.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch").get<int>() == rows);
    CHECK(j.at("loss").get<double>() == doctest::Approx(stats.loss[rows]));
    CHECK(j.at("loss_rho").get<double>() == doctest::Approx(stats.loss_rho[rows]));
    CHECK(j.at("loss_theta").get<double>() == doctest::Approx(stats.loss_theta[rows]));
    ++rows;
  }
  CHECK(rows == 40);
}

TEST_CASE("checkpoint roundtrip preserves config and weights") {
  ModelConfig mc;
  mc.d_cell = 12;
  mc.d_net = 10;
  mc.d_pin = 6;
  mc.hidden = 14;
  mc.layers = 2;
  mc.rho_scale = 9.0;
  mc.rho_shift = -1.5;
  ModelParams p = init_model(mc, 77);
  testutil::TempDir dir("ckpt");
  const std::string path = dir.str("model.ckpt");
  save_model(p, path);
  ModelParams q = load_model(path);
  CHECK(q.cfg.d_cell == mc.d_cell);
  CHECK(q.cfg.d_net == mc.d_net);
  CHECK(q.cfg.d_pin == mc.d_pin);
  CHECK(q.cfg.hidden == mc.hidden);
  CHECK(q.cfg.layers == mc.layers);
  CHECK(q.cfg.rho_scale == mc.rho_scale);
  CHECK(q.cfg.rho_shift == mc.rho_shift);
  REQUIRE(q.mats.size() == p.mats.size());
  for (size_t i = 0; i < p.mats.size(); ++i) {
    CHECK(q.mats[i].first == p.mats[i].first);
    CHECK(q.mats[i].second.v == p.mats[i].second.v);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  ModelParams p = init_model(ModelConfig{}, 3);
  testutil::TempDir dir("ckpt-bad");
  const std::string good = dir.str("good.ckpt");
  save_model(p, good);

  SUBCASE("bad magic") {
    std::string bytes = testutil::slurp(good);
    bytes[0] = 'X';
    std::ofstream(dir.str("magic.ckpt"), std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_model(dir.str("magic.ckpt")), Error);
  }
  SUBCASE("truncated") {
    std::string bytes = testutil::slurp(good);
    bytes.resize(bytes.size() / 2);
    std::ofstream(dir.str("trunc.ckpt"), std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_model(dir.str("trunc.ckpt")), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(dir.str("absent.ckpt")), Error);
  }
}

TEST_CASE("inductive placement stays inside the core and moves no terminal") {
  Netlist nl = small_circuit(11, 60, 6);
  ModelParams p = init_model(ModelConfig{}, 5);
  PartitionConfig pc;
  pc.target_parts = 2;
  pc.max_part_cells = 24;
  Placement out = inductive_place(nl, p, pc);
  REQUIRE(static_cast<int>(out.pos.size()) == nl.num_cells());
  for (int i = 0; i < nl.num_cells(); ++i) {
    const Cell& cell = nl.cells[i];
    if (cell.is_terminal) {
      CHECK(out.pos[i].x == nl.terminal_pos[i].x);
      CHECK(out.pos[i].y == nl.terminal_pos[i].y);
    } else {
      CHECK(out.pos[i].x >= nl.core.x_lo - 1e-9);
      CHECK(out.pos[i].y >= nl.core.y_lo - 1e-9);
      CHECK(out.pos[i].x <= nl.core.x_hi + 1e-9);
      CHECK(out.pos[i].y <= nl.core.y_hi + 1e-9);
    }
  }
}
