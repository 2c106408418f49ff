#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "core/cellflow.hpp"
#include "core/grad.hpp"
#include "core/hier.hpp"
#include "core/netlist.hpp"
#include "core/partition.hpp"
#include "core/se2codec.hpp"

namespace gp {

struct ModelConfig {
  int d_cell = 64;
  int d_net = 64;
  int d_pin = 8;
  int hidden = 64;
  int layers = 3;
  // rho_hat = exp(rho_shift + rho_scale * tanh(head output)), so predictions
  // stay within (exp(shift - scale), exp(shift + scale)).
  double rho_scale = 15.0;
  double rho_shift = -2.0;
};

// All weights in a fixed order shared by the optimizer, the checkpoint
// format, and the forward pass: feature embeddings for cells, nets and
// pins, per-round message weights, the two readout heads, and the two
// stand-in rows used when an edge's source has no income edge.
struct ModelParams {
  ModelConfig cfg;
  std::vector<std::pair<std::string, Mat>> mats;

  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
};

ModelParams init_model(const ModelConfig& cfg, uint64_t seed);

// Tensors of one graph plus the index maps the forward pass gathers and
// scatters with. income_src/income_net hold, per flow edge, the source's
// income edge endpoints; num_cells/num_nets stand in when the source is a
// terminal and the readout substitutes the learned stand-in rows.
struct GraphBatch {
  Mat x_cell, x_net, x_pin;
  IndexVec pin_cell, pin_net;
  IndexVec edge_src, edge_dst, edge_net;
  IndexVec income_src, income_net;
  Mat target_log_rho;  // [E,1]; empty when built without targets
  Mat target_dtheta;   // [E,1]
  int num_cells = 0, num_nets = 0, num_pins = 0, num_edges = 0;

  bool has_targets() const { return !target_log_rho.v.empty(); }
};

GraphBatch make_batch(const Netlist& nl, const FeatureSet& feat,
                      const CellFlow& flow, const RelEncoding* target);

// Tape node ids produced by one forward pass. z is the linear predictor of
// log rho (the value the rho loss regresses); loss ids are -1 when the
// batch carries no targets.
struct ForwardIds {
  int rho = -1;
  int dtheta = -1;
  int z = -1;
  int loss = -1;
  int loss_rho = -1;
  int loss_theta = -1;
  std::vector<int> params;  // aligned with ModelParams::mats
};

ForwardIds forward(Tape& tape, const ModelParams& p, const GraphBatch& batch,
                   double lambda_theta);

// Convenience inference wrapper: forward without targets, predictions
// copied out of the tape.
RelEncoding predict(const ModelParams& p, const GraphBatch& batch);

struct TrainConfig {
  int epochs = 500;
  double lambda_theta = 0.1;
  uint64_t seed = 1;  // weight initialization; the loop itself is deterministic
  AdamConfig adam;
};

struct TrainStats {
  std::vector<double> loss;        // per-epoch mean over graphs
  std::vector<double> loss_rho;
  std::vector<double> loss_theta;
};

// Full-batch training: per epoch, gradients are averaged over every graph
// and one optimizer step is taken. When loss_log is given, one JSON object
// per epoch is appended ({"epoch", "loss", "loss_rho", "loss_theta"}).
TrainStats train(ModelParams& p, const std::vector<GraphBatch>& graphs,
                 const TrainConfig& cfg, std::ostream* loss_log);

// Expands a placed netlist into per-hierarchy-graph training batches with
// encoding targets derived from the teacher placement.
std::vector<GraphBatch> make_training_batches(const Netlist& nl, const Placement& teacher,
                                              const PartitionConfig& part_cfg);

// Hierarchy inference: predict encodings for the root and every branch,
// decode each graph, compose, and clamp the result into the core. The
// second form partitions and builds the hierarchy itself.
Placement inductive_place(const Netlist& nl, const HierNetlist& hier,
                          const ModelParams& p);
Placement inductive_place(const Netlist& nl, const ModelParams& p,
                          const PartitionConfig& part_cfg);

void save_model(const ModelParams& p, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace gp
