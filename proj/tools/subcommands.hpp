#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Subcommand implementations. Functions throw gpcli::CliError on failure;
// on success they print a one-line summary (eval prints a table). The
// pipeline command drives the same functions other subcommands use, which
// is what makes a pipeline run and the equivalent subcommand sequence
// produce identical files.
namespace gpcli {

struct HierSettings {
  int target_parts = 0;
  int max_part_cells = 0;
  double epsilon = 0.0;
};
HierSettings default_hier_settings();

struct TrainSettings {
  int epochs = 0;
  double lambda_theta = 0.0;
  double lr = 0.0;
  double lr_decay = 0.0;
  double weight_decay = 0.0;
};
TrainSettings default_train_settings();

struct FinetuneSettings {
  double learning_rate = 0.0;
  double lambda_d_init = 0.0;
  int max_iterations = 0;
  double upper_pcof = 0.0;
  double gamma = 0.0;
  int grid_m = 0;
  bool has_rigid = false;
  double rigid_theta = 0.0, rigid_dx = 0.0, rigid_dy = 0.0;
  double stop_overflow = 0.0;
  double hpwl_divisor = 0.0;
  double target_density = 0.0;
};
FinetuneSettings default_finetune_settings();

struct MetricsSettings {
  int grid_m = 0;
  double rc = 0.0;
  int density_grid = 0;
  double target_density = 0.0;
};
MetricsSettings default_metrics_settings();

struct GenArgs {
  uint64_t seed = 0;  // root seed; the generator stream is derived from it
  int cells = 0;
  int terminals = 0;
  double net_degree = 0.0;
  std::string out_dir;
  std::string base = "circuit";
};
GenArgs default_gen_args();  // generator defaults for the numeric fields
void cmd_gen(const GenArgs& a);

struct PartitionArgs {
  std::string circuit;
  HierSettings hier;
  std::string dump_dir;  // --dump-hier; empty: no dump
};
void cmd_partition(const PartitionArgs& a);

struct FlowArgs {
  std::string circuit;
  std::string dump_path;  // --dump-flow; empty: no dump
};
void cmd_flow(const FlowArgs& a);

struct RoundtripArgs {
  std::string circuit;
  std::string pl;  // empty: random placement derived from seed
  uint64_t seed = 0;
  std::string dump_enc;  // empty: no dump
};
void cmd_roundtrip(const RoundtripArgs& a);

struct TeachArgs {
  std::string circuit;
  std::string out_pl;
  std::string history;  // empty: no history file
  uint64_t seed = 0;
  FinetuneSettings ft;
};
void cmd_teach(const TeachArgs& a);

struct TrainArgs {
  std::vector<std::string> circuits;
  std::vector<std::string> teachers;  // parallel to circuits
  std::string ckpt_out;
  std::string loss_log;  // empty: no log
  uint64_t seed = 0;
  HierSettings hier;
  TrainSettings train;
};
void cmd_train(const TrainArgs& a);

struct PlaceArgs {
  std::string circuit;
  std::string ckpt;
  std::string out_pl;
  HierSettings hier;
};
void cmd_place(const PlaceArgs& a);

struct FinetuneArgs {
  std::string circuit;
  std::string init_pl;  // empty: random placement derived from seed
  std::string out_pl;
  std::string history;  // empty: no history file
  uint64_t seed = 0;
  FinetuneSettings ft;
};
void cmd_finetune(const FinetuneArgs& a);

struct EvalArgs {
  std::string circuit;
  std::string pl;
  std::string report;        // empty: print only
  std::string runtime_json;  // path to a stage->seconds object; empty: {}
  uint64_t seed = 0;
  HierSettings hier;
  MetricsSettings metrics;
};
void cmd_eval(const EvalArgs& a);

struct PipelineArgs {
  std::string circuit;  // existing .aux; empty: generate into out_dir
  std::string out_dir;
  std::string ckpt;  // existing checkpoint; empty: teach + train one here
  uint64_t seed = 0;
  GenArgs gen;  // cells/terminals/net_degree used when generating
  HierSettings hier;
  TrainSettings train;
  FinetuneSettings ft;
  MetricsSettings metrics;
};
void cmd_pipeline(const PipelineArgs& a);

}  // namespace gpcli
