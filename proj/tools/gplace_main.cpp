// CLI driver. Option precedence per setting: built-in default, then the
// --config file value, then the flag; flags always win. Exit codes: 0 ok,
// 2 usage, 3 input validation, 4 numeric failure, 5 I/O.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "subcommands.hpp"

using gpcli::CliError;
using gpcli::ConfigFile;

namespace {

// Bundles a subcommand's --config/--seed handling. Settings overlays run
// inside the callback, after flags are parsed, so count() distinguishes
// flag-set fields from defaults.
struct Common {
  std::string config_path;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  ConfigFile cfg;  // empty when no --config given

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    seed_opt = cmd->add_option("--seed", seed, "root seed; stage streams derive from it");
  }

  void load() {
    if (!config_path.empty()) cfg = gpcli::load_config(config_path);
    if (!seed_opt->count()) seed = cfg.get_u64("run.seed", seed);
  }

  void overlay(CLI::Option* opt, const char* key, double& v) const {
    if (!opt->count() && cfg.has(key)) v = cfg.get_double(key, v);
  }
  void overlay(CLI::Option* opt, const char* key, int& v) const {
    if (!opt->count() && cfg.has(key)) v = cfg.get_int(key, v);
  }
  void overlay(CLI::Option* opt, const char* key, std::string& v) const {
    if (!opt->count() && cfg.has(key)) v = cfg.get_string(key, v);
  }
};

struct HierOpts {
  CLI::Option *target_parts, *max_part_cells, *epsilon;
};

HierOpts add_hier_opts(CLI::App* cmd, gpcli::HierSettings& s) {
  HierOpts o;
  o.target_parts = cmd->add_option("--target-parts", s.target_parts,
                                   "grow the partition at least this many parts");
  o.max_part_cells =
      cmd->add_option("--max-part-cells", s.max_part_cells, "cap on cells per part");
  o.epsilon = cmd->add_option("--epsilon", s.epsilon, "bisection balance slack");
  return o;
}

void overlay_hier(const Common& c, const HierOpts& o, gpcli::HierSettings& s) {
  c.overlay(o.target_parts, "hier.target_parts", s.target_parts);
  c.overlay(o.max_part_cells, "hier.max_part_cells", s.max_part_cells);
  c.overlay(o.epsilon, "hier.epsilon", s.epsilon);
}

struct TrainOpts {
  CLI::Option *epochs, *lambda_theta, *lr, *lr_decay, *weight_decay;
};

TrainOpts add_train_opts(CLI::App* cmd, gpcli::TrainSettings& s, const std::string& p = "") {
  TrainOpts o;
  o.epochs = cmd->add_option("--" + p + "epochs", s.epochs, "training epochs");
  o.lambda_theta =
      cmd->add_option("--" + p + "lambda-theta", s.lambda_theta, "angle loss weight");
  o.lr = cmd->add_option("--" + p + "lr", s.lr, "Adam learning rate");
  o.lr_decay = cmd->add_option("--" + p + "lr-decay", s.lr_decay, "per-epoch lr decay");
  o.weight_decay =
      cmd->add_option("--" + p + "weight-decay", s.weight_decay, "decoupled weight decay");
  return o;
}

void overlay_train(const Common& c, const TrainOpts& o, gpcli::TrainSettings& s) {
  c.overlay(o.epochs, "train.epochs", s.epochs);
  c.overlay(o.lambda_theta, "train.lambda_theta", s.lambda_theta);
  c.overlay(o.lr, "train.lr", s.lr);
  c.overlay(o.lr_decay, "train.lr_decay", s.lr_decay);
  c.overlay(o.weight_decay, "train.weight_decay", s.weight_decay);
}

struct FtOpts {
  CLI::Option *lr, *lambda_init, *iterations, *upper_pcof, *gamma, *grid;
  CLI::Option *rigid_theta, *rigid_dx, *rigid_dy;
  CLI::Option *stop_overflow, *hpwl_divisor, *target_density;
};

FtOpts add_ft_opts(CLI::App* cmd, gpcli::FinetuneSettings& s, const std::string& p = "") {
  FtOpts o;
  o.lr = cmd->add_option("--" + p + "lr", s.learning_rate, "descent step size");
  o.lambda_init =
      cmd->add_option("--" + p + "lambda-init", s.lambda_d_init, "initial density weight");
  o.iterations = cmd->add_option("--" + p + "iterations", s.max_iterations, "iteration cap");
  o.upper_pcof =
      cmd->add_option("--" + p + "upper-pcof", s.upper_pcof, "density weight growth cap");
  o.gamma = cmd->add_option("--" + p + "gamma", s.gamma, "wirelength sharpness");
  o.grid = cmd->add_option("--" + p + "grid", s.grid_m, "density bins per side");
  o.rigid_theta = cmd->add_option("--" + p + "rigid-theta", s.rigid_theta,
                                  "fixed pre-rotation (degrees); default auto-fit");
  o.rigid_dx = cmd->add_option("--" + p + "rigid-dx", s.rigid_dx, "fixed pre-translation x");
  o.rigid_dy = cmd->add_option("--" + p + "rigid-dy", s.rigid_dy, "fixed pre-translation y");
  o.stop_overflow =
      cmd->add_option("--" + p + "stop-overflow", s.stop_overflow, "early-stop overflow");
  o.hpwl_divisor = cmd->add_option("--" + p + "hpwl-divisor", s.hpwl_divisor,
                                   "density schedule divisor; 0 scales with the instance");
  o.target_density =
      cmd->add_option("--" + p + "target-density", s.target_density, "bin capacity fraction");
  return o;
}

void overlay_ft(const Common& c, const FtOpts& o, gpcli::FinetuneSettings& s) {
  c.overlay(o.lr, "finetune.learning_rate", s.learning_rate);
  c.overlay(o.lambda_init, "finetune.lambda_d_init", s.lambda_d_init);
  c.overlay(o.iterations, "finetune.max_iterations", s.max_iterations);
  c.overlay(o.upper_pcof, "finetune.upper_pcof", s.upper_pcof);
  c.overlay(o.gamma, "finetune.gamma", s.gamma);
  c.overlay(o.grid, "finetune.grid_m", s.grid_m);
  c.overlay(o.rigid_theta, "finetune.rigid_theta", s.rigid_theta);
  c.overlay(o.rigid_dx, "finetune.rigid_dx", s.rigid_dx);
  c.overlay(o.rigid_dy, "finetune.rigid_dy", s.rigid_dy);
  c.overlay(o.stop_overflow, "finetune.stop_overflow", s.stop_overflow);
  c.overlay(o.hpwl_divisor, "finetune.hpwl_divisor", s.hpwl_divisor);
  c.overlay(o.target_density, "finetune.target_density", s.target_density);
  s.has_rigid = o.rigid_theta->count() || o.rigid_dx->count() || o.rigid_dy->count() ||
                c.cfg.has("finetune.rigid_theta") || c.cfg.has("finetune.rigid_dx") ||
                c.cfg.has("finetune.rigid_dy");
}

struct MetricsOpts {
  CLI::Option *grid, *rc, *density_grid, *target_density;
};

MetricsOpts add_metrics_opts(CLI::App* cmd, gpcli::MetricsSettings& s,
                             const std::string& p = "") {
  MetricsOpts o;
  o.grid = cmd->add_option("--" + p + "grid", s.grid_m, "congestion bins per side");
  o.rc = cmd->add_option("--" + p + "rc", s.rc, "bin routing capacity; 0 calibrates");
  o.density_grid =
      cmd->add_option("--" + p + "density-grid", s.density_grid, "density bins per side");
  o.target_density =
      cmd->add_option("--" + p + "target-density", s.target_density, "bin capacity fraction");
  return o;
}

void overlay_metrics(const Common& c, const MetricsOpts& o, gpcli::MetricsSettings& s) {
  c.overlay(o.grid, "metrics.grid_m", s.grid_m);
  c.overlay(o.rc, "metrics.rc", s.rc);
  c.overlay(o.density_grid, "metrics.density_grid", s.density_grid);
  c.overlay(o.target_density, "metrics.target_density", s.target_density);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gplace: transferable global placement toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic Bookshelf circuit");
  Common gen_c;
  gen_c.add(gen);
  gpcli::GenArgs gen_a = gpcli::default_gen_args();
  auto* gen_out = gen->add_option("--out", gen_a.out_dir, "output directory");
  auto* gen_base = gen->add_option("--base", gen_a.base, "file set base name");
  auto* gen_cells = gen->add_option("--cells", gen_a.cells, "movable cell count");
  auto* gen_terms = gen->add_option("--terminals", gen_a.terminals, "terminal count");
  auto* gen_deg = gen->add_option("--net-degree", gen_a.net_degree, "average net degree");
  gen->callback([&] {
    gen_c.load();
    gen_c.overlay(gen_out, "run.out_dir", gen_a.out_dir);
    gen_c.overlay(gen_base, "gen.base", gen_a.base);
    gen_c.overlay(gen_cells, "gen.cells", gen_a.cells);
    gen_c.overlay(gen_terms, "gen.terminals", gen_a.terminals);
    gen_c.overlay(gen_deg, "gen.net_degree", gen_a.net_degree);
    gen_a.seed = gen_c.seed;
    gpcli::cmd_gen(gen_a);
  });

  // partition
  auto* part = app.add_subcommand("partition", "build and report the netlist hierarchy");
  Common part_c;
  part_c.add(part);
  gpcli::PartitionArgs part_a;
  part_a.hier = gpcli::default_hier_settings();
  auto* part_circuit = part->add_option("--circuit", part_a.circuit, "input .aux file");
  HierOpts part_h = add_hier_opts(part, part_a.hier);
  part->add_option("--dump-hier", part_a.dump_dir,
                   "write every hierarchy graph as a Bookshelf set plus manifest.json");
  part->callback([&] {
    part_c.load();
    part_c.overlay(part_circuit, "run.circuit", part_a.circuit);
    overlay_hier(part_c, part_h, part_a.hier);
    if (part_a.circuit.empty()) throw CliError(2, "partition: --circuit required");
    gpcli::cmd_partition(part_a);
  });

  // flow
  auto* flow = app.add_subcommand("flow", "build and report the cell flow");
  Common flow_c;
  flow_c.add(flow);
  gpcli::FlowArgs flow_a;
  auto* flow_circuit = flow->add_option("--circuit", flow_a.circuit, "input .aux file");
  flow->add_option("--dump-flow", flow_a.dump_path,
                   "write edges as 'src dst net income_flag' lines");
  flow->callback([&] {
    flow_c.load();
    flow_c.overlay(flow_circuit, "run.circuit", flow_a.circuit);
    if (flow_a.circuit.empty()) throw CliError(2, "flow: --circuit required");
    gpcli::cmd_flow(flow_a);
  });

  // roundtrip
  auto* rt = app.add_subcommand("roundtrip", "encode then decode a placement, print max error");
  Common rt_c;
  rt_c.add(rt);
  gpcli::RoundtripArgs rt_a;
  auto* rt_circuit = rt->add_option("--circuit", rt_a.circuit, "input .aux file");
  rt->add_option("--pl", rt_a.pl, "placement to roundtrip; default random from seed");
  rt->add_option("--dump-enc", rt_a.dump_enc, "write 'edge_idx rho dtheta' lines");
  rt->callback([&] {
    rt_c.load();
    rt_c.overlay(rt_circuit, "run.circuit", rt_a.circuit);
    if (rt_a.circuit.empty()) throw CliError(2, "roundtrip: --circuit required");
    rt_a.seed = rt_c.seed;
    gpcli::cmd_roundtrip(rt_a);
  });

  // teach
  auto* teach = app.add_subcommand("teach", "produce a teacher placement from random init");
  Common teach_c;
  teach_c.add(teach);
  gpcli::TeachArgs teach_a;
  teach_a.ft = gpcli::default_finetune_settings();
  auto* teach_circuit = teach->add_option("--circuit", teach_a.circuit, "input .aux file");
  teach->add_option("--out", teach_a.out_pl, "teacher placement output path");
  teach->add_option("--history", teach_a.history, "optimization history JSONL path");
  FtOpts teach_f = add_ft_opts(teach, teach_a.ft);
  teach->callback([&] {
    teach_c.load();
    teach_c.overlay(teach_circuit, "run.circuit", teach_a.circuit);
    overlay_ft(teach_c, teach_f, teach_a.ft);
    if (teach_a.circuit.empty()) throw CliError(2, "teach: --circuit required");
    teach_a.seed = teach_c.seed;
    gpcli::cmd_teach(teach_a);
  });

  // train
  auto* train = app.add_subcommand("train", "train a model on teacher placements");
  Common train_c;
  train_c.add(train);
  gpcli::TrainArgs train_a;
  train_a.hier = gpcli::default_hier_settings();
  train_a.train = gpcli::default_train_settings();
  train->add_option("--circuit", train_a.circuits, "training circuit .aux (repeatable)");
  train->add_option("--teacher", train_a.teachers, "teacher .pl, one per circuit");
  train->add_option("--out", train_a.ckpt_out, "checkpoint output path");
  train->add_option("--loss-log", train_a.loss_log, "per-epoch loss JSONL path");
  HierOpts train_h = add_hier_opts(train, train_a.hier);
  TrainOpts train_t = add_train_opts(train, train_a.train);
  train->callback([&] {
    train_c.load();
    overlay_hier(train_c, train_h, train_a.hier);
    overlay_train(train_c, train_t, train_a.train);
    train_a.seed = train_c.seed;
    gpcli::cmd_train(train_a);
  });

  // place
  auto* place = app.add_subcommand("place", "one-shot placement from a trained model");
  Common place_c;
  place_c.add(place);
  gpcli::PlaceArgs place_a;
  place_a.hier = gpcli::default_hier_settings();
  auto* place_circuit = place->add_option("--circuit", place_a.circuit, "input .aux file");
  auto* place_ckpt = place->add_option("--ckpt", place_a.ckpt, "model checkpoint");
  place->add_option("--out", place_a.out_pl, "placement output path");
  HierOpts place_h = add_hier_opts(place, place_a.hier);
  place->callback([&] {
    place_c.load();
    place_c.overlay(place_circuit, "run.circuit", place_a.circuit);
    place_c.overlay(place_ckpt, "run.ckpt", place_a.ckpt);
    overlay_hier(place_c, place_h, place_a.hier);
    if (place_a.circuit.empty()) throw CliError(2, "place: --circuit required");
    if (place_a.ckpt.empty()) throw CliError(2, "place: --ckpt required");
    gpcli::cmd_place(place_a);
  });

  // finetune
  auto* ft = app.add_subcommand("finetune", "gradient refinement of a placement");
  Common ft_c;
  ft_c.add(ft);
  gpcli::FinetuneArgs ft_a;
  ft_a.ft = gpcli::default_finetune_settings();
  auto* ft_circuit = ft->add_option("--circuit", ft_a.circuit, "input .aux file");
  ft->add_option("--init", ft_a.init_pl, "initial placement; default random from seed");
  ft->add_option("--out", ft_a.out_pl, "placement output path");
  ft->add_option("--history", ft_a.history, "optimization history JSONL path");
  FtOpts ft_f = add_ft_opts(ft, ft_a.ft);
  ft->callback([&] {
    ft_c.load();
    ft_c.overlay(ft_circuit, "run.circuit", ft_a.circuit);
    overlay_ft(ft_c, ft_f, ft_a.ft);
    if (ft_a.circuit.empty()) throw CliError(2, "finetune: --circuit required");
    ft_a.seed = ft_c.seed;
    gpcli::cmd_finetune(ft_a);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "quality report for a placement");
  Common ev_c;
  ev_c.add(ev);
  gpcli::EvalArgs ev_a;
  ev_a.hier = gpcli::default_hier_settings();
  ev_a.metrics = gpcli::default_metrics_settings();
  auto* ev_circuit = ev->add_option("--circuit", ev_a.circuit, "input .aux file");
  ev->add_option("--pl", ev_a.pl, "placement to evaluate");
  ev->add_option("--report", ev_a.report, "report JSON output path");
  ev->add_option("--runtime-json", ev_a.runtime_json,
                 "stage -> seconds JSON embedded in the report");
  HierOpts ev_h = add_hier_opts(ev, ev_a.hier);
  MetricsOpts ev_m = add_metrics_opts(ev, ev_a.metrics);
  ev->callback([&] {
    ev_c.load();
    ev_c.overlay(ev_circuit, "run.circuit", ev_a.circuit);
    overlay_hier(ev_c, ev_h, ev_a.hier);
    overlay_metrics(ev_c, ev_m, ev_a.metrics);
    if (ev_a.circuit.empty()) throw CliError(2, "eval: --circuit required");
    if (ev_a.pl.empty()) throw CliError(2, "eval: --pl required");
    ev_a.seed = ev_c.seed;
    gpcli::cmd_eval(ev_a);
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "generate/teach/train/place/finetune/eval");
  Common pipe_c;
  pipe_c.add(pipe);
  gpcli::PipelineArgs pipe_a;
  pipe_a.gen = gpcli::default_gen_args();
  pipe_a.hier = gpcli::default_hier_settings();
  pipe_a.train = gpcli::default_train_settings();
  pipe_a.ft = gpcli::default_finetune_settings();
  pipe_a.metrics = gpcli::default_metrics_settings();
  auto* pipe_circuit =
      pipe->add_option("--circuit", pipe_a.circuit, "existing .aux; omit to generate one");
  auto* pipe_ckpt =
      pipe->add_option("--ckpt", pipe_a.ckpt, "existing checkpoint; omit to train one");
  auto* pipe_out = pipe->add_option("--out", pipe_a.out_dir, "output directory");
  auto* pipe_cells = pipe->add_option("--cells", pipe_a.gen.cells, "movable cell count");
  auto* pipe_terms =
      pipe->add_option("--terminals", pipe_a.gen.terminals, "terminal count");
  auto* pipe_deg =
      pipe->add_option("--net-degree", pipe_a.gen.net_degree, "average net degree");
  HierOpts pipe_h = add_hier_opts(pipe, pipe_a.hier);
  TrainOpts pipe_t = add_train_opts(pipe, pipe_a.train, "train-");
  FtOpts pipe_f = add_ft_opts(pipe, pipe_a.ft, "ft-");
  MetricsOpts pipe_m = add_metrics_opts(pipe, pipe_a.metrics, "metrics-");
  pipe->callback([&] {
    pipe_c.load();
    pipe_c.overlay(pipe_circuit, "run.circuit", pipe_a.circuit);
    pipe_c.overlay(pipe_ckpt, "run.ckpt", pipe_a.ckpt);
    pipe_c.overlay(pipe_out, "run.out_dir", pipe_a.out_dir);
    pipe_c.overlay(pipe_cells, "gen.cells", pipe_a.gen.cells);
    pipe_c.overlay(pipe_terms, "gen.terminals", pipe_a.gen.terminals);
    pipe_c.overlay(pipe_deg, "gen.net_degree", pipe_a.gen.net_degree);
    overlay_hier(pipe_c, pipe_h, pipe_a.hier);
    overlay_train(pipe_c, pipe_t, pipe_a.train);
    overlay_ft(pipe_c, pipe_f, pipe_a.ft);
    overlay_metrics(pipe_c, pipe_m, pipe_a.metrics);
    pipe_a.seed = pipe_c.seed;
    gpcli::cmd_pipeline(pipe_a);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gplace: usage: " << e.what() << "\n";
    return 2;
  } catch (const CliError& e) {
    std::cerr << "gplace: error: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "gplace: error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
