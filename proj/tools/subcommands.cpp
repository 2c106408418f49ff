#include "subcommands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "cli_config.hpp"
#include "gplace.h"

namespace fs = std::filesystem;

namespace gpcli {

namespace {

void check(gp_status st, const char* stage) {
  if (st == GP_OK) return;
  std::string msg = gp_last_error();
  std::string prefix = std::string(stage) + ":";
  if (msg.rfind(prefix, 0) != 0) msg = prefix + " " + msg;
  throw CliError(static_cast<int>(st), msg);
}

using NetlistPtr = std::unique_ptr<gp_netlist, decltype(&gp_netlist_free)>;
using PlacementPtr = std::unique_ptr<gp_placement, decltype(&gp_placement_free)>;
using HierPtr = std::unique_ptr<gp_hier, decltype(&gp_hier_free)>;
using FlowPtr = std::unique_ptr<gp_flow, decltype(&gp_flow_free)>;
using ModelPtr = std::unique_ptr<gp_model, decltype(&gp_model_free)>;

NetlistPtr read_netlist(const std::string& aux, const char* stage) {
  gp_netlist* nl = nullptr;
  check(gp_netlist_read(aux.c_str(), &nl), stage);
  return {nl, gp_netlist_free};
}

PlacementPtr read_placement(const gp_netlist* nl, const std::string& path, const char* stage) {
  gp_placement* pl = nullptr;
  check(gp_placement_read(nl, path.c_str(), &pl), stage);
  return {pl, gp_placement_free};
}

PlacementPtr random_placement(const gp_netlist* nl, uint64_t seed, const char* stage) {
  gp_placement* pl = nullptr;
  check(gp_placement_random(nl, seed, &pl), stage);
  return {pl, gp_placement_free};
}

gp_partition_config to_c(const HierSettings& s) {
  gp_partition_config c;
  c.target_parts = s.target_parts;
  c.max_part_cells = s.max_part_cells;
  c.epsilon = s.epsilon;
  return c;
}

gp_train_config to_c(const TrainSettings& s) {
  gp_train_config c;
  c.epochs = s.epochs;
  c.lambda_theta = s.lambda_theta;
  c.lr = s.lr;
  c.lr_decay = s.lr_decay;
  c.weight_decay = s.weight_decay;
  return c;
}

gp_finetune_config to_c(const FinetuneSettings& s) {
  gp_finetune_config c;
  c.learning_rate = s.learning_rate;
  c.lambda_d_init = s.lambda_d_init;
  c.max_iterations = s.max_iterations;
  c.upper_pcof = s.upper_pcof;
  c.gamma = s.gamma;
  c.grid_m = s.grid_m;
  c.has_rigid = s.has_rigid ? 1 : 0;
  c.rigid_theta_deg = s.rigid_theta;
  c.rigid_dx = s.rigid_dx;
  c.rigid_dy = s.rigid_dy;
  c.stop_overflow = s.stop_overflow;
  c.hpwl_divisor = s.hpwl_divisor;
  c.target_density = s.target_density;
  return c;
}

gp_metrics_config to_c(const MetricsSettings& s) {
  gp_metrics_config c;
  c.grid_m = s.grid_m;
  c.rc = s.rc;
  c.density_grid = s.density_grid;
  c.target_density = s.target_density;
  return c;
}

}  // namespace

HierSettings default_hier_settings() {
  gp_partition_config c;
  gp_partition_config_default(&c);
  return {c.target_parts, c.max_part_cells, c.epsilon};
}

TrainSettings default_train_settings() {
  gp_train_config c;
  gp_train_config_default(&c);
  return {c.epochs, c.lambda_theta, c.lr, c.lr_decay, c.weight_decay};
}

FinetuneSettings default_finetune_settings() {
  gp_finetune_config c;
  gp_finetune_config_default(&c);
  FinetuneSettings s;
  s.learning_rate = c.learning_rate;
  s.lambda_d_init = c.lambda_d_init;
  s.max_iterations = c.max_iterations;
  s.upper_pcof = c.upper_pcof;
  s.gamma = c.gamma;
  s.grid_m = c.grid_m;
  s.has_rigid = c.has_rigid != 0;
  s.rigid_theta = c.rigid_theta_deg;
  s.rigid_dx = c.rigid_dx;
  s.rigid_dy = c.rigid_dy;
  s.stop_overflow = c.stop_overflow;
  s.hpwl_divisor = c.hpwl_divisor;
  s.target_density = c.target_density;
  return s;
}

MetricsSettings default_metrics_settings() {
  gp_metrics_config c;
  gp_metrics_config_default(&c);
  return {c.grid_m, c.rc, c.density_grid, c.target_density};
}

GenArgs default_gen_args() {
  gp_synth_config c;
  gp_synth_config_default(&c);
  GenArgs a;
  a.cells = c.num_movable;
  a.terminals = c.num_terminals;
  a.net_degree = c.avg_net_degree;
  return a;
}

void cmd_gen(const GenArgs& a) {
  if (a.out_dir.empty()) throw CliError(2, "gen: --out directory required");
  gp_synth_config c;
  gp_synth_config_default(&c);
  c.num_movable = a.cells;
  c.num_terminals = a.terminals;
  c.avg_net_degree = a.net_degree;
  c.seed = gp_stage_seed(a.seed, "gen");
  gp_netlist* nl = nullptr;
  gp_placement* latent = nullptr;
  check(gp_netlist_generate(&c, &nl, &latent), "gen");
  NetlistPtr nlp(nl, gp_netlist_free);
  PlacementPtr latp(latent, gp_placement_free);
  check(gp_netlist_write(nl, a.out_dir.c_str(), a.base.c_str(), latent), "gen");
  std::cout << "gen: cells=" << gp_netlist_num_cells(nl)
            << " nets=" << gp_netlist_num_nets(nl) << " pins=" << gp_netlist_num_pins(nl)
            << " -> " << (fs::path(a.out_dir) / (a.base + ".aux")).string() << "\n";
}

void cmd_partition(const PartitionArgs& a) {
  NetlistPtr nl = read_netlist(a.circuit, "partition");
  gp_partition_config c = to_c(a.hier);
  gp_hier* h = nullptr;
  check(gp_hier_build(nl.get(), &c, &h), "partition");
  HierPtr hp(h, gp_hier_free);
  if (!a.dump_dir.empty()) check(gp_hier_dump(h, a.dump_dir.c_str()), "partition");
  std::cout << "partition: branches=" << gp_hier_num_branches(h) << " eta=" << std::fixed
            << std::setprecision(4) << gp_hier_eta(h) << "\n";
}

void cmd_flow(const FlowArgs& a) {
  NetlistPtr nl = read_netlist(a.circuit, "flow");
  gp_flow* f = nullptr;
  check(gp_flow_build(nl.get(), &f), "flow");
  FlowPtr fp(f, gp_flow_free);
  if (!a.dump_path.empty()) check(gp_flow_dump(f, a.dump_path.c_str()), "flow");
  std::cout << "flow: edges=" << gp_flow_num_edges(f) << " pins=" << gp_netlist_num_pins(nl.get())
            << " mean_path=" << std::fixed << std::setprecision(4)
            << gp_flow_mean_path(nl.get(), f) << "\n";
}

void cmd_roundtrip(const RoundtripArgs& a) {
  NetlistPtr nl = read_netlist(a.circuit, "roundtrip");
  PlacementPtr pl = a.pl.empty()
                        ? random_placement(nl.get(), gp_stage_seed(a.seed, "roundtrip"), "roundtrip")
                        : read_placement(nl.get(), a.pl, "roundtrip");
  double max_err = 0.0;
  check(gp_roundtrip(nl.get(), pl.get(), a.dump_enc.empty() ? nullptr : a.dump_enc.c_str(),
                     &max_err),
        "roundtrip");
  std::cout << "roundtrip: max_rel_err=" << std::scientific << std::setprecision(6) << max_err
            << "\n";
}

void cmd_teach(const TeachArgs& a) {
  if (a.out_pl.empty()) throw CliError(2, "teach: --out placement path required");
  NetlistPtr nl = read_netlist(a.circuit, "teach");
  PlacementPtr init = random_placement(nl.get(), gp_stage_seed(a.seed, "teach"), "teach");
  gp_finetune_config c = to_c(a.ft);
  gp_placement* out = nullptr;
  int32_t iters = 0;
  double hpwl = 0.0;
  check(gp_finetune(nl.get(), init.get(), &c, a.history.empty() ? nullptr : a.history.c_str(),
                    &out, &iters, &hpwl),
        "teach");
  PlacementPtr outp(out, gp_placement_free);
  check(gp_placement_write(nl.get(), out, a.out_pl.c_str()), "teach");
  std::cout << "teach: iterations=" << iters << " hpwl=" << std::scientific
            << std::setprecision(6) << hpwl << " -> " << a.out_pl << "\n";
}

void cmd_train(const TrainArgs& a) {
  if (a.circuits.empty()) throw CliError(2, "train: at least one --circuit required");
  if (a.circuits.size() != a.teachers.size())
    throw CliError(2, "train: need one --teacher per --circuit");
  if (a.ckpt_out.empty()) throw CliError(2, "train: --out checkpoint path required");
  std::vector<NetlistPtr> nls;
  std::vector<PlacementPtr> teachers;
  std::vector<const gp_netlist*> nl_ptrs;
  std::vector<const gp_placement*> teacher_ptrs;
  for (size_t i = 0; i < a.circuits.size(); ++i) {
    nls.push_back(read_netlist(a.circuits[i], "train"));
    teachers.push_back(read_placement(nls.back().get(), a.teachers[i], "train"));
    nl_ptrs.push_back(nls.back().get());
    teacher_ptrs.push_back(teachers.back().get());
  }
  gp_model_config mc;
  gp_model_config_default(&mc);
  gp_model* m = nullptr;
  check(gp_model_init(&mc, gp_stage_seed(a.seed, "train"), &m), "train");
  ModelPtr mp(m, gp_model_free);
  gp_partition_config pc = to_c(a.hier);
  gp_train_config tc = to_c(a.train);
  double final_loss = 0.0;
  check(gp_model_train(m, static_cast<int32_t>(nl_ptrs.size()), nl_ptrs.data(),
                       teacher_ptrs.data(), &pc, &tc,
                       a.loss_log.empty() ? nullptr : a.loss_log.c_str(), &final_loss),
        "train");
  check(gp_model_save(m, a.ckpt_out.c_str()), "train");
  std::cout << "train: circuits=" << nl_ptrs.size() << " epochs=" << a.train.epochs
            << " final_loss=" << std::scientific << std::setprecision(6) << final_loss << " -> "
            << a.ckpt_out << "\n";
}

void cmd_place(const PlaceArgs& a) {
  if (a.out_pl.empty()) throw CliError(2, "place: --out placement path required");
  NetlistPtr nl = read_netlist(a.circuit, "place");
  gp_model* m = nullptr;
  check(gp_model_load(a.ckpt.c_str(), &m), "place");
  ModelPtr mp(m, gp_model_free);
  gp_partition_config pc = to_c(a.hier);
  gp_placement* out = nullptr;
  check(gp_model_place(m, nl.get(), &pc, &out), "place");
  PlacementPtr outp(out, gp_placement_free);
  check(gp_placement_write(nl.get(), out, a.out_pl.c_str()), "place");
  std::cout << "place: hpwl=" << std::scientific << std::setprecision(6)
            << gp_hpwl(nl.get(), out) << " -> " << a.out_pl << "\n";
}

void cmd_finetune(const FinetuneArgs& a) {
  if (a.out_pl.empty()) throw CliError(2, "finetune: --out placement path required");
  NetlistPtr nl = read_netlist(a.circuit, "finetune");
  PlacementPtr init =
      a.init_pl.empty()
          ? random_placement(nl.get(), gp_stage_seed(a.seed, "finetune"), "finetune")
          : read_placement(nl.get(), a.init_pl, "finetune");
  gp_finetune_config c = to_c(a.ft);
  gp_placement* out = nullptr;
  int32_t iters = 0;
  double hpwl = 0.0;
  check(gp_finetune(nl.get(), init.get(), &c, a.history.empty() ? nullptr : a.history.c_str(),
                    &out, &iters, &hpwl),
        "finetune");
  PlacementPtr outp(out, gp_placement_free);
  check(gp_placement_write(nl.get(), out, a.out_pl.c_str()), "finetune");
  std::cout << "finetune: iterations=" << iters << " hpwl=" << std::scientific
            << std::setprecision(6) << hpwl << " -> " << a.out_pl << "\n";
}

void cmd_eval(const EvalArgs& a) {
  NetlistPtr nl = read_netlist(a.circuit, "eval");
  PlacementPtr pl = read_placement(nl.get(), a.pl, "eval");
  std::string breakdown;
  if (!a.runtime_json.empty()) {
    std::ifstream in(a.runtime_json);
    if (!in) throw CliError(5, "eval: cannot open '" + a.runtime_json + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    breakdown = ss.str();
  }
  gp_metrics_config mc = to_c(a.metrics);
  gp_partition_config pc = to_c(a.hier);
  char* report = nullptr;
  check(gp_evaluate(nl.get(), pl.get(), &mc, &pc, a.seed,
                    breakdown.empty() ? nullptr : breakdown.c_str(), &report),
        "eval");
  std::string text(report);
  gp_string_free(report);
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw CliError(5, "eval: cannot write '" + a.report + "'");
    out << text << "\n";
  }
  nlohmann::json j = nlohmann::json::parse(text);
  const char* keys[] = {"hpwl",  "tof",   "rc",        "density_overflow_ratio",
                        "eta",   "omega", "num_cells", "num_nets",
                        "num_pins", "num_flow_edges", "seed"};
  std::cout << std::left << std::setw(26) << "metric" << std::right << std::setw(18) << "value"
            << "\n";
  for (const char* k : keys) {
    std::cout << std::left << std::setw(26) << k << std::right << std::setw(18);
    const nlohmann::json& v = j.at(k);
    if (v.is_number_float())
      std::cout << std::setprecision(6) << std::scientific << v.get<double>();
    else
      std::cout << v.dump();
    std::cout << "\n";
  }
  if (!a.report.empty()) std::cout << "eval: report -> " << a.report << "\n";
}

void cmd_pipeline(const PipelineArgs& a) {
  if (a.out_dir.empty()) throw CliError(2, "pipeline: --out directory required");
  fs::create_directories(a.out_dir);
  auto out_path = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };
  nlohmann::json times = nlohmann::json::object();
  auto timed = [&](const char* name, auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    times[name] = dt.count();
  };

  std::string circuit = a.circuit;
  if (circuit.empty()) {
    GenArgs g = a.gen;
    g.seed = a.seed;
    g.out_dir = a.out_dir;
    g.base = "circuit";
    timed("gen", [&] { cmd_gen(g); });
    circuit = out_path("circuit.aux");
  }

  std::string ckpt = a.ckpt;
  if (ckpt.empty()) {
    TeachArgs t;
    t.circuit = circuit;
    t.out_pl = out_path("teacher.pl");
    t.seed = a.seed;
    t.ft = a.ft;
    timed("teach", [&] { cmd_teach(t); });

    TrainArgs tr;
    tr.circuits = {circuit};
    tr.teachers = {t.out_pl};
    tr.ckpt_out = out_path("model.ckpt");
    tr.loss_log = out_path("train_loss.jsonl");
    tr.seed = a.seed;
    tr.hier = a.hier;
    tr.train = a.train;
    timed("train", [&] { cmd_train(tr); });
    ckpt = tr.ckpt_out;
  }

  PlaceArgs p;
  p.circuit = circuit;
  p.ckpt = ckpt;
  p.out_pl = out_path("inductive.pl");
  p.hier = a.hier;
  timed("place", [&] { cmd_place(p); });

  FinetuneArgs f;
  f.circuit = circuit;
  f.init_pl = p.out_pl;
  f.out_pl = out_path("final.pl");
  f.history = out_path("history.jsonl");
  f.seed = a.seed;
  f.ft = a.ft;
  timed("finetune", [&] { cmd_finetune(f); });

  // Wall-clock seconds per stage; the only non-deterministic artifact of a
  // pipeline run (it feeds the report's runtime_breakdown).
  {
    std::ofstream out(out_path("runtimes.json"));
    if (!out) throw CliError(5, "pipeline: cannot write runtimes.json");
    out << times.dump(2) << "\n";
  }

  EvalArgs e;
  e.circuit = circuit;
  e.pl = f.out_pl;
  e.report = out_path("report.json");
  e.runtime_json = out_path("runtimes.json");
  e.seed = a.seed;
  e.hier = a.hier;
  e.metrics = a.metrics;
  cmd_eval(e);
  std::cout << "pipeline: done -> " << e.report << "\n";
}

}  // namespace gpcli
