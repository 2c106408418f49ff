// C API shim over the core library. Every entry point funnels through
// guard(), which converts exceptions into status codes and stashes the
// message in a thread-local buffer for gp_last_error().
#include "gplace.h"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/bookshelf.hpp"
#include "core/cellflow.hpp"
#include "core/errors.hpp"
#include "core/finetune.hpp"
#include "core/hier.hpp"
#include "core/metrics.hpp"
#include "core/netlist.hpp"
#include "core/rng.hpp"
#include "core/se2codec.hpp"
#include "core/synth.hpp"
#include "core/tpgnn.hpp"

struct gp_netlist {
  gp::Netlist nl;
};
struct gp_placement {
  gp::Placement pl;
};
struct gp_flow {
  gp::CellFlow flow;
};
struct gp_hier {
  gp::HierNetlist hier;
};
struct gp_model {
  gp::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

template <class F>
gp_status guard(F&& fn) {
  try {
    fn();
    return GP_OK;
  } catch (const gp::Error& e) {
    g_last_error = e.what();
    return static_cast<gp_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GP_ERR_NUMERIC;
  }
}

gp_status usage_error(const std::string& msg) {
  g_last_error = msg;
  return GP_ERR_USAGE;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ofstream open_log(const char* path) {
  std::ofstream out(path);
  if (!out) gp::fail_io("cannot open '" + std::string(path) + "' for writing");
  return out;
}

gp::PartitionConfig to_core(const gp_partition_config& c) {
  gp::PartitionConfig cfg;
  cfg.target_parts = c.target_parts;
  cfg.max_part_cells = c.max_part_cells;
  cfg.epsilon = c.epsilon;
  return cfg;
}

}  // namespace

extern "C" {

const char* gp_last_error(void) { return g_last_error.c_str(); }

void gp_string_free(char* s) { delete[] s; }

uint64_t gp_stage_seed(uint64_t root_seed, const char* stage) {
  return gp::stage_seed(root_seed, stage ? stage : "");
}

/* ---------- netlists ---------- */

gp_status gp_netlist_read(const char* aux_path, gp_netlist** out) {
  if (!aux_path || !out) return usage_error("gp_netlist_read: null argument");
  return guard([&] { *out = new gp_netlist{gp::parse_netlist(aux_path)}; });
}

gp_status gp_netlist_write(const gp_netlist* nl, const char* dir, const char* base,
                           const gp_placement* pl) {
  if (!nl || !dir || !base) return usage_error("gp_netlist_write: null argument");
  return guard([&] { gp::write_netlist(nl->nl, dir, base, pl ? &pl->pl : nullptr); });
}

void gp_netlist_free(gp_netlist* nl) { delete nl; }

int32_t gp_netlist_num_cells(const gp_netlist* nl) { return nl ? nl->nl.num_cells() : 0; }
int32_t gp_netlist_num_nets(const gp_netlist* nl) { return nl ? nl->nl.num_nets() : 0; }
int32_t gp_netlist_num_pins(const gp_netlist* nl) { return nl ? nl->nl.num_pins() : 0; }
int32_t gp_netlist_num_movable(const gp_netlist* nl) { return nl ? nl->nl.num_movable() : 0; }

void gp_synth_config_default(gp_synth_config* cfg) {
  if (!cfg) return;
  gp::SynthSpec d;
  cfg->num_movable = d.n_movable;
  cfg->num_terminals = d.n_terminals;
  cfg->avg_net_degree = d.avg_net_degree;
  cfg->seed = d.seed;
}

gp_status gp_netlist_generate(const gp_synth_config* cfg, gp_netlist** out_nl,
                              gp_placement** out_latent) {
  if (!cfg || !out_nl) return usage_error("gp_netlist_generate: null argument");
  return guard([&] {
    gp::SynthSpec spec;
    spec.n_movable = cfg->num_movable;
    spec.n_terminals = cfg->num_terminals;
    spec.avg_net_degree = cfg->avg_net_degree;
    spec.seed = cfg->seed;
    gp::Placement latent;
    gp::Netlist nl = gp::generate_synthetic(spec, out_latent ? &latent : nullptr);
    *out_nl = new gp_netlist{std::move(nl)};
    if (out_latent) *out_latent = new gp_placement{std::move(latent)};
  });
}

/* ---------- placements ---------- */

gp_status gp_placement_read(const gp_netlist* nl, const char* pl_path, gp_placement** out) {
  if (!nl || !pl_path || !out) return usage_error("gp_placement_read: null argument");
  return guard([&] { *out = new gp_placement{gp::parse_placement(nl->nl, pl_path)}; });
}

gp_status gp_placement_write(const gp_netlist* nl, const gp_placement* pl, const char* path) {
  if (!nl || !pl || !path) return usage_error("gp_placement_write: null argument");
  return guard([&] { gp::write_placement(nl->nl, pl->pl, path); });
}

gp_status gp_placement_random(const gp_netlist* nl, uint64_t seed, gp_placement** out) {
  if (!nl || !out) return usage_error("gp_placement_random: null argument");
  return guard([&] { *out = new gp_placement{gp::make_random_placement(nl->nl, seed)}; });
}

gp_status gp_placement_centered(const gp_netlist* nl, gp_placement** out) {
  if (!nl || !out) return usage_error("gp_placement_centered: null argument");
  return guard([&] { *out = new gp_placement{gp::make_centered_placement(nl->nl)}; });
}

gp_status gp_placement_get(const gp_placement* pl, int32_t cell, double* x, double* y) {
  if (!pl || !x || !y) return usage_error("gp_placement_get: null argument");
  if (cell < 0 || cell >= static_cast<int32_t>(pl->pl.pos.size()))
    return usage_error("gp_placement_get: cell index out of range");
  *x = pl->pl.pos[cell].x;
  *y = pl->pl.pos[cell].y;
  return GP_OK;
}

void gp_placement_free(gp_placement* pl) { delete pl; }

double gp_hpwl(const gp_netlist* nl, const gp_placement* pl) {
  if (!nl || !pl) return 0.0;
  return gp::hpwl(nl->nl, pl->pl);
}

/* ---------- hierarchy ---------- */

void gp_partition_config_default(gp_partition_config* cfg) {
  if (!cfg) return;
  gp::PartitionConfig d;
  cfg->target_parts = d.target_parts;
  cfg->max_part_cells = d.max_part_cells;
  cfg->epsilon = d.epsilon;
}

gp_status gp_hier_build(const gp_netlist* nl, const gp_partition_config* cfg, gp_hier** out) {
  if (!nl || !cfg || !out) return usage_error("gp_hier_build: null argument");
  return guard([&] {
    gp::PartitionResult part = gp::partition(nl->nl, to_core(*cfg));
    *out = new gp_hier{gp::build_hierarchy(nl->nl, part)};
  });
}

int32_t gp_hier_num_branches(const gp_hier* h) {
  return h ? static_cast<int32_t>(h->hier.branches.size()) : 0;
}

double gp_hier_eta(const gp_hier* h) { return h ? h->hier.eta : 0.0; }

gp_status gp_hier_dump(const gp_hier* h, const char* dir) {
  if (!h || !dir) return usage_error("gp_hier_dump: null argument");
  return guard([&] { gp::dump_hierarchy(h->hier, dir); });
}

void gp_hier_free(gp_hier* h) { delete h; }

/* ---------- cell flow ---------- */

gp_status gp_flow_build(const gp_netlist* nl, gp_flow** out) {
  if (!nl || !out) return usage_error("gp_flow_build: null argument");
  return guard([&] { *out = new gp_flow{gp::build_cellflow(nl->nl)}; });
}

int32_t gp_flow_num_edges(const gp_flow* f) { return f ? f->flow.num_edges() : 0; }

double gp_flow_mean_path(const gp_netlist* nl, const gp_flow* f) {
  if (!nl || !f) return 0.0;
  return gp::mean_path_length(nl->nl, f->flow);
}

gp_status gp_flow_dump(const gp_flow* f, const char* path) {
  if (!f || !path) return usage_error("gp_flow_dump: null argument");
  return guard([&] {
    std::ofstream out = open_log(path);
    const gp::CellFlow& fl = f->flow;
    for (int e = 0; e < fl.num_edges(); ++e) {
      int income_flag = fl.income[fl.edge_dst[e]] == e ? 1 : 0;
      out << fl.edge_src[e] << ' ' << fl.edge_dst[e] << ' ' << fl.edge_net[e] << ' '
          << income_flag << '\n';
    }
  });
}

void gp_flow_free(gp_flow* f) { delete f; }

/* ---------- codec ---------- */

gp_status gp_roundtrip(const gp_netlist* nl, const gp_placement* pl,
                       const char* enc_dump_path, double* max_err) {
  if (!nl || !pl || !max_err) return usage_error("gp_roundtrip: null argument");
  return guard([&] {
    gp::CellFlow flow = gp::build_cellflow(nl->nl);
    gp::RelEncoding enc = gp::encode(nl->nl, flow, pl->pl);
    if (enc_dump_path) {
      std::ofstream out = open_log(enc_dump_path);
      for (size_t i = 0; i < enc.rho.size(); ++i)
        out << i << ' ' << enc.rho[i] << ' ' << enc.dtheta[i] << '\n';
    }
    gp::Placement back = gp::decode(nl->nl, flow, enc);
    double diag = std::hypot(nl->nl.core.width(), nl->nl.core.height());
    if (diag <= 0.0) diag = 1.0;
    double worst = 0.0;
    for (int c = 0; c < nl->nl.num_cells(); ++c) {
      double err = gp::norm(back.pos[c] - pl->pl.pos[c]);
      if (err > worst) worst = err;
    }
    *max_err = worst / diag;
  });
}

/* ---------- model ---------- */

void gp_model_config_default(gp_model_config* cfg) {
  if (!cfg) return;
  gp::ModelConfig d;
  cfg->d_cell = d.d_cell;
  cfg->d_net = d.d_net;
  cfg->d_pin = d.d_pin;
  cfg->hidden = d.hidden;
  cfg->layers = d.layers;
  cfg->rho_scale = d.rho_scale;
  cfg->rho_shift = d.rho_shift;
}

gp_status gp_model_init(const gp_model_config* cfg, uint64_t seed, gp_model** out) {
  if (!cfg || !out) return usage_error("gp_model_init: null argument");
  return guard([&] {
    gp::ModelConfig c;
    c.d_cell = cfg->d_cell;
    c.d_net = cfg->d_net;
    c.d_pin = cfg->d_pin;
    c.hidden = cfg->hidden;
    c.layers = cfg->layers;
    c.rho_scale = cfg->rho_scale;
    c.rho_shift = cfg->rho_shift;
    *out = new gp_model{gp::init_model(c, seed)};
  });
}

gp_status gp_model_save(const gp_model* m, const char* path) {
  if (!m || !path) return usage_error("gp_model_save: null argument");
  return guard([&] { gp::save_model(m->params, path); });
}

gp_status gp_model_load(const char* path, gp_model** out) {
  if (!path || !out) return usage_error("gp_model_load: null argument");
  return guard([&] { *out = new gp_model{gp::load_model(path)}; });
}

void gp_model_free(gp_model* m) { delete m; }

void gp_train_config_default(gp_train_config* cfg) {
  if (!cfg) return;
  gp::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->lambda_theta = d.lambda_theta;
  cfg->lr = d.adam.lr;
  cfg->lr_decay = d.adam.lr_decay;
  cfg->weight_decay = d.adam.weight_decay;
}

gp_status gp_model_train(gp_model* m, int32_t count, const gp_netlist* const* nls,
                         const gp_placement* const* teachers,
                         const gp_partition_config* pcfg, const gp_train_config* tcfg,
                         const char* loss_log_path, double* final_loss) {
  if (!m || !nls || !teachers || !pcfg || !tcfg)
    return usage_error("gp_model_train: null argument");
  if (count <= 0) return usage_error("gp_model_train: need at least one training pair");
  return guard([&] {
    std::vector<gp::GraphBatch> batches;
    for (int32_t i = 0; i < count; ++i) {
      if (!nls[i] || !teachers[i]) gp::fail_usage("gp_model_train: null training pair");
      std::vector<gp::GraphBatch> got =
          gp::make_training_batches(nls[i]->nl, teachers[i]->pl, to_core(*pcfg));
      for (auto& b : got) batches.push_back(std::move(b));
    }
    gp::TrainConfig tc;
    tc.epochs = tcfg->epochs;
    tc.lambda_theta = tcfg->lambda_theta;
    tc.adam.lr = tcfg->lr;
    tc.adam.lr_decay = tcfg->lr_decay;
    tc.adam.weight_decay = tcfg->weight_decay;
    gp::TrainStats stats;
    if (loss_log_path) {
      std::ofstream log = open_log(loss_log_path);
      stats = gp::train(m->params, batches, tc, &log);
    } else {
      stats = gp::train(m->params, batches, tc, nullptr);
    }
    if (final_loss) *final_loss = stats.loss.empty() ? 0.0 : stats.loss.back();
  });
}

gp_status gp_model_place(const gp_model* m, const gp_netlist* nl,
                         const gp_partition_config* pcfg, gp_placement** out) {
  if (!m || !nl || !pcfg || !out) return usage_error("gp_model_place: null argument");
  return guard([&] {
    *out = new gp_placement{gp::inductive_place(nl->nl, m->params, to_core(*pcfg))};
  });
}

/* ---------- fine-tuning ---------- */

void gp_finetune_config_default(gp_finetune_config* cfg) {
  if (!cfg) return;
  gp::FinetuneConfig d;
  cfg->learning_rate = d.learning_rate;
  cfg->lambda_d_init = d.lambda_d_init;
  cfg->max_iterations = d.max_iterations;
  cfg->upper_pcof = d.upper_pcof;
  cfg->gamma = d.gamma;
  cfg->grid_m = d.grid_m;
  cfg->has_rigid = 0;
  cfg->rigid_theta_deg = 0.0;
  cfg->rigid_dx = 0.0;
  cfg->rigid_dy = 0.0;
  cfg->stop_overflow = d.stop_overflow;
  cfg->hpwl_divisor = d.hpwl_divisor;
  cfg->target_density = d.target_density;
}

gp_status gp_finetune(const gp_netlist* nl, const gp_placement* init,
                      const gp_finetune_config* cfg, const char* history_path,
                      gp_placement** out, int32_t* iterations, double* hpwl) {
  if (!nl || !init || !cfg || !out) return usage_error("gp_finetune: null argument");
  return guard([&] {
    gp::FinetuneConfig fc;
    fc.learning_rate = cfg->learning_rate;
    fc.lambda_d_init = cfg->lambda_d_init;
    fc.max_iterations = cfg->max_iterations;
    fc.upper_pcof = cfg->upper_pcof;
    fc.gamma = cfg->gamma;
    fc.grid_m = cfg->grid_m;
    if (cfg->has_rigid)
      fc.rigid = gp::RigidSpec{cfg->rigid_theta_deg, cfg->rigid_dx, cfg->rigid_dy};
    fc.stop_overflow = cfg->stop_overflow;
    fc.hpwl_divisor = cfg->hpwl_divisor;
    fc.target_density = cfg->target_density;
    gp::FinetuneResult res;
    if (history_path) {
      std::ofstream log = open_log(history_path);
      res = gp::finetune(nl->nl, init->pl, fc, &log);
    } else {
      res = gp::finetune(nl->nl, init->pl, fc, nullptr);
    }
    *out = new gp_placement{std::move(res.placement)};
    if (iterations) *iterations = res.iterations;
    if (hpwl) *hpwl = res.hpwl;
  });
}

/* ---------- metrics ---------- */

void gp_metrics_config_default(gp_metrics_config* cfg) {
  if (!cfg) return;
  gp::MetricsConfig d;
  cfg->grid_m = d.grid_m;
  cfg->rc = d.rc;
  cfg->density_grid = d.density_grid;
  cfg->target_density = d.target_density;
}

gp_status gp_evaluate(const gp_netlist* nl, const gp_placement* pl,
                      const gp_metrics_config* mcfg, const gp_partition_config* pcfg,
                      uint64_t seed, const char* runtime_breakdown_json,
                      char** report_json) {
  if (!nl || !pl || !mcfg || !pcfg || !report_json)
    return usage_error("gp_evaluate: null argument");
  return guard([&] {
    gp::MetricsConfig mc;
    mc.grid_m = mcfg->grid_m;
    mc.rc = mcfg->rc;
    mc.density_grid = mcfg->density_grid;
    mc.target_density = mcfg->target_density;
    nlohmann::json breakdown = nlohmann::json::object();
    if (runtime_breakdown_json) {
      breakdown = nlohmann::json::parse(runtime_breakdown_json, nullptr, false);
      if (breakdown.is_discarded())
        gp::fail_usage("gp_evaluate: runtime breakdown is not valid JSON");
    }
    nlohmann::json report = gp::evaluate(nl->nl, pl->pl, mc, to_core(*pcfg), seed, breakdown);
    *report_json = dup_string(report.dump(2));
  });
}

}  // extern "C"
