/* C interface to the gplace placement library. All entry points return a
 * gp_status; on failure gp_last_error() holds a one-line message for the
 * calling thread. Out-parameters are written only on GP_OK. Every handle
 * returned through an out-parameter is owned by the caller and released
 * with the matching _free function. */
#ifndef GPLACE_H
#define GPLACE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes in the bundled CLI. */
typedef enum gp_status {
  GP_OK = 0,
  GP_ERR_USAGE = 2,
  GP_ERR_VALIDATION = 3,
  GP_ERR_NUMERIC = 4,
  GP_ERR_IO = 5
} gp_status;

/* Message of the most recent failure on this thread ("" when none). The
 * pointer stays valid until the next failing call on the same thread. */
const char* gp_last_error(void);

/* Frees strings returned by this library (gp_evaluate). */
void gp_string_free(char* s);

/* Deterministic per-stage seed derived from one root seed; drivers that
 * split a run into separate processes stay reproducible by deriving each
 * stage's seed the same way. */
uint64_t gp_stage_seed(uint64_t root_seed, const char* stage);

typedef struct gp_netlist gp_netlist;
typedef struct gp_placement gp_placement;
typedef struct gp_flow gp_flow;
typedef struct gp_hier gp_hier;
typedef struct gp_model gp_model;

/* ---------- netlists ---------- */

/* Reads a Bookshelf .aux file set; validates structure. */
gp_status gp_netlist_read(const char* aux_path, gp_netlist** out);
/* Writes dir/base.{aux,nodes,nets,pl}; positions from pl when given,
 * otherwise terminals only. */
gp_status gp_netlist_write(const gp_netlist* nl, const char* dir, const char* base,
                           const gp_placement* pl /* nullable */);
void gp_netlist_free(gp_netlist* nl);

int32_t gp_netlist_num_cells(const gp_netlist* nl);
int32_t gp_netlist_num_nets(const gp_netlist* nl);
int32_t gp_netlist_num_pins(const gp_netlist* nl);
int32_t gp_netlist_num_movable(const gp_netlist* nl);

typedef struct gp_synth_config {
  int32_t num_movable;
  int32_t num_terminals;
  double avg_net_degree;
  uint64_t seed;
} gp_synth_config;
void gp_synth_config_default(gp_synth_config* cfg);

/* Random circuit with the locality of real netlists. The latent positions
 * the generator placed cells at are returned as *out_latent when non-null;
 * they form a sensible reference placement. */
gp_status gp_netlist_generate(const gp_synth_config* cfg, gp_netlist** out_nl,
                              gp_placement** out_latent /* nullable */);

/* ---------- placements ---------- */

gp_status gp_placement_read(const gp_netlist* nl, const char* pl_path, gp_placement** out);
gp_status gp_placement_write(const gp_netlist* nl, const gp_placement* pl, const char* path);
gp_status gp_placement_random(const gp_netlist* nl, uint64_t seed, gp_placement** out);
gp_status gp_placement_centered(const gp_netlist* nl, gp_placement** out);
gp_status gp_placement_get(const gp_placement* pl, int32_t cell, double* x, double* y);
void gp_placement_free(gp_placement* pl);

double gp_hpwl(const gp_netlist* nl, const gp_placement* pl);

/* ---------- partitioning and the two-level hierarchy ---------- */

typedef struct gp_partition_config {
  int32_t target_parts;
  int32_t max_part_cells;
  double epsilon;
} gp_partition_config;
void gp_partition_config_default(gp_partition_config* cfg);

gp_status gp_hier_build(const gp_netlist* nl, const gp_partition_config* cfg, gp_hier** out);
int32_t gp_hier_num_branches(const gp_hier* h);
double gp_hier_eta(const gp_hier* h);
/* Writes each graph as a Bookshelf set plus manifest.json under dir. */
gp_status gp_hier_dump(const gp_hier* h, const char* dir);
void gp_hier_free(gp_hier* h);

/* ---------- cell flow ---------- */

gp_status gp_flow_build(const gp_netlist* nl, gp_flow** out);
int32_t gp_flow_num_edges(const gp_flow* f);
/* Mean income-chain length over movable cells. */
double gp_flow_mean_path(const gp_netlist* nl, const gp_flow* f);
/* One line per edge: "src dst net income_flag". */
gp_status gp_flow_dump(const gp_flow* f, const char* path);
void gp_flow_free(gp_flow* f);

/* ---------- relative-position codec ---------- */

/* encode then decode; *max_err gets the largest cell position error
 * relative to the core diagonal. When enc_dump_path is given, one line per
 * edge: "edge_idx rho dtheta". */
gp_status gp_roundtrip(const gp_netlist* nl, const gp_placement* pl,
                       const char* enc_dump_path /* nullable */, double* max_err);

/* ---------- model ---------- */

typedef struct gp_model_config {
  int32_t d_cell, d_net, d_pin, hidden, layers;
  double rho_scale, rho_shift;
} gp_model_config;
void gp_model_config_default(gp_model_config* cfg);

gp_status gp_model_init(const gp_model_config* cfg, uint64_t seed, gp_model** out);
gp_status gp_model_save(const gp_model* m, const char* path);
gp_status gp_model_load(const char* path, gp_model** out);
void gp_model_free(gp_model* m);

typedef struct gp_train_config {
  int32_t epochs;
  double lambda_theta;
  double lr, lr_decay, weight_decay;
} gp_train_config;
void gp_train_config_default(gp_train_config* cfg);

/* Imitation training on (netlist, teacher placement) pairs expanded through
 * the hierarchy. Appends one JSON line per epoch to loss_log_path when
 * given. final_loss receives the last epoch's mean loss when non-null. */
gp_status gp_model_train(gp_model* m, int32_t count, const gp_netlist* const* nls,
                         const gp_placement* const* teachers,
                         const gp_partition_config* pcfg, const gp_train_config* tcfg,
                         const char* loss_log_path /* nullable */,
                         double* final_loss /* nullable */);

/* One-shot inductive placement through the hierarchy, clamped to the core. */
gp_status gp_model_place(const gp_model* m, const gp_netlist* nl,
                         const gp_partition_config* pcfg, gp_placement** out);

/* ---------- fine-tuning ---------- */

typedef struct gp_finetune_config {
  double learning_rate;
  double lambda_d_init;
  int32_t max_iterations;
  double upper_pcof;
  double gamma;
  int32_t grid_m;
  int32_t has_rigid; /* 0: auto-fit; nonzero: apply the fields below */
  double rigid_theta_deg, rigid_dx, rigid_dy;
  double stop_overflow;
  double hpwl_divisor; /* 0: scaled default */
  double target_density;
} gp_finetune_config;
void gp_finetune_config_default(gp_finetune_config* cfg);

gp_status gp_finetune(const gp_netlist* nl, const gp_placement* init,
                      const gp_finetune_config* cfg,
                      const char* history_path /* nullable */, gp_placement** out,
                      int32_t* iterations /* nullable */, double* hpwl /* nullable */);

/* ---------- metrics ---------- */

typedef struct gp_metrics_config {
  int32_t grid_m;
  double rc; /* 0: calibrate from a fixed-seed random placement */
  int32_t density_grid;
  double target_density;
} gp_metrics_config;
void gp_metrics_config_default(gp_metrics_config* cfg);

/* Report as a JSON string (caller frees with gp_string_free).
 * runtime_breakdown_json, when given, must be a JSON object of stage name
 * to seconds and is embedded verbatim. */
gp_status gp_evaluate(const gp_netlist* nl, const gp_placement* pl,
                      const gp_metrics_config* mcfg, const gp_partition_config* pcfg,
                      uint64_t seed, const char* runtime_breakdown_json /* nullable */,
                      char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* GPLACE_H */
