#include "core/tpgnn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace gp {
namespace {

// Saturated tanh is clamped just inside +-1 so the decoded predictions stay
// strictly within their ranges.
constexpr double kTanhClamp = 1.0 - 1e-12;

struct ShapeEntry {
  std::string name;
  int rows, cols;
};

std::vector<ShapeEntry> shape_table(const ModelConfig& c) {
  std::vector<ShapeEntry> t;
  auto mlp = [&](const std::string& base, int in, int out) {
    t.push_back({base + "_w1", in, c.hidden});
    t.push_back({base + "_b1", 1, c.hidden});
    t.push_back({base + "_w2", c.hidden, out});
    t.push_back({base + "_b2", 1, out});
  };
  mlp("emb_cell", kCellFeatureDim, c.d_cell);
  mlp("emb_net", kNetFeatureDim, c.d_net);
  mlp("emb_pin", kPinFeatureDim, c.d_pin);
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "msg" + std::to_string(l);
    t.push_back({p + "_pin_cell", c.d_pin, c.d_cell});
    t.push_back({p + "_net_cell", c.d_net, c.d_cell});
    t.push_back({p + "_cell_net", c.d_cell, c.d_net});
    t.push_back({p + "_cell_cell", c.d_cell, c.d_cell});
    t.push_back({p + "_att", c.d_pin, 1});
  }
  t.push_back({"null_cell", 1, c.d_cell});
  t.push_back({"null_net", 1, c.d_net});
  t.push_back({"head_rho_w", 2 * c.d_cell + c.d_net, 1});
  t.push_back({"head_rho_b", 1, 1});
  t.push_back({"head_theta_w", 3 * c.d_cell + 2 * c.d_net, 1});
  t.push_back({"head_theta_b", 1, 1});
  return t;
}

bool is_bias(const std::string& name) {
  const auto ends_with = [&](const char* suf) {
    const size_t n = std::strlen(suf);
    return name.size() >= n && name.compare(name.size() - n, n, suf) == 0;
  };
  return ends_with("_b") || ends_with("_b1") || ends_with("_b2");
}

}  // namespace

Mat& ModelParams::at(const std::string& name) {
  for (auto& [n, m] : mats)
    if (n == name) return m;
  fail_usage("unknown model weight: " + name);
}

const Mat& ModelParams::at(const std::string& name) const {
  return const_cast<ModelParams*>(this)->at(name);
}

ModelParams init_model(const ModelConfig& cfg, uint64_t seed) {
  if (cfg.layers < 1 || cfg.d_cell < 1 || cfg.d_net < 1 || cfg.d_pin < 1 ||
      cfg.hidden < 1)
    fail_usage("model dimensions must be positive");
  ModelParams p;
  p.cfg = cfg;
  Rng rng(seed);
  for (const ShapeEntry& e : shape_table(cfg)) {
    Mat m(e.rows, e.cols);
    if (!is_bias(e.name)) {
      const double lim = std::sqrt(6.0 / (e.rows + e.cols));
      for (double& x : m.v) x = rng.uniform(-lim, lim);
    }
    p.mats.emplace_back(e.name, std::move(m));
  }
  return p;
}

GraphBatch make_batch(const Netlist& nl, const FeatureSet& feat,
                      const CellFlow& flow, const RelEncoding* target) {
  GraphBatch g;
  g.num_cells = nl.num_cells();
  g.num_nets = nl.num_nets();
  g.num_pins = nl.num_pins();
  g.num_edges = flow.num_edges();
  g.x_cell = feat.x_cell;
  g.x_net = feat.x_net;
  g.x_pin = feat.x_pin;

  auto pc = std::make_shared<std::vector<int>>(g.num_pins);
  auto pn = std::make_shared<std::vector<int>>(g.num_pins);
  for (int i = 0; i < g.num_pins; ++i) {
    (*pc)[i] = nl.pins[i].cell;
    (*pn)[i] = nl.pins[i].net;
  }
  g.pin_cell = std::move(pc);
  g.pin_net = std::move(pn);

  g.edge_src = std::make_shared<std::vector<int>>(flow.edge_src);
  g.edge_dst = std::make_shared<std::vector<int>>(flow.edge_dst);
  g.edge_net = std::make_shared<std::vector<int>>(flow.edge_net);

  auto isrc = std::make_shared<std::vector<int>>(g.num_edges);
  auto inet = std::make_shared<std::vector<int>>(g.num_edges);
  for (int e = 0; e < g.num_edges; ++e) {
    const int inc = flow.income[flow.edge_src[e]];
    (*isrc)[e] = inc >= 0 ? flow.edge_src[inc] : g.num_cells;
    (*inet)[e] = inc >= 0 ? flow.edge_net[inc] : g.num_nets;
  }
  g.income_src = std::move(isrc);
  g.income_net = std::move(inet);

  if (target) {
    if (static_cast<int>(target->rho.size()) != g.num_edges)
      fail_usage("target encoding does not match the flow");
    g.target_log_rho = Mat(g.num_edges, 1);
    g.target_dtheta = Mat(g.num_edges, 1);
    for (int e = 0; e < g.num_edges; ++e) {
      g.target_log_rho(e, 0) = std::log(target->rho[e]);
      g.target_dtheta(e, 0) = target->dtheta[e];
    }
  }
  return g;
}

ForwardIds forward(Tape& t, const ModelParams& p, const GraphBatch& g,
                   double lambda_theta) {
  if (g.num_edges == 0) fail_usage("forward: graph has no flow edges");
  ForwardIds out;
  std::unordered_map<std::string, int> id;
  out.params.reserve(p.mats.size());
  for (const auto& [name, m] : p.mats) {
    const int pid = t.param(m);
    out.params.push_back(pid);
    id.emplace(name, pid);
  }
  auto P = [&](const std::string& name) {
    auto it = id.find(name);
    if (it == id.end()) fail_usage("forward: missing weight " + name);
    return it->second;
  };
  auto mlp = [&](const std::string& base, int x) {
    const int h = t.tanh_(t.add_rowvec(t.matmul(x, P(base + "_w1")), P(base + "_b1")));
    return t.add_rowvec(t.matmul(h, P(base + "_w2")), P(base + "_b2"));
  };

  int hv = mlp("emb_cell", t.input(g.x_cell));
  int hu = mlp("emb_net", t.input(g.x_net));
  const int hp = mlp("emb_pin", t.input(g.x_pin));

  for (int l = 0; l < p.cfg.layers; ++l) {
    const std::string pre = "msg" + std::to_string(l);
    // nets -> cells, modulated per pin by the pin embedding
    const int m_pv = t.matmul(hp, P(pre + "_pin_cell"));
    const int g_u = t.gather_rows(t.matmul(hu, P(pre + "_net_cell")), g.pin_net);
    const int m_uv = t.segment_sum(t.hadamard(m_pv, g_u), g.pin_cell, g.num_cells);
    // cells -> nets, each pin weighted by a learned scalar of its embedding
    const int a_p = t.matmul(hp, P(pre + "_att"));
    const int g_v = t.gather_rows(t.matmul(hv, P(pre + "_cell_net")), g.pin_cell);
    const int m_vu = t.segment_sum(t.rowscale(g_v, a_p), g.pin_net, g.num_nets);
    // cells -> cells along flow edges
    const int m_vv = t.segment_sum(
        t.gather_rows(t.matmul(hv, P(pre + "_cell_cell")), g.edge_src),
        g.edge_dst, g.num_cells);
    hv = t.add(hv, t.emax(m_vv, m_uv));
    hu = t.add(hu, m_vu);
  }

  // Row num_cells of hv_ext (and num_nets of hu_ext) is the stand-in
  // embedding income_src/income_net point at for terminal sources.
  const int hv_ext = t.concat_rows(hv, P("null_cell"));
  const int hu_ext = t.concat_rows(hu, P("null_net"));
  const int h_i = t.gather_rows(hv, g.edge_src);
  const int h_j = t.gather_rows(hv, g.edge_dst);
  const int h_t = t.gather_rows(hu, g.edge_net);
  const int h_k = t.gather_rows(hv_ext, g.income_src);
  const int h_s = t.gather_rows(hu_ext, g.income_net);

  // Readout heads are single linear probes over the concatenated embeddings.
  const int rho_head = t.add_rowvec(
      t.matmul(t.concat_cols({h_i, h_t, h_j}), P("head_rho_w")), P("head_rho_b"));
  const int theta_head = t.add_rowvec(
      t.matmul(t.concat_cols({h_k, h_s, h_i, h_t, h_j}), P("head_theta_w")),
      P("head_theta_b"));

  const int rho_sat = t.clamp(t.tanh_(rho_head), -kTanhClamp, kTanhClamp);
  out.z = t.scale_shift(rho_sat, p.cfg.rho_scale, p.cfg.rho_shift);
  out.rho = t.exp_(out.z);
  const int theta_sat = t.clamp(t.tanh_(theta_head), -kTanhClamp, kTanhClamp);
  out.dtheta = t.scale_shift(theta_sat, kPi, 0.0);

  if (g.has_targets()) {
    out.loss_rho = t.smooth_l1_mean(out.z, t.input(g.target_log_rho));
    const int err = t.wrap_to_pi(t.sub(out.dtheta, t.input(g.target_dtheta)));
    out.loss_theta = t.smooth_l1_mean(err, t.input(Mat(g.num_edges, 1)));
    out.loss = t.axpby(1.0, out.loss_rho, lambda_theta, out.loss_theta);
  }
  return out;
}

RelEncoding predict(const ModelParams& p, const GraphBatch& batch) {
  Tape t;
  const ForwardIds ids = forward(t, p, batch, 0.0);
  RelEncoding enc;
  enc.rho.resize(batch.num_edges);
  enc.dtheta.resize(batch.num_edges);
  const Mat& rho = t.val(ids.rho);
  const Mat& dth = t.val(ids.dtheta);
  for (int e = 0; e < batch.num_edges; ++e) {
    enc.rho[e] = rho(e, 0);
    enc.dtheta[e] = dth(e, 0);
  }
  return enc;
}

TrainStats train(ModelParams& p, const std::vector<GraphBatch>& graphs,
                 const TrainConfig& cfg, std::ostream* loss_log) {
  if (graphs.empty()) fail_usage("train: no graphs");
  for (const GraphBatch& g : graphs)
    if (!g.has_targets()) fail_usage("train: graph without targets");

  std::vector<Mat*> params;
  std::vector<Mat> acc;
  std::vector<const Mat*> acc_ptr;
  for (auto& [name, m] : p.mats) {
    params.push_back(&m);
    acc.emplace_back(m.rows, m.cols);
  }
  for (const Mat& a : acc) acc_ptr.push_back(&a);
  Adam opt(params, cfg.adam);

  const double inv_n = 1.0 / static_cast<double>(graphs.size());
  TrainStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Mat& a : acc) std::fill(a.v.begin(), a.v.end(), 0.0);
    double lsum = 0.0, lr_sum = 0.0, lt_sum = 0.0;
    for (const GraphBatch& g : graphs) {
      Tape t;
      const ForwardIds ids = forward(t, p, g, cfg.lambda_theta);
      t.backward(ids.loss);
      lsum += t.val(ids.loss)(0, 0);
      lr_sum += t.val(ids.loss_rho)(0, 0);
      lt_sum += t.val(ids.loss_theta)(0, 0);
      for (size_t k = 0; k < acc.size(); ++k) {
        if (!t.has_grad(ids.params[k])) continue;
        const Mat& gk = t.grad(ids.params[k]);
        for (size_t i = 0; i < gk.size(); ++i) acc[k].v[i] += gk.v[i] * inv_n;
      }
    }
    opt.step(acc_ptr, epoch);
    stats.loss.push_back(lsum * inv_n);
    stats.loss_rho.push_back(lr_sum * inv_n);
    stats.loss_theta.push_back(lt_sum * inv_n);
    if (loss_log) {
      nlohmann::json j{{"epoch", epoch},
                       {"loss", stats.loss.back()},
                       {"loss_rho", stats.loss_rho.back()},
                       {"loss_theta", stats.loss_theta.back()}};
      *loss_log << j.dump() << "\n";
    }
  }
  return stats;
}

std::vector<GraphBatch> make_training_batches(const Netlist& nl, const Placement& teacher,
                                              const PartitionConfig& part_cfg) {
  const PartitionResult part = partition(nl, part_cfg);
  const HierNetlist hier = build_hierarchy(nl, part);
  Placement root_pl;
  std::vector<Placement> branch_pls;
  project_placement(nl, hier, teacher, &root_pl, &branch_pls);

  std::vector<GraphBatch> batches;
  auto add = [&](const HierGraph& hg, const Placement& pl) {
    const CellFlow flow = build_cellflow(hg.nl);
    const RelEncoding enc = encode(hg.nl, flow, pl);
    batches.push_back(make_batch(hg.nl, hg.feat, flow, &enc));
  };
  add(hier.root, root_pl);
  for (size_t b = 0; b < hier.branches.size(); ++b) add(hier.branches[b], branch_pls[b]);
  return batches;
}

Placement inductive_place(const Netlist& nl, const HierNetlist& hier,
                          const ModelParams& p) {
  auto place_graph = [&](const HierGraph& hg) {
    const CellFlow flow = build_cellflow(hg.nl);
    const GraphBatch batch = make_batch(hg.nl, hg.feat, flow, nullptr);
    return decode(hg.nl, flow, predict(p, batch));
  };
  const Placement root_pl = place_graph(hier.root);
  std::vector<Placement> branch_pls;
  branch_pls.reserve(hier.branches.size());
  for (const HierGraph& b : hier.branches) branch_pls.push_back(place_graph(b));
  Placement out = uncoarsen(nl, hier, root_pl, branch_pls);
  clamp_to_core(nl, out);
  return out;
}

Placement inductive_place(const Netlist& nl, const ModelParams& p,
                          const PartitionConfig& part_cfg) {
  const PartitionResult part = partition(nl, part_cfg);
  return inductive_place(nl, build_hierarchy(nl, part), p);
}

namespace {

constexpr char kMagic[8] = {'g', 'p', 'l', 'm', 'o', 'd', 'l', '1'};

void put_u32(std::ostream& os, uint32_t x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof x);
}
void put_f64(std::ostream& os, double x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof x);
}
uint32_t get_u32(std::istream& is) {
  uint32_t x = 0;
  is.read(reinterpret_cast<char*>(&x), sizeof x);
  return x;
}
double get_f64(std::istream& is) {
  double x = 0;
  is.read(reinterpret_cast<char*>(&x), sizeof x);
  return x;
}

}  // namespace

void save_model(const ModelParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot write " + path);
  os.write(kMagic, sizeof kMagic);
  put_u32(os, 1);  // version
  put_u32(os, static_cast<uint32_t>(p.cfg.d_cell));
  put_u32(os, static_cast<uint32_t>(p.cfg.d_net));
  put_u32(os, static_cast<uint32_t>(p.cfg.d_pin));
  put_u32(os, static_cast<uint32_t>(p.cfg.hidden));
  put_u32(os, static_cast<uint32_t>(p.cfg.layers));
  put_f64(os, p.cfg.rho_scale);
  put_f64(os, p.cfg.rho_shift);
  put_u32(os, static_cast<uint32_t>(p.mats.size()));
  for (const auto& [name, m] : p.mats) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(m.rows));
    put_u32(os, static_cast<uint32_t>(m.cols));
    os.write(reinterpret_cast<const char*>(m.v.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!os) fail_io("short write to " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot read " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail_io(path + ": not a model checkpoint");
  if (get_u32(is) != 1) fail_io(path + ": unsupported checkpoint version");
  ModelConfig cfg;
  cfg.d_cell = static_cast<int>(get_u32(is));
  cfg.d_net = static_cast<int>(get_u32(is));
  cfg.d_pin = static_cast<int>(get_u32(is));
  cfg.hidden = static_cast<int>(get_u32(is));
  cfg.layers = static_cast<int>(get_u32(is));
  cfg.rho_scale = get_f64(is);
  cfg.rho_shift = get_f64(is);
  const uint32_t count = get_u32(is);
  if (!is) fail_io(path + ": truncated checkpoint header");

  const std::vector<ShapeEntry> expect = shape_table(cfg);
  if (count != expect.size()) fail_io(path + ": unexpected weight count");
  ModelParams p;
  p.cfg = cfg;
  for (const ShapeEntry& e : expect) {
    const uint32_t nlen = get_u32(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    const int rows = static_cast<int>(get_u32(is));
    const int cols = static_cast<int>(get_u32(is));
    if (!is || name != e.name || rows != e.rows || cols != e.cols)
      fail_io(path + ": weight table mismatch at " + e.name);
    Mat m(rows, cols);
    is.read(reinterpret_cast<char*>(m.v.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) fail_io(path + ": truncated weight data");
    p.mats.emplace_back(std::move(name), std::move(m));
  }
  return p;
}

}  // namespace gp
