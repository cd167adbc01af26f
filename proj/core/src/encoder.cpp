#include "tiode/encoder.hpp"

#include <cmath>

#include "tiode/encoding.hpp"
#include "tiode/errors.hpp"

namespace tiode {

FnnSpec EncoderConfig::embed_spec() const {
  return {"enc.embed", {feat_dim, d_hid}, Activation::kRelu, Activation::kIdentity, 0.0, true};
}

FnnSpec EncoderConfig::post_mean_spec() const {
  return {"enc.post_mean", {d_hid, d_z}, Activation::kRelu, Activation::kIdentity, 0.0, true};
}

FnnSpec EncoderConfig::post_var_spec() const {
  return {"enc.post_var", {d_hid, d_z}, Activation::kRelu, Activation::kIdentity, 0.0, true};
}

FnnSpec EncoderConfig::rand_spec(std::size_t k) const {
  return {"enc.rand" + std::to_string(k), {d_hid, random_hidden, d_hid},
          Activation::kTanh, Activation::kIdentity, 0.0, /*trainable=*/false};
}

FnnSpec EncoderConfig::fuse_spec() const {
  return {"enc.fuse", {2 * d_hid, 1}, Activation::kRelu, Activation::kIdentity, 0.0, true};
}

std::string EncoderConfig::wq_name(std::size_t l) const {
  return "enc.attn" + std::to_string(l) + ".Wq";
}
std::string EncoderConfig::wk_name(std::size_t l) const {
  return "enc.attn" + std::to_string(l) + ".Wk";
}
std::string EncoderConfig::wv_name(std::size_t l) const {
  return "enc.attn" + std::to_string(l) + ".Wv";
}
std::string EncoderConfig::wa_name() const { return "enc.Wa"; }

void EncoderConfig::validate() const {
  if (layers < 1) throw ConfigError("EncoderConfig: layers must be >= 1");
  if (d_hid == 0 || d_hid % 2 != 0) throw ConfigError("EncoderConfig: d_hid must be even");
  if (d_z == 0) throw ConfigError("EncoderConfig: d_z must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("EncoderConfig: bad dropout");
  if (!(sigma_min > 0.0)) throw ConfigError("EncoderConfig: sigma_min must be > 0");
}

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> w(rows * cols);
  for (auto& v : w) v = rng.uniform(-bound, bound);
  return Tensor::from_data({rows, cols}, std::move(w));
}

void register_matrix(ParamStore& store, const std::string& name, std::size_t rows,
                     std::size_t cols, Rng& rng) {
  Rng r = rng.fork(name);
  store.add(name, random_matrix(rows, cols, r), /*trainable=*/true);
}

}  // namespace

void register_encoder(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  register_fnn(store, cfg.embed_spec(), rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    register_matrix(store, cfg.wq_name(l), cfg.d_hid, cfg.d_hid, rng);
    register_matrix(store, cfg.wk_name(l), cfg.d_hid, cfg.d_hid, rng);
    register_matrix(store, cfg.wv_name(l), cfg.d_hid, cfg.d_hid, rng);
  }
  register_matrix(store, cfg.wa_name(), cfg.d_hid, cfg.d_hid, rng);
  register_fnn(store, cfg.post_mean_spec(), rng);
  register_fnn(store, cfg.post_var_spec(), rng);
  for (std::size_t k = 0; k < cfg.k_rand; ++k) {
    register_fnn(store, cfg.rand_spec(k), rng);
  }
  register_fnn(store, cfg.fuse_spec(), rng);
}

EncoderIndex build_encoder_index(const TemporalGraph& tg, std::size_t d_hid) {
  EncoderIndex idx;
  idx.n_nodes = tg.n_nodes;
  idx.t_len = tg.t_len;
  idx.n_instances = tg.n_instances();

  std::vector<int> src, dst, dt;
  std::vector<double> coeff;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_hid));
  src.reserve(tg.edges.size());
  dst.reserve(tg.edges.size());
  dt.reserve(tg.edges.size());
  coeff.reserve(tg.edges.size());
  for (const auto& e : tg.edges) {
    src.push_back(e.src);
    dst.push_back(e.dst);
    dt.push_back(e.dt == 0 ? 0 : 1);
    coeff.push_back(e.weight * inv_sqrt);
  }
  idx.edge_src = make_indices(std::move(src));
  idx.edge_dst = make_indices(std::move(dst));
  idx.edge_dt = make_indices(std::move(dt));
  const std::size_t n_edges = coeff.size();
  idx.edge_coeff = Tensor::raw({n_edges, 1}, std::move(coeff));

  for (int t = 0; t < tg.t_len; ++t) {
    std::vector<int> rows(tg.n_nodes);
    for (int i = 0; i < tg.n_nodes; ++i) rows[i] = tg.instance(i, t);
    idx.step_rows.push_back(make_indices(std::move(rows)));
  }
  std::vector<int> inst_node(idx.n_instances);
  for (int m = 0; m < idx.n_instances; ++m) inst_node[m] = tg.node_of(m);
  idx.inst_node = make_indices(std::move(inst_node));
  return idx;
}

namespace {

// K and V projections of the two possible time offsets (0 spatial, -1
// temporal), stacked as two rows for per-edge gathering.
int te_projection_rows(Tape& tape, int w_param, std::size_t d_hid) {
  int te0 = tape.leaf(time_encoding(0.0, d_hid));
  int tem1 = tape.leaf(time_encoding(-1.0, d_hid));
  return tape.concat_rows(tape.matmul_tb(te0, w_param), tape.matmul_tb(tem1, w_param));
}

int dropout_mask(Tape& tape, int x, double rate, Rng* rng) {
  if (!rng) throw UsageError("encoder: dropout requires an rng in train mode");
  const double keep = 1.0 - rate;
  const Tensor& v = tape.value(x);
  std::vector<double> mask(v.size());
  for (auto& mv : mask) mv = (rng->uniform() < keep) ? 1.0 / keep : 0.0;
  return tape.mul(x, tape.leaf(Tensor::raw(v.shape(), std::move(mask))));
}

// Mean over time steps of per-step [N, d_hid] slices.
int temporal_mean(Tape& tape, const EncoderIndex& index, int rows) {
  int acc = tape.gather_rows(rows, index.step_rows[0]);
  for (int t = 1; t < index.t_len; ++t) {
    acc = tape.add(acc, tape.gather_rows(rows, index.step_rows[t]));
  }
  return tape.scale(acc, 1.0 / static_cast<double>(index.t_len));
}

}  // namespace

int st_attention_scores(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                        const EncoderIndex& index, int h, std::size_t layer) {
  int wq = tape.param(store, cfg.wq_name(layer));
  int wk = tape.param(store, cfg.wk_name(layer));
  int q = tape.matmul_tb(h, wq);
  int k_base = tape.matmul_tb(h, wk);
  int k_te = te_projection_rows(tape, wk, cfg.d_hid);
  int k_edge = tape.add(tape.gather_rows(k_base, index.edge_src),
                        tape.gather_rows(k_te, index.edge_dt));
  int q_edge = tape.gather_rows(q, index.edge_dst);
  int dots = tape.row_dot(k_edge, q_edge);
  return tape.mul(dots, tape.leaf(index.edge_coeff));
}

int st_attention_layer(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                       const EncoderIndex& index, int h, std::size_t layer, bool train,
                       Rng* rng) {
  if (tape.value(h).cols() != cfg.d_hid) {
    throw ShapeError("st_attention_layer: hidden width mismatch");
  }
  int alpha = st_attention_scores(tape, store, cfg, index, h, layer);
  int wv = tape.param(store, cfg.wv_name(layer));
  int v_base = tape.matmul_tb(h, wv);
  int v_te = te_projection_rows(tape, wv, cfg.d_hid);
  int v_edge = tape.add(tape.gather_rows(v_base, index.edge_src),
                        tape.gather_rows(v_te, index.edge_dt));
  int msg = tape.mul_colvec(v_edge, alpha);
  int agg = tape.scatter_add_rows(msg, index.edge_dst, index.n_instances);
  int act = tape.relu(agg);
  if (train && cfg.dropout > 0.0) act = dropout_mask(tape, act, cfg.dropout, rng);
  return tape.add(h, act);
}

int sequence_representation(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                            const EncoderIndex& index, int h_final) {
  if (index.t_len < 1) throw UsageError("sequence_representation: empty window");
  // h-hat: final representation plus absolute-time encoding (1-based).
  std::vector<double> te_rows(static_cast<std::size_t>(index.t_len) * cfg.d_hid);
  for (int t = 0; t < index.t_len; ++t) {
    Tensor te = time_encoding(static_cast<double>(t + 1), cfg.d_hid);
    std::copy_n(te.data(), cfg.d_hid, te_rows.data() + static_cast<std::size_t>(t) * cfg.d_hid);
  }
  int te_all = tape.leaf(
      Tensor::raw({static_cast<std::size_t>(index.t_len), cfg.d_hid}, std::move(te_rows)));
  std::vector<int> inst_t(index.n_instances);
  for (int m = 0; m < index.n_instances; ++m) inst_t[m] = m / index.n_nodes;
  int h_hat = tape.add(h_final, tape.gather_rows(te_all, make_indices(std::move(inst_t))));

  // Per-node temporal pooling, projected through Wa, dotted against each
  // instance to produce the scalar gate.
  int pooled = temporal_mean(tape, index, h_hat);
  int q = tape.matmul(pooled, tape.param(store, cfg.wa_name()));
  int q_inst = tape.gather_rows(q, index.inst_node);
  int gate = tape.tanh(tape.row_dot(q_inst, h_hat));
  int gated = tape.relu(tape.mul_colvec(h_hat, gate));
  return temporal_mean(tape, index, gated);
}

PosteriorNodes primary_posterior(Tape& tape, const ParamStore& store,
                                 const EncoderConfig& cfg, int u) {
  PosteriorNodes post;
  post.mean = fnn_forward_tape(tape, store, cfg.post_mean_spec(), u);
  post.std = tape.add_scalar(
      tape.softplus(fnn_forward_tape(tape, store, cfg.post_var_spec(), u)), cfg.sigma_min);
  return post;
}

PosteriorNodes randnet_refine(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                              int u, PosteriorNodes primary) {
  if (cfg.k_rand == 0) return primary;
  int mean = primary.mean;
  int std = primary.std;
  for (std::size_t k = 0; k < cfg.k_rand; ++k) {
    int u_r = fnn_forward_tape(tape, store, cfg.rand_spec(k), u);
    int mu_r = fnn_forward_tape(tape, store, cfg.post_mean_spec(), u_r);
    int sg_r = tape.add_scalar(
        tape.softplus(fnn_forward_tape(tape, store, cfg.post_var_spec(), u_r)), cfg.sigma_min);
    int a_r = tape.tanh(
        fnn_forward_tape(tape, store, cfg.fuse_spec(), tape.concat_cols(u, u_r)));
    mean = tape.add(mean, tape.mul_colvec(mu_r, a_r));
    std = tape.add(std, tape.mul_colvec(sg_r, a_r));
  }
  PosteriorNodes refined;
  refined.mean = mean;
  refined.std = tape.clamp_min(std, cfg.sigma_min);
  return refined;
}

EncoderOutput encode_window(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                            const EncoderIndex& index, const Tensor& window_feats,
                            bool train, Rng* rng) {
  cfg.validate();
  if (window_feats.rows() != static_cast<std::size_t>(index.n_instances) ||
      window_feats.cols() != cfg.feat_dim) {
    throw ShapeError("encode_window: window features must be [N*T_h, feat_dim]");
  }
  int h = fnn_forward_tape(tape, store, cfg.embed_spec(), tape.leaf(window_feats));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    h = st_attention_layer(tape, store, cfg, index, h, l, train, rng);
  }
  EncoderOutput out;
  out.u = sequence_representation(tape, store, cfg, index, h);
  out.primary = primary_posterior(tape, store, cfg, out.u);
  out.refined = randnet_refine(tape, store, cfg, out.u, out.primary);
  return out;
}

int sample_initial_state(Tape& tape, const PosteriorNodes& post, const Tensor& eps) {
  if (!eps.same_shape(tape.value(post.mean))) {
    throw ShapeError("sample_initial_state: eps shape must match the posterior");
  }
  return tape.add(post.mean, tape.mul(post.std, tape.leaf(eps)));
}

}  // namespace tiode
