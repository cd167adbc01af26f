#pragma once

#include <vector>

#include "tiode/fnn.hpp"
#include "tiode/params.hpp"
#include "tiode/rng.hpp"
#include "tiode/tape.hpp"
#include "tiode/temporal_graph.hpp"

namespace tiode {

// Spatio-temporal attention encoder over the temporal graph, producing a
// refined per-node Gaussian posterior over initial latent states.
struct EncoderConfig {
  std::size_t feat_dim = 4;
  std::size_t d_hid = 64;
  std::size_t d_z = 16;
  std::size_t layers = 2;
  std::size_t k_rand = 4;          // frozen RandNet count
  std::size_t random_hidden = 64;
  double dropout = 0.0;            // attention-output dropout in train mode
  double sigma_min = 1e-4;

  FnnSpec embed_spec() const;
  FnnSpec post_mean_spec() const;
  FnnSpec post_var_spec() const;
  FnnSpec rand_spec(std::size_t k) const;
  FnnSpec fuse_spec() const;
  std::string wq_name(std::size_t l) const;
  std::string wk_name(std::size_t l) const;
  std::string wv_name(std::size_t l) const;
  std::string wa_name() const;
  void validate() const;
};

void register_encoder(ParamStore& store, const EncoderConfig& cfg, Rng& rng);

// Per-sample index arrays derived from the temporal graph, reusable
// across forward passes.
struct EncoderIndex {
  int n_nodes = 0;
  int t_len = 0;
  int n_instances = 0;
  IdxPtr edge_src;    // instance row to read from
  IdxPtr edge_dst;    // instance row receiving the message
  IdxPtr edge_dt;     // 0 = spatial (dt 0), 1 = temporal (dt -1)
  Tensor edge_coeff;  // [E,1]: A(src,dst)/sqrt(d_hid)
  std::vector<IdxPtr> step_rows;  // instance rows of each time step
  IdxPtr inst_node;   // instance -> node id
};

EncoderIndex build_encoder_index(const TemporalGraph& tg, std::size_t d_hid);

// Raw per-edge attention scores of one layer (before aggregation).
int st_attention_scores(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                        const EncoderIndex& index, int h, std::size_t layer);

// One attention layer: residual update of all instance rows.
int st_attention_layer(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                       const EncoderIndex& index, int h, std::size_t layer,
                       bool train = false, Rng* rng = nullptr);

// Temporally pooled per-node sequence representation u: [N, d_hid].
int sequence_representation(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                            const EncoderIndex& index, int h_final);

struct PosteriorNodes {
  int mean = -1;  // [N, d_z]
  int std = -1;   // [N, d_z], >= sigma_min
};

PosteriorNodes primary_posterior(Tape& tape, const ParamStore& store,
                                 const EncoderConfig& cfg, int u);

PosteriorNodes randnet_refine(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                              int u, PosteriorNodes primary);

struct EncoderOutput {
  int u = -1;
  PosteriorNodes primary;
  PosteriorNodes refined;
};

// window_feats: [N*T_h, feat_dim] instance-major (t-major rows), already
// normalized.
EncoderOutput encode_window(Tape& tape, const ParamStore& store, const EncoderConfig& cfg,
                            const EncoderIndex& index, const Tensor& window_feats,
                            bool train = false, Rng* rng = nullptr);

// Reparameterized draw z0 = mean + std*eps; eps is the caller's noise
// (zeros give the posterior mean).
int sample_initial_state(Tape& tape, const PosteriorNodes& post, const Tensor& eps);

}  // namespace tiode
