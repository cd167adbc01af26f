#include "tiode/dynamics.hpp"

#include "tiode/encoding.hpp"
#include "tiode/errors.hpp"

namespace tiode {

const char* field_mode_name(FieldMode m) {
  switch (m) {
    case FieldMode::kTiOde: return "ti_ode";
    case FieldMode::kUnified: return "unified";
    case FieldMode::kNoWeights: return "no_w";
    case FieldMode::kSingleBasis: return "single_basis";
  }
  return "?";
}

FieldMode field_mode_from_name(const std::string& s) {
  if (s == "ti_ode") return FieldMode::kTiOde;
  if (s == "unified") return FieldMode::kUnified;
  if (s == "no_w") return FieldMode::kNoWeights;
  if (s == "single_basis") return FieldMode::kSingleBasis;
  throw ConfigError("unknown field mode '" + s + "'");
}

std::size_t DynamicsConfig::effective_k() const {
  return mode == FieldMode::kSingleBasis ? 1 : k_basis;
}

FnnSpec DynamicsConfig::basis_spec(std::size_t k) const {
  return {"dyn.basis" + std::to_string(k), {2 * d_z, basis_hidden, d_z}, Activation::kRelu,
          bounded_basis ? Activation::kSigmoid : Activation::kIdentity, 0.0, true};
}

FnnSpec DynamicsConfig::weight_recv_spec(std::size_t k) const {
  return {"dyn.wrecv" + std::to_string(k), {d_z, weight_hidden, d_z}, Activation::kRelu,
          Activation::kSigmoid, 0.0, true};
}

FnnSpec DynamicsConfig::weight_send_spec(std::size_t k) const {
  return {"dyn.wsend" + std::to_string(k), {d_z, weight_hidden, d_z}, Activation::kRelu,
          Activation::kSigmoid, 0.0, true};
}

FnnSpec DynamicsConfig::agg_spec() const {
  return {"dyn.agg", {d_z, agg_hidden, d_z}, Activation::kRelu, Activation::kIdentity, 0.0,
          true};
}

FnnSpec DynamicsConfig::unified_spec() const {
  return {"dyn.unified", {2 * d_z, basis_hidden, d_z}, Activation::kRelu,
          bounded_basis ? Activation::kSigmoid : Activation::kIdentity, 0.0, true};
}

void DynamicsConfig::validate() const {
  if (effective_k() < 1) throw ConfigError("DynamicsConfig: K must be >= 1");
  if (d_z == 0 || d_z % 2 != 0) {
    throw ConfigError("DynamicsConfig: d_z must be even (time encoding interleaves)");
  }
  // Theorem-style structural checks: the gate nets must end in sigmoid
  // so every weight lands in (0,1).
  if (weight_recv_spec(0).output_activation != Activation::kSigmoid ||
      weight_send_spec(0).output_activation != Activation::kSigmoid) {
    throw ConfigError("DynamicsConfig: weight nets must have sigmoid output");
  }
}

void register_dynamics(ParamStore& store, const DynamicsConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.mode == FieldMode::kUnified) {
    register_fnn(store, cfg.unified_spec(), rng);
  } else {
    for (std::size_t k = 0; k < cfg.effective_k(); ++k) {
      register_fnn(store, cfg.basis_spec(k), rng);
      // Gate nets exist for every non-unified mode so ablations keep the
      // same checkpoint surface; kNoWeights simply never evaluates them.
      register_fnn(store, cfg.weight_recv_spec(k), rng);
      register_fnn(store, cfg.weight_send_spec(k), rng);
    }
  }
  register_fnn(store, cfg.agg_spec(), rng);
}

PairIndex build_pair_index(const Tensor& mask, bool include_self, bool full) {
  const std::size_t n = mask.rows();
  if (mask.cols() != n) throw ShapeError("build_pair_index: mask must be square");
  std::vector<int> recv, send;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool active =
          full || mask.at(i, j) != 0.0 || (include_self && i == j);
      if (active) {
        recv.push_back(static_cast<int>(i));
        send.push_back(static_cast<int>(j));
      }
    }
  }
  PairIndex pi;
  pi.n_nodes = static_cast<int>(n);
  pi.recv = make_indices(std::move(recv));
  pi.send = make_indices(std::move(send));
  return pi;
}

Tensor basis_weights(const ParamStore& store, const DynamicsConfig& cfg, const Tensor& z_i,
                     const Tensor& z_j, double t) {
  if (!cfg.uses_weights() && cfg.mode != FieldMode::kNoWeights) {
    throw UsageError("basis_weights: mode has no weights");
  }
  const std::size_t k_total = cfg.effective_k();
  Tensor out = Tensor::zeros({k_total, cfg.d_z});
  Tensor te = time_encoding(t, cfg.d_z);
  Tensor zi_t = z_i.reshaped({1, cfg.d_z});
  Tensor zj_t = z_j.reshaped({1, cfg.d_z});
  for (std::size_t c = 0; c < cfg.d_z; ++c) {
    zi_t[c] += te[c];
    zj_t[c] += te[c];
  }
  for (std::size_t k = 0; k < k_total; ++k) {
    if (cfg.mode == FieldMode::kNoWeights) {
      for (std::size_t c = 0; c < cfg.d_z; ++c) out.at(k, c) = 1.0;
      continue;
    }
    Tensor recv = fnn_forward(fnn_view(store, cfg.weight_recv_spec(k)), zi_t);
    Tensor send = fnn_forward(fnn_view(store, cfg.weight_send_spec(k)), zj_t);
    for (std::size_t c = 0; c < cfg.d_z; ++c) out.at(k, c) = send[c] * recv[c];
  }
  return out;
}

int evolution_field(Tape& tape, const ParamStore& store, const DynamicsConfig& cfg,
                    const PairIndex& pairs, int z, double t) {
  const Tensor& zv = tape.value(z);
  if (zv.cols() != cfg.d_z) throw ShapeError("evolution_field: z must be [N, d_z]");
  const int n = static_cast<int>(zv.rows());

  int z_pairs = tape.concat_cols(tape.gather_rows(z, pairs.recv),
                                 tape.gather_rows(z, pairs.send));
  int msg_sum = -1;
  if (cfg.mode == FieldMode::kUnified) {
    msg_sum = fnn_forward_tape(tape, store, cfg.unified_spec(), z_pairs);
  } else {
    int z_t = -1;
    if (cfg.uses_weights()) {
      z_t = tape.add_rowvec(z, tape.leaf(time_encoding(t, cfg.d_z)));
    }
    for (std::size_t k = 0; k < cfg.effective_k(); ++k) {
      int msg = fnn_forward_tape(tape, store, cfg.basis_spec(k), z_pairs);
      if (cfg.uses_weights()) {
        int recv_gate = fnn_forward_tape(tape, store, cfg.weight_recv_spec(k), z_t);
        int send_gate = fnn_forward_tape(tape, store, cfg.weight_send_spec(k), z_t);
        int w = tape.mul(tape.gather_rows(send_gate, pairs.send),
                         tape.gather_rows(recv_gate, pairs.recv));
        msg = tape.mul(msg, w);
      }
      msg_sum = (msg_sum < 0) ? msg : tape.add(msg_sum, msg);
    }
  }
  int agg_in = tape.scatter_add_rows(msg_sum, pairs.recv, n);
  int agg = fnn_forward_tape(tape, store, cfg.agg_spec(), agg_in);
  return tape.sub(agg, z);
}

Tensor evolution_field_plain(const ParamStore& store, const DynamicsConfig& cfg,
                             const PairIndex& pairs, const Tensor& z, double t) {
  Tensor agg = field_interaction_plain(store, cfg, pairs, z, t);
  for (std::size_t i = 0; i < agg.size(); ++i) agg[i] -= z[i];
  return agg;
}

Tensor field_interaction_plain(const ParamStore& store, const DynamicsConfig& cfg,
                               const PairIndex& pairs, const Tensor& z, double t) {
  Tape tape;
  int zi = tape.leaf(z);
  int z_pairs = tape.concat_cols(tape.gather_rows(zi, pairs.recv),
                                 tape.gather_rows(zi, pairs.send));
  int msg_sum = -1;
  if (cfg.mode == FieldMode::kUnified) {
    msg_sum = fnn_forward_tape(tape, store, cfg.unified_spec(), z_pairs);
  } else {
    int z_t = -1;
    if (cfg.uses_weights()) {
      z_t = tape.add_rowvec(zi, tape.leaf(time_encoding(t, cfg.d_z)));
    }
    for (std::size_t k = 0; k < cfg.effective_k(); ++k) {
      int msg = fnn_forward_tape(tape, store, cfg.basis_spec(k), z_pairs);
      if (cfg.uses_weights()) {
        int recv_gate = fnn_forward_tape(tape, store, cfg.weight_recv_spec(k), z_t);
        int send_gate = fnn_forward_tape(tape, store, cfg.weight_send_spec(k), z_t);
        int w = tape.mul(tape.gather_rows(send_gate, pairs.send),
                         tape.gather_rows(recv_gate, pairs.recv));
        msg = tape.mul(msg, w);
      }
      msg_sum = (msg_sum < 0) ? msg : tape.add(msg_sum, msg);
    }
  }
  int agg_in = tape.scatter_add_rows(msg_sum, pairs.recv, static_cast<int>(z.rows()));
  int agg = fnn_forward_tape(tape, store, cfg.agg_spec(), agg_in);
  return tape.value(agg);
}

}  // namespace tiode
