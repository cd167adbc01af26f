#pragma once

#include <string>

#include "tiode/fnn.hpp"
#include "tiode/params.hpp"
#include "tiode/rng.hpp"
#include "tiode/tape.hpp"

namespace tiode {

// How the interaction term of the latent field is built.
//   kTiOde:       K basis functions gated by time-varying weights
//   kUnified:     one shared interaction function, no weights
//   kNoWeights:   basis functions with w == 1
//   kSingleBasis: K forced to 1, weights retained
enum class FieldMode { kTiOde, kUnified, kNoWeights, kSingleBasis };

const char* field_mode_name(FieldMode m);
FieldMode field_mode_from_name(const std::string& s);

struct DynamicsConfig {
  std::size_t d_z = 16;
  std::size_t k_basis = 5;
  std::size_t basis_hidden = 128;
  std::size_t weight_hidden = 64;
  std::size_t agg_hidden = 64;
  FieldMode mode = FieldMode::kTiOde;
  bool bounded_basis = false;  // sigmoid-bounded basis outputs (off by default)

  // K after applying the mode (single-basis collapses to 1).
  std::size_t effective_k() const;
  bool uses_weights() const {
    return mode == FieldMode::kTiOde || mode == FieldMode::kSingleBasis;
  }

  FnnSpec basis_spec(std::size_t k) const;
  FnnSpec weight_recv_spec(std::size_t k) const;  // response gate of node i
  FnnSpec weight_send_spec(std::size_t k) const;  // activation gate of node j
  FnnSpec agg_spec() const;
  FnnSpec unified_spec() const;
  void validate() const;
};

void register_dynamics(ParamStore& store, const DynamicsConfig& cfg, Rng& rng);

// Ordered interaction pairs (receiver i, sender j) selected by a mask.
struct PairIndex {
  int n_nodes = 0;
  IdxPtr recv;  // i of each pair
  IdxPtr send;  // j of each pair
};

// mask [N,N]: pair (i,j) is active when mask(i,j) != 0. include_self adds
// (i,i) regardless of the mask diagonal; full ignores the mask and takes
// every ordered pair.
PairIndex build_pair_index(const Tensor& mask, bool include_self, bool full);

// Per-pair gate values w_{i,j,k} = send_k(z_j + TE(t)) * recv_k(z_i + TE(t)),
// entries strictly in (0,1); [K, d_z] for a single pair. Plain evaluation.
Tensor basis_weights(const ParamStore& store, const DynamicsConfig& cfg, const Tensor& z_i,
                     const Tensor& z_j, double t);

// dZ/dt at latent time t for all nodes; z is [N, d_z].
int evolution_field(Tape& tape, const ParamStore& store, const DynamicsConfig& cfg,
                    const PairIndex& pairs, int z, double t);

// Plain (tape-free) field evaluation, for diagnostics and oracles.
Tensor evolution_field_plain(const ParamStore& store, const DynamicsConfig& cfg,
                             const PairIndex& pairs, const Tensor& z, double t);
// The aggregation part f^a(sum of messages) only, without the -z term.
Tensor field_interaction_plain(const ParamStore& store, const DynamicsConfig& cfg,
                               const PairIndex& pairs, const Tensor& z, double t);

}  // namespace tiode
