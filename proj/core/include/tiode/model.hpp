#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "tiode/dataset.hpp"
#include "tiode/decoder.hpp"
#include "tiode/dynamics.hpp"
#include "tiode/encoder.hpp"
#include "tiode/solver.hpp"

namespace tiode {

enum class MaskMode { kAdjacency, kFull };
const char* mask_mode_name(MaskMode m);
MaskMode mask_mode_from_name(const std::string& s);

enum class Variant { kFull, kNoW, kNoR, kNoO, kUnified };
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct ModelConfig {
  std::size_t feat_dim = 4;
  std::size_t d_hid = 64;
  std::size_t d_z = 16;
  std::size_t encoder_layers = 2;
  std::size_t k_basis = 5;
  std::size_t k_rand = 4;
  std::size_t basis_hidden = 128;
  std::size_t random_hidden = 64;
  std::size_t weight_hidden = 64;
  std::size_t agg_hidden = 64;
  std::size_t dec_hidden = 64;
  double dropout = 0.2;
  double sigma_min = 1e-4;
  double sigma_c2 = 1.0;
  // Latent time units per observation step. The -z term contracts the
  // state at unit rate, so long horizons need a scale well below 1 for
  // the initial condition to survive to the last prediction.
  double time_scale = 1.0;
  FieldMode mode = FieldMode::kTiOde;
  MaskMode mask = MaskMode::kAdjacency;
  bool include_self = true;
  bool bounded_basis = false;

  EncoderConfig encoder() const;
  DynamicsConfig dynamics() const;
  DecoderConfig decoder() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Apply an ablation/baseline variant on top of a base configuration.
ModelConfig make_variant(ModelConfig base, Variant v);

struct TiOdeModel {
  ModelConfig config;
  ParamStore params;

  static TiOdeModel init(const ModelConfig& cfg, std::uint64_t seed);
  // Well-posedness preconditions that hold by construction: finite
  // parameters, Lipschitz activation enums, sigmoid gate outputs.
  void validate() const;
  // Every FnnSpec of this architecture, in registration order.
  std::vector<FnnSpec> fnn_specs() const;
};

// One windowed sample prepared for the forward pass.
struct SampleView {
  Tensor window_feats;  // [N*T_h, d], normalized, t-major rows
  Tensor targets;       // [P*N, d], normalized, t-major rows
  EncoderIndex enc_index;
  PairIndex pair_index;
  std::size_t n_nodes = 0;
};

// Slice sample s of a trajectory set into a condition window starting at
// step `start` with the split's lengths.
SampleView make_sample_view(const DatasetSplit& data, const TrajectorySet& set,
                            std::size_t s, const ModelConfig& cfg, int condition_len,
                            int prediction_len, std::size_t start = 0);

struct ForwardResult {
  EncoderOutput enc;
  int z0 = -1;
  std::vector<int> states;  // [N, d_z] at each prediction step
  int predictions = -1;     // [P*N, feat_dim]
  LossNodes loss;
};

// Full pipeline: encode -> sample z0 -> integrate -> decode -> ELBO.
// eps is the reparameterization noise ([N, d_z]; zeros = posterior mean).
ForwardResult model_forward(Tape& tape, const TiOdeModel& model, const SampleView& view,
                            const SolverConfig& solver, const Tensor& eps,
                            bool train = false, Rng* dropout_rng = nullptr);

inline constexpr int kCheckpointFormatVersion = 1;
extern const char* const kToolVersion;

// Checkpoint = JSON manifest (<prefix>.json: ordered block names, shapes,
// activation enums, model config, format version) + one little-endian
// f64 blob (<prefix>.f64) concatenating blocks in manifest order.
void save_checkpoint(const TiOdeModel& model, const std::filesystem::path& prefix);
TiOdeModel load_checkpoint(const std::filesystem::path& prefix);

}  // namespace tiode
