#include "tiode/model.hpp"

#include <fstream>

#include "tiode/errors.hpp"

namespace tiode {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kToolVersion = "0.1.0";

const char* mask_mode_name(MaskMode m) {
  return m == MaskMode::kAdjacency ? "adjacency" : "full";
}

MaskMode mask_mode_from_name(const std::string& s) {
  if (s == "adjacency") return MaskMode::kAdjacency;
  if (s == "full") return MaskMode::kFull;
  throw ConfigError("unknown mask mode '" + s + "'");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoW: return "no-w";
    case Variant::kNoR: return "no-r";
    case Variant::kNoO: return "no-o";
    case Variant::kUnified: return "unified";
  }
  return "?";
}

Variant variant_from_name(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "no-w" || s == "no_w") return Variant::kNoW;
  if (s == "no-r" || s == "no_r") return Variant::kNoR;
  if (s == "no-o" || s == "no_o") return Variant::kNoO;
  if (s == "unified") return Variant::kUnified;
  throw ConfigError("unknown variant '" + s + "' (expected full|no-w|no-r|no-o|unified)");
}

EncoderConfig ModelConfig::encoder() const {
  EncoderConfig e;
  e.feat_dim = feat_dim;
  e.d_hid = d_hid;
  e.d_z = d_z;
  e.layers = encoder_layers;
  e.k_rand = k_rand;
  e.random_hidden = random_hidden;
  e.dropout = dropout;
  e.sigma_min = sigma_min;
  return e;
}

DynamicsConfig ModelConfig::dynamics() const {
  DynamicsConfig d;
  d.d_z = d_z;
  d.k_basis = k_basis;
  d.basis_hidden = basis_hidden;
  d.weight_hidden = weight_hidden;
  d.agg_hidden = agg_hidden;
  d.mode = mode;
  d.bounded_basis = bounded_basis;
  return d;
}

DecoderConfig ModelConfig::decoder() const {
  DecoderConfig d;
  d.d_z = d_z;
  d.feat_dim = feat_dim;
  d.hidden = dec_hidden;
  d.sigma_c2 = sigma_c2;
  return d;
}

void ModelConfig::validate() const {
  if (!(time_scale > 0.0)) throw ConfigError("ModelConfig: time_scale must be > 0");
  encoder().validate();
  dynamics().validate();
  decoder().validate();
}

json ModelConfig::to_json() const {
  return json{{"feat_dim", feat_dim},
              {"d_hid", d_hid},
              {"d_z", d_z},
              {"encoder_layers", encoder_layers},
              {"k_basis", k_basis},
              {"k_rand", k_rand},
              {"basis_hidden", basis_hidden},
              {"random_hidden", random_hidden},
              {"weight_hidden", weight_hidden},
              {"agg_hidden", agg_hidden},
              {"dec_hidden", dec_hidden},
              {"dropout", dropout},
              {"sigma_min", sigma_min},
              {"sigma_c2", sigma_c2},
              {"time_scale", time_scale},
              {"mode", field_mode_name(mode)},
              {"mask", mask_mode_name(mask)},
              {"include_self", include_self},
              {"bounded_basis", bounded_basis}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  static const std::vector<std::string> known = {
      "feat_dim", "d_hid", "d_z", "encoder_layers", "k_basis", "k_rand",
      "basis_hidden", "random_hidden", "weight_hidden", "agg_hidden", "dec_hidden",
      "dropout", "sigma_min", "sigma_c2", "time_scale", "mode", "mask", "include_self",
      "bounded_basis"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("ModelConfig: unknown key '" + it.key() + "'");
    }
  }
  if (j.contains("feat_dim")) cfg.feat_dim = j.at("feat_dim").get<std::size_t>();
  if (j.contains("d_hid")) cfg.d_hid = j.at("d_hid").get<std::size_t>();
  if (j.contains("d_z")) cfg.d_z = j.at("d_z").get<std::size_t>();
  if (j.contains("encoder_layers")) {
    cfg.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  }
  if (j.contains("k_basis")) cfg.k_basis = j.at("k_basis").get<std::size_t>();
  if (j.contains("k_rand")) cfg.k_rand = j.at("k_rand").get<std::size_t>();
  if (j.contains("basis_hidden")) cfg.basis_hidden = j.at("basis_hidden").get<std::size_t>();
  if (j.contains("random_hidden")) {
    cfg.random_hidden = j.at("random_hidden").get<std::size_t>();
  }
  if (j.contains("weight_hidden")) {
    cfg.weight_hidden = j.at("weight_hidden").get<std::size_t>();
  }
  if (j.contains("agg_hidden")) cfg.agg_hidden = j.at("agg_hidden").get<std::size_t>();
  if (j.contains("dec_hidden")) cfg.dec_hidden = j.at("dec_hidden").get<std::size_t>();
  if (j.contains("dropout")) cfg.dropout = j.at("dropout").get<double>();
  if (j.contains("sigma_min")) cfg.sigma_min = j.at("sigma_min").get<double>();
  if (j.contains("sigma_c2")) cfg.sigma_c2 = j.at("sigma_c2").get<double>();
  if (j.contains("time_scale")) cfg.time_scale = j.at("time_scale").get<double>();
  if (j.contains("mode")) cfg.mode = field_mode_from_name(j.at("mode").get<std::string>());
  if (j.contains("mask")) cfg.mask = mask_mode_from_name(j.at("mask").get<std::string>());
  if (j.contains("include_self")) cfg.include_self = j.at("include_self").get<bool>();
  if (j.contains("bounded_basis")) cfg.bounded_basis = j.at("bounded_basis").get<bool>();
  cfg.validate();
  return cfg;
}

ModelConfig make_variant(ModelConfig base, Variant v) {
  switch (v) {
    case Variant::kFull:
      base.mode = FieldMode::kTiOde;
      break;
    case Variant::kNoW:
      base.mode = FieldMode::kNoWeights;
      break;
    case Variant::kNoR:
      base.mode = FieldMode::kTiOde;
      base.k_rand = 0;
      break;
    case Variant::kNoO:
      base.mode = FieldMode::kSingleBasis;
      break;
    case Variant::kUnified:
      base.mode = FieldMode::kUnified;
      break;
  }
  return base;
}

TiOdeModel TiOdeModel::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TiOdeModel model;
  model.config = cfg;
  Rng rng = Rng(seed).fork("params");
  register_encoder(model.params, cfg.encoder(), rng);
  register_dynamics(model.params, cfg.dynamics(), rng);
  register_decoder(model.params, cfg.decoder(), rng);
  model.validate();
  return model;
}

void TiOdeModel::validate() const {
  config.validate();
  if (!params.all_finite()) throw NumericError("TiOdeModel: non-finite parameters");
  for (const FnnSpec& spec : fnn_specs()) {
    // All activations are drawn from the Lipschitz-continuous enum by
    // construction; verify the blocks are present and chained.
    fnn_view(params, spec);
  }
}

std::vector<FnnSpec> TiOdeModel::fnn_specs() const {
  std::vector<FnnSpec> specs;
  const EncoderConfig enc = config.encoder();
  specs.push_back(enc.embed_spec());
  specs.push_back(enc.post_mean_spec());
  specs.push_back(enc.post_var_spec());
  for (std::size_t k = 0; k < enc.k_rand; ++k) specs.push_back(enc.rand_spec(k));
  specs.push_back(enc.fuse_spec());
  const DynamicsConfig dyn = config.dynamics();
  if (dyn.mode == FieldMode::kUnified) {
    specs.push_back(dyn.unified_spec());
  } else {
    for (std::size_t k = 0; k < dyn.effective_k(); ++k) {
      specs.push_back(dyn.basis_spec(k));
      specs.push_back(dyn.weight_recv_spec(k));
      specs.push_back(dyn.weight_send_spec(k));
    }
  }
  specs.push_back(dyn.agg_spec());
  specs.push_back(config.decoder().spec());
  return specs;
}

SampleView make_sample_view(const DatasetSplit& data, const TrajectorySet& set,
                            std::size_t s, const ModelConfig& cfg, int condition_len,
                            int prediction_len, std::size_t start) {
  if (static_cast<int>(set.n_steps()) <
      static_cast<int>(start) + condition_len + prediction_len) {
    throw UsageError("make_sample_view: trajectory too short for window (T=" +
                     std::to_string(set.n_steps()) + ", need >= " +
                     std::to_string(start + condition_len + prediction_len) + ")");
  }
  const std::size_t n = set.n_nodes(), d = set.feat_dim();
  SampleView view;
  view.n_nodes = n;

  std::vector<double> window(static_cast<std::size_t>(condition_len) * n * d);
  for (int t = 0; t < condition_len; ++t) {
    Tensor f = data.normalized_frame(set, s, start + t);
    std::copy_n(f.data(), n * d, window.data() + static_cast<std::size_t>(t) * n * d);
  }
  view.window_feats =
      Tensor::raw({static_cast<std::size_t>(condition_len) * n, d}, std::move(window));

  std::vector<double> targets(static_cast<std::size_t>(prediction_len) * n * d);
  for (int t = 0; t < prediction_len; ++t) {
    Tensor f = data.normalized_frame(set, s, start + condition_len + t);
    std::copy_n(f.data(), n * d, targets.data() + static_cast<std::size_t>(t) * n * d);
  }
  view.targets =
      Tensor::raw({static_cast<std::size_t>(prediction_len) * n, d}, std::move(targets));

  std::vector<Tensor> adj_steps;
  adj_steps.reserve(condition_len);
  for (int t = 0; t < condition_len; ++t) {
    adj_steps.push_back(set.adjacency_at(s, start + t));
  }
  view.enc_index = build_encoder_index(build_temporal_graph(adj_steps), cfg.d_hid);

  // Field neighborhood: last observed adjacency by default, or all pairs.
  view.pair_index = build_pair_index(adj_steps.back(), cfg.include_self,
                                     cfg.mask == MaskMode::kFull);
  return view;
}

ForwardResult model_forward(Tape& tape, const TiOdeModel& model, const SampleView& view,
                            const SolverConfig& solver, const Tensor& eps, bool train,
                            Rng* dropout_rng) {
  const ModelConfig& cfg = model.config;
  ForwardResult out;
  out.enc = encode_window(tape, model.params, cfg.encoder(), view.enc_index,
                          view.window_feats, train, dropout_rng);
  out.z0 = sample_initial_state(tape, out.enc.refined, eps);

  const DynamicsConfig dyn = cfg.dynamics();
  FieldFn field = [&](Tape& t, int z, double time) {
    return evolution_field(t, model.params, dyn, view.pair_index, z, time);
  };
  out.states = ode_solve(tape, field, out.z0, solver);

  int stacked = out.states.front();
  for (std::size_t i = 1; i < out.states.size(); ++i) {
    stacked = tape.concat_rows(stacked, out.states[i]);
  }
  out.predictions = decode(tape, model.params, cfg.decoder(), stacked);
  out.loss = elbo_loss(tape, out.predictions, view.targets, out.enc.refined.mean,
                       out.enc.refined.std, cfg.sigma_c2);
  return out;
}

namespace {

json activations_json(const TiOdeModel& model) {
  json j = json::object();
  for (const FnnSpec& spec : model.fnn_specs()) {
    j[spec.prefix] = {{"hidden", activation_name(spec.activation)},
                      {"output", activation_name(spec.output_activation)}};
  }
  return j;
}

}  // namespace

void save_checkpoint(const TiOdeModel& model, const fs::path& prefix) {
  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["tool_version"] = kToolVersion;
  manifest["model"] = model.config.to_json();
  manifest["activations"] = activations_json(model);
  json blocks = json::array();
  std::size_t total = 0;
  for (const auto& blk : model.params.blocks()) {
    blocks.push_back(
        {{"name", blk.name}, {"shape", blk.value.shape()}, {"trainable", blk.trainable}});
    total += blk.value.size();
  }
  manifest["blocks"] = blocks;
  manifest["total_scalars"] = total;

  fs::path dir = prefix.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
  }
  std::ofstream os(prefix.string() + ".json");
  if (!os) throw IoError("cannot write checkpoint manifest: " + prefix.string() + ".json");
  os << manifest.dump(2) << "\n";

  std::ofstream blob(prefix.string() + ".f64", std::ios::binary);
  if (!blob) throw IoError("cannot write checkpoint blob: " + prefix.string() + ".f64");
  for (const auto& blk : model.params.blocks()) {
    blob.write(reinterpret_cast<const char*>(blk.value.data()),
               static_cast<std::streamsize>(blk.value.size() * sizeof(double)));
  }
  if (!blob) throw IoError("checkpoint blob write failed");
}

TiOdeModel load_checkpoint(const fs::path& prefix) {
  std::ifstream is(prefix.string() + ".json");
  if (!is) throw IoError("missing checkpoint manifest: " + prefix.string() + ".json");
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw IoError("unsupported checkpoint format_version");
  }

  TiOdeModel model = TiOdeModel::init(ModelConfig::from_json(manifest.at("model")), 0);

  const json& blocks = manifest.at("blocks");
  if (blocks.size() != model.params.size()) {
    throw IoError("checkpoint manifest lists " + std::to_string(blocks.size()) +
                  " blocks, model has " + std::to_string(model.params.size()));
  }

  std::ifstream blob(prefix.string() + ".f64", std::ios::binary);
  if (!blob) throw IoError("missing checkpoint blob: " + prefix.string() + ".f64");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const json& bj = blocks[b];
    ParamBlock& blk = model.params.blocks()[b];
    if (bj.at("name").get<std::string>() != blk.name) {
      throw IoError("checkpoint block order mismatch at '" + blk.name + "'");
    }
    const Shape shape = bj.at("shape").get<Shape>();
    if (shape != blk.value.shape()) {
      throw IoError("checkpoint shape mismatch for '" + blk.name + "'");
    }
    blob.read(reinterpret_cast<char*>(blk.value.data()),
              static_cast<std::streamsize>(blk.value.size() * sizeof(double)));
    if (!blob) throw IoError("checkpoint blob truncated at '" + blk.name + "'");
  }
  blob.peek();
  if (!blob.eof()) throw IoError("checkpoint blob has trailing bytes");
  if (!model.params.all_finite()) throw IoError("checkpoint contains non-finite values");
  model.validate();
  return model;
}

}  // namespace tiode
