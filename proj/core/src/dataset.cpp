#include "tiode/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tiode/errors.hpp"

namespace tiode {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "dataset blobs are little-endian; byte swapping is not implemented");

json sim_config_to_json(const SimConfig& cfg) {
  return json{{"system", system_name(cfg.system)},
              {"n_particles", cfg.n_particles},
              {"n_timesteps", cfg.n_timesteps},
              {"sample_stride", cfg.sample_stride},
              {"integrator_step", cfg.integrator_step},
              {"interaction_prob", cfg.interaction_prob},
              {"charge_values", cfg.charge_values},
              {"box_half_width", cfg.box_half_width},
              {"spring_k", cfg.spring_k},
              {"coulomb_c", cfg.coulomb_c},
              {"softening", cfg.softening},
              {"damping", cfg.damping},
              {"vel_std", cfg.vel_std},
              {"seed", cfg.seed}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig cfg;
  static const std::vector<std::string> known = {
      "system", "n_particles", "n_timesteps", "sample_stride", "integrator_step",
      "interaction_prob", "charge_values", "box_half_width", "spring_k",
      "coulomb_c", "softening", "damping", "vel_std", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("SimConfig: unknown key '" + it.key() + "'");
    }
  }
  if (j.contains("system")) cfg.system = system_from_name(j.at("system").get<std::string>());
  if (j.contains("n_particles")) cfg.n_particles = j.at("n_particles").get<int>();
  if (j.contains("n_timesteps")) cfg.n_timesteps = j.at("n_timesteps").get<int>();
  if (j.contains("sample_stride")) cfg.sample_stride = j.at("sample_stride").get<int>();
  if (j.contains("integrator_step")) cfg.integrator_step = j.at("integrator_step").get<double>();
  if (j.contains("interaction_prob")) {
    cfg.interaction_prob = j.at("interaction_prob").get<double>();
  }
  if (j.contains("charge_values")) {
    cfg.charge_values = j.at("charge_values").get<std::vector<double>>();
  }
  if (j.contains("box_half_width")) cfg.box_half_width = j.at("box_half_width").get<double>();
  if (j.contains("spring_k")) cfg.spring_k = j.at("spring_k").get<double>();
  if (j.contains("coulomb_c")) cfg.coulomb_c = j.at("coulomb_c").get<double>();
  if (j.contains("softening")) cfg.softening = j.at("softening").get<double>();
  if (j.contains("damping")) cfg.damping = j.at("damping").get<double>();
  if (j.contains("vel_std")) cfg.vel_std = j.at("vel_std").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

void FeatureNorm::apply(Tensor& features) const {
  const std::size_t d = mean.size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t dim = i % d;
    features[i] = (features[i] - mean[dim]) / std[dim];
  }
}

void FeatureNorm::invert(Tensor& features) const {
  const std::size_t d = mean.size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t dim = i % d;
    features[i] = features[i] * std[dim] + mean[dim];
  }
}

const TrajectorySet& DatasetSplit::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw UsageError("DatasetSplit: unknown split '" + name + "'");
}

Tensor DatasetSplit::normalized_frame(const TrajectorySet& set, std::size_t s,
                                      std::size_t t) const {
  Tensor f = set.frame(s, t);
  norm.apply(f);
  return f;
}

void DatasetSplit::compute_norm() {
  const std::size_t d = train.feat_dim();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  const Tensor& tf = train.features;
  if (tf.size() == 0) throw UsageError("DatasetSplit: empty train split");
  const std::size_t per_dim = tf.size() / d;
  for (std::size_t i = 0; i < tf.size(); ++i) mean[i % d] += tf[i];
  for (auto& m : mean) m /= static_cast<double>(per_dim);
  for (std::size_t i = 0; i < tf.size(); ++i) {
    const double c = tf[i] - mean[i % d];
    var[i % d] += c * c;
  }
  norm.mean = mean;
  norm.std.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    norm.std[k] = std::max(std::sqrt(var[k] / static_cast<double>(per_dim)), 1e-8);
  }
}

void DatasetSplit::validate() const {
  for (const auto* set : {&train, &valid, &test}) {
    if (set->n_samples() == 0) continue;
    set->validate();
    if (static_cast<int>(set->n_steps()) < condition_len + prediction_len) {
      throw ConfigError("DatasetSplit: T must be >= condition_len + prediction_len");
    }
  }
}

void write_f64_blob(const fs::path& file, const Tensor& t) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + file.string());
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!os) throw IoError("write failed: " + file.string());
}

Tensor read_f64_blob(const fs::path& file, const Shape& shape) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + file.string());
  is.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(is.tellg());
  is.seekg(0, std::ios::beg);
  const std::size_t expect = shape_numel(shape) * sizeof(double);
  if (bytes != expect) {
    throw IoError("blob " + file.string() + " has " + std::to_string(bytes) +
                  " bytes, expected " + std::to_string(expect) + " for shape " +
                  shape_str(shape));
  }
  std::vector<double> data(shape_numel(shape));
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expect));
  if (!is) throw IoError("read failed: " + file.string());
  return Tensor::from_data(shape, std::move(data));
}

void write_dataset(const DatasetSplit& ds, const fs::path& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());

  json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["condition_len"] = ds.condition_len;
  meta["prediction_len"] = ds.prediction_len;
  meta["config"] = sim_config_to_json(ds.train.config);
  meta["seed"] = ds.train.config.seed;
  for (const std::string name : {"train", "valid", "test"}) {
    const TrajectorySet& set = ds.split(name);
    meta["splits"][name] = {{"samples", set.n_samples()},
                            {"timesteps", set.n_steps()},
                            {"nodes", set.n_nodes()},
                            {"features", set.feat_dim()}};
    write_f64_blob(dir / (name + "_traj.f64"), set.features);
    write_f64_blob(dir / (name + "_adj.f64"), set.adjacency);
  }
  std::ofstream os(dir / "meta.json");
  if (!os) throw IoError("cannot write meta.json in " + dir.string());
  os << meta.dump(2) << "\n";
}

DatasetSplit load_dataset(const fs::path& dir) {
  std::ifstream is(dir / "meta.json");
  if (!is) throw IoError("missing meta.json in " + dir.string());
  json meta;
  try {
    is >> meta;
  } catch (const json::exception& e) {
    throw IoError("malformed meta.json: " + std::string(e.what()));
  }
  if (meta.value("format_version", -1) != kDatasetFormatVersion) {
    throw IoError("unsupported dataset format_version");
  }

  DatasetSplit ds;
  ds.condition_len = meta.at("condition_len").get<int>();
  ds.prediction_len = meta.at("prediction_len").get<int>();
  SimConfig cfg = sim_config_from_json(meta.at("config"));

  for (const std::string name : {"train", "valid", "test"}) {
    const json& sj = meta.at("splits").at(name);
    const std::size_t s = sj.at("samples").get<std::size_t>();
    const std::size_t t = sj.at("timesteps").get<std::size_t>();
    const std::size_t n = sj.at("nodes").get<std::size_t>();
    const std::size_t d = sj.at("features").get<std::size_t>();
    TrajectorySet set;
    set.config = cfg;
    set.split = name;
    set.features = read_f64_blob(dir / (name + "_traj.f64"), {s, t, n, d});
    set.adjacency = read_f64_blob(dir / (name + "_adj.f64"), {s, n, n});
    if (fs::exists(dir / (name + "_adj_dyn.f64"))) {
      set.adjacency_dyn = read_f64_blob(dir / (name + "_adj_dyn.f64"), {s, t, n, n});
    }
    set.validate();
    if (name == "train") {
      ds.train = std::move(set);
    } else if (name == "valid") {
      ds.valid = std::move(set);
    } else {
      ds.test = std::move(set);
    }
  }

  ds.compute_norm();
  ds.validate();
  return ds;
}

}  // namespace tiode
