#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "tiode/model.hpp"
#include "tiode/trainer.hpp"

namespace tiode {

enum class NoiseKind { kFixed, kUniform, kGaussian };
const char* noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& s);

struct RobustnessConfig {
  double noise = 0.01;
  int horizon = 36;
  NoiseKind kind = NoiseKind::kFixed;  // +-noise per coordinate
  int max_samples = 16;                // test samples averaged over
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

// Clean/perturbed latent rollout of one sample under one model.
struct TrajectoryPair {
  std::vector<Tensor> clean;      // [N, d_z] per recorded step
  std::vector<Tensor> perturbed;
  std::vector<double> times;      // latent time of each recorded step
  PairIndex pairs;                // interaction mask used for this sample
};

struct RobustnessSeries {
  std::string name;
  std::vector<double> latent_err;  // mean |dz| per step, averaged over samples
  std::vector<double> obs_err;     // decoded, denormalized variant
  double cumulative = 0.0;         // sum of latent_err
  std::vector<TrajectoryPair> trajectories;  // per sample
};

struct RobustnessReport {
  RobustnessConfig config;
  std::vector<RobustnessSeries> series;
};

// Perturbs each sample's initial latent state by the same noise draw for
// every model, integrates both trajectories over the horizon, and records
// per-step mean absolute latent/observation errors.
RobustnessReport robustness_experiment(
    const std::vector<std::pair<std::string, const TiOdeModel*>>& models,
    const DatasetSplit& data, const RobustnessConfig& rcfg, const TrainConfig& tcfg);

void write_robustness_csv(const std::filesystem::path& file, const RobustnessReport& report);

}  // namespace tiode
