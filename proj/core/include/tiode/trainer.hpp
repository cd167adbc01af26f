#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "tiode/dataset.hpp"
#include "tiode/decoder.hpp"
#include "tiode/model.hpp"

namespace tiode {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 20;  // early stopping on valid MSE
  std::uint64_t seed = 0;
  int jobs = 1;
  SolverMethod method = SolverMethod::kRk4;
  double solver_step = 0.25;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Adam with per-block first/second moment buffers; skips frozen blocks.
class AdamOptimizer {
public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps);
  void step(ParamStore& params, const GradMap& grads);

private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_mse = 0.0;
};

struct TrainResult {
  TiOdeModel model;  // best-valid parameters
  std::vector<EpochLog> curve;
  int best_epoch = -1;
  double best_valid_mse = 0.0;
  int epochs_run = 0;
};

// Full training pass per the end-to-end pipeline: encode, sample the
// initial state, integrate, decode, ELBO, backprop through the unrolled
// solver, Adam. Deterministic given (data, configs, seed) regardless of
// the worker count.
TrainResult train(const DatasetSplit& data, const ModelConfig& mcfg, const TrainConfig& tcfg);

// Deterministic evaluation: condition on the first condition_len steps,
// posterior mean instead of sampling, metrics in denormalized units.
Metrics evaluate(const TiOdeModel& model, const DatasetSplit& data,
                 const std::string& split, int pred_len, const TrainConfig& tcfg);

// Predict-last-frame reference: repeats the final conditioning frame.
Metrics copy_last_baseline(const DatasetSplit& data, const std::string& split, int pred_len);

// Prediction step t maps to latent time t*time_scale; solver_step is a
// fraction of one observation step.
SolverConfig make_solver_config(const TrainConfig& tcfg, int pred_len,
                                double time_scale = 1.0);

void write_loss_curve_csv(const std::filesystem::path& file,
                          const std::vector<EpochLog>& curve);

}  // namespace tiode
