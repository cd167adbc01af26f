#include "tiode/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "tiode/errors.hpp"

namespace tiode {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("TrainConfig: learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("TrainConfig: betas must be in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("TrainConfig: adam_eps must be > 0");
  if (patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
  if (jobs < 1) throw ConfigError("TrainConfig: jobs must be >= 1");
  if (!(solver_step > 0.0)) throw ConfigError("TrainConfig: solver_step must be > 0");
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"beta1", beta1},
              {"beta2", beta2},
              {"adam_eps", adam_eps},
              {"patience", patience},
              {"seed", seed},
              {"jobs", jobs},
              {"solver", solver_method_name(method)},
              {"solver_step", solver_step}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig cfg;
  static const std::vector<std::string> known = {
      "epochs", "batch_size", "learning_rate", "beta1", "beta2", "adam_eps",
      "patience", "seed", "jobs", "solver", "solver_step"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("TrainConfig: unknown key '" + it.key() + "'");
    }
  }
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
  if (j.contains("adam_eps")) cfg.adam_eps = j.at("adam_eps").get<double>();
  if (j.contains("patience")) cfg.patience = j.at("patience").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  if (j.contains("solver"))cfg.method = solver_method_from_name(j.at("solver").get<std::string>());
  if (j.contains("solver_step")) cfg.solver_step = j.at("solver_step").get<double>();
  cfg.validate();
  return cfg;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamStore& params, const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& blk : params.blocks()) {
    if (!blk.trainable) continue;
    auto it = grads.find(blk.name);
    if (it == grads.end()) continue;
    const Tensor& g = it->second;
    Tensor& m = m_.try_emplace(blk.name, Tensor::zeros(blk.value.shape())).first->second;
    Tensor& v = v_.try_emplace(blk.name, Tensor::zeros(blk.value.shape())).first->second;
    for (std::size_t i = 0; i < blk.value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      blk.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

SolverConfig make_solver_config(const TrainConfig& tcfg, int pred_len, double time_scale) {
  if (!(time_scale > 0.0)) throw ConfigError("make_solver_config: time_scale must be > 0");
  SolverConfig sc;
  sc.method = tcfg.method;
  sc.step = tcfg.solver_step * time_scale;
  sc.eval_times.resize(pred_len);
  // z0 sits at the last conditioning index; prediction step t is
  // t*time_scale latent units later.
  for (int t = 0; t < pred_len; ++t) {
    sc.eval_times[t] = static_cast<double>(t + 1) * time_scale;
  }
  sc.validate();
  return sc;
}

namespace {

// Deterministic parallel map over sample indices: results land in
// caller-visible slots by index, so reductions are order-stable no
// matter how many workers run.
template <typename Fn>
void parallel_over(std::size_t count, int jobs, const Fn& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < count;
             i += static_cast<std::size_t>(workers)) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Tensor draw_eps(Rng rng, std::size_t n, std::size_t d_z) {
  std::vector<double> e(n * d_z);
  for (auto& v : e) v = rng.normal();
  return Tensor::raw({n, d_z}, std::move(e));
}

struct SampleEval {
  LossBreakdown loss;
  GradMap grads;
};

// Sum of squared/absolute errors in denormalized units for one sample,
// plus the entry count.
struct ErrorAccum {
  double se = 0.0;
  double ae = 0.0;
  std::size_t count = 0;
};

ErrorAccum denorm_errors(const DatasetSplit& data, const Tensor& pred_norm,
                         const Tensor& truth_norm) {
  ErrorAccum acc;
  const std::size_t d = data.norm.mean.size();
  for (std::size_t i = 0; i < pred_norm.size(); ++i) {
    const std::size_t dim = i % d;
    const double p = data.norm.denorm(pred_norm[i], dim);
    const double t = data.norm.denorm(truth_norm[i], dim);
    const double diff = p - t;
    acc.se += diff * diff;
    acc.ae += std::abs(diff);
  }
  acc.count = pred_norm.size();
  return acc;
}

}  // namespace

TrainResult train(const DatasetSplit& data, const ModelConfig& mcfg, const TrainConfig& tcfg) {
  tcfg.validate();
  data.validate();
  if (data.train.n_samples() == 0) throw UsageError("train: empty train split");

  const int cond = data.condition_len;
  const int pred = data.prediction_len;
  const std::size_t n_train = data.train.n_samples();
  const std::size_t n_valid = data.valid.n_samples();

  TiOdeModel model = TiOdeModel::init(mcfg, tcfg.seed);
  const SolverConfig solver = make_solver_config(tcfg, pred, mcfg.time_scale);

  // Views (windows, temporal-graph indices) are static across epochs.
  std::vector<SampleView> train_views, valid_views;
  train_views.reserve(n_train);
  for (std::size_t s = 0; s < n_train; ++s) {
    train_views.push_back(make_sample_view(data, data.train, s, mcfg, cond, pred));
  }
  valid_views.reserve(n_valid);
  for (std::size_t s = 0; s < n_valid; ++s) {
    valid_views.push_back(make_sample_view(data, data.valid, s, mcfg, cond, pred));
  }

  // Frozen-block ledger: RandNets must not move during training.
  std::vector<std::pair<std::string, std::uint64_t>> frozen;
  for (const auto& blk : model.params.blocks()) {
    if (!blk.trainable) frozen.emplace_back(blk.name, model.params.checksum(blk.name));
  }

  AdamOptimizer adam(tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);
  Rng root(tcfg.seed);

  TrainResult result;
  result.model = model;
  double best_mse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  const std::size_t d_z = mcfg.d_z;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng epoch_rng = root.fork("epoch").fork(static_cast<std::uint64_t>(epoch));
    // Deterministic shuffle.
    for (std::size_t i = n_train; i > 1; --i) {
      std::swap(order[i - 1], order[epoch_rng.uniform_int(i)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t stop =
          std::min(n_train, start + static_cast<std::size_t>(tcfg.batch_size));
      const std::size_t bsz = stop - start;
      std::vector<SampleEval> slots(bsz);

      parallel_over(bsz, tcfg.jobs, [&](std::size_t b) {
        const std::size_t s = order[start + b];
        Rng noise_rng = epoch_rng.fork("noise").fork(static_cast<std::uint64_t>(s));
        Rng drop_rng = epoch_rng.fork("dropout").fork(static_cast<std::uint64_t>(s));
        const SampleView& view = train_views[s];
        Tape tape;
        Tensor eps = draw_eps(noise_rng, view.n_nodes, d_z);
        ForwardResult fwd =
            model_forward(tape, model, view, solver, eps, /*train=*/true, &drop_rng);
        slots[b].loss = loss_values(tape, fwd.loss);
        slots[b].grads = tape.backward(fwd.loss.total);
      });

      // Ordered reduction keeps results identical for any worker count.
      GradMap batch_grads;
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) {
        batch_loss += slots[b].loss.total;
        for (auto& [name, g] : slots[b].grads) {
          auto it = batch_grads.find(name);
          if (it == batch_grads.end()) {
            batch_grads.emplace(name, std::move(g));
          } else {
            Tensor& acc = it->second;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(bsz);
      for (auto& [name, g] : batch_grads) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch starting at " + std::to_string(start));
      }
      adam.step(model.params, batch_grads);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(n_train);

    // Validation: posterior mean, no dropout, denormalized MSE.
    double valid_loss = 0.0;
    ErrorAccum valid_err;
    if (n_valid > 0) {
      std::vector<LossBreakdown> vloss(n_valid);
      std::vector<ErrorAccum> verr(n_valid);
      parallel_over(n_valid, tcfg.jobs, [&](std::size_t s) {
        const SampleView& view = valid_views[s];
        Tape tape;
        Tensor eps = Tensor::zeros({view.n_nodes, d_z});
        ForwardResult fwd = model_forward(tape, model, view, solver, eps, false, nullptr);
        vloss[s] = loss_values(tape, fwd.loss);
        verr[s] = denorm_errors(data, tape.value(fwd.predictions), view.targets);
      });
      for (std::size_t s = 0; s < n_valid; ++s) {
        valid_loss += vloss[s].total;
        valid_err.se += verr[s].se;
        valid_err.ae += verr[s].ae;
        valid_err.count += verr[s].count;
      }
      valid_loss /= static_cast<double>(n_valid);
    }
    const double valid_mse =
        valid_err.count ? valid_err.se / static_cast<double>(valid_err.count) : epoch_loss;

    result.curve.push_back({epoch, epoch_loss, valid_loss, valid_mse});
    result.epochs_run = epoch + 1;

    if (valid_mse < best_mse) {
      best_mse = valid_mse;
      best_epoch = epoch;
      result.model = model;  // snapshot best-valid parameters
    }
    if (epoch - best_epoch >= tcfg.patience) break;
  }

  for (const auto& [name, sum] : frozen) {
    if (model.params.checksum(name) != sum) {
      throw NumericError("train: frozen block '" + name + "' changed during training");
    }
  }

  result.best_epoch = best_epoch;
  result.best_valid_mse = best_mse;
  return result;
}

Metrics evaluate(const TiOdeModel& model, const DatasetSplit& data,
                 const std::string& split, int pred_len, const TrainConfig& tcfg) {
  const TrajectorySet& set = data.split(split);
  if (set.n_samples() == 0) throw UsageError("evaluate: empty split '" + split + "'");
  const int cond = data.condition_len;
  if (static_cast<int>(set.n_steps()) < cond + pred_len) {
    throw UsageError("evaluate: need T >= " + std::to_string(cond + pred_len) + ", have " +
                     std::to_string(set.n_steps()));
  }
  const SolverConfig solver = make_solver_config(tcfg, pred_len, model.config.time_scale);
  const std::size_t n_samples = set.n_samples();
  std::vector<ErrorAccum> errs(n_samples);
  parallel_over(n_samples, tcfg.jobs, [&](std::size_t s) {
    SampleView view = make_sample_view(data, set, s, model.config, cond, pred_len);
    Tape tape;
    Tensor eps = Tensor::zeros({view.n_nodes, model.config.d_z});
    ForwardResult fwd = model_forward(tape, model, view, solver, eps, false, nullptr);
    errs[s] = denorm_errors(data, tape.value(fwd.predictions), view.targets);
  });
  double se = 0.0, ae = 0.0;
  std::size_t count = 0;
  for (const auto& e : errs) {
    se += e.se;
    ae += e.ae;
    count += e.count;
  }
  Metrics m;
  m.mse = se / static_cast<double>(count);
  m.mae = ae / static_cast<double>(count);
  return m;
}

Metrics copy_last_baseline(const DatasetSplit& data, const std::string& split, int pred_len) {
  const TrajectorySet& set = data.split(split);
  if (set.n_samples() == 0) throw UsageError("copy_last_baseline: empty split");
  const int cond = data.condition_len;
  if (static_cast<int>(set.n_steps()) < cond + pred_len) {
    throw UsageError("copy_last_baseline: trajectory too short");
  }
  double se = 0.0, ae = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < set.n_samples(); ++s) {
    Tensor last = set.frame(s, cond - 1);
    for (int t = 0; t < pred_len; ++t) {
      Tensor truth = set.frame(s, cond + t);
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - last[i];
        se += d * d;
        ae += std::abs(d);
        ++count;
      }
    }
  }
  Metrics m;
  m.mse = se / static_cast<double>(count);
  m.mae = ae / static_cast<double>(count);
  return m;
}

void write_loss_curve_csv(const std::filesystem::path& file,
                          const std::vector<EpochLog>& curve) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot write " + file.string());
  os << "epoch,train_loss,valid_loss,valid_mse\n";
  os.precision(12);
  for (const auto& row : curve) {
    os << row.epoch << "," << row.train_loss << "," << row.valid_loss << ","
       << row.valid_mse << "\n";
  }
}

}  // namespace tiode
