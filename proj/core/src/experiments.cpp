#include "tiode/experiments.hpp"

#include <cmath>
#include <fstream>

#include "tiode/errors.hpp"

namespace tiode {

using nlohmann::json;

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::kFixed: return "fixed";
    case NoiseKind::kUniform: return "uniform";
    case NoiseKind::kGaussian: return "gaussian";
  }
  return "?";
}

NoiseKind noise_kind_from_name(const std::string& s) {
  if (s == "fixed") return NoiseKind::kFixed;
  if (s == "uniform") return NoiseKind::kUniform;
  if (s == "gaussian") return NoiseKind::kGaussian;
  throw ConfigError("unknown noise kind '" + s + "'");
}

void RobustnessConfig::validate() const {
  if (noise < 0.0) throw ConfigError("RobustnessConfig: noise must be >= 0");
  if (horizon < 1) throw ConfigError("RobustnessConfig: horizon must be >= 1");
  if (max_samples < 1) throw ConfigError("RobustnessConfig: max_samples must be >= 1");
}

json RobustnessConfig::to_json() const {
  return json{{"noise", noise},
              {"horizon", horizon},
              {"kind", noise_kind_name(kind)},
              {"max_samples", max_samples},
              {"seed", seed}};
}

namespace {

Tensor draw_noise(Rng& rng, NoiseKind kind, double magnitude, std::size_t n,
                  std::size_t d_z) {
  std::vector<double> e(n * d_z);
  for (auto& v : e) {
    switch (kind) {
      case NoiseKind::kFixed: v = magnitude * rng.sign(); break;
      case NoiseKind::kUniform: v = rng.uniform(-magnitude, magnitude); break;
      case NoiseKind::kGaussian: v = magnitude * rng.normal(); break;
    }
  }
  return Tensor::raw({n, d_z}, std::move(e));
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

RobustnessReport robustness_experiment(
    const std::vector<std::pair<std::string, const TiOdeModel*>>& models,
    const DatasetSplit& data, const RobustnessConfig& rcfg, const TrainConfig& tcfg) {
  rcfg.validate();
  if (models.empty()) throw UsageError("robustness_experiment: no models given");
  for (const auto& [name, model] : models) {
    if (model->config.d_z != models.front().second->config.d_z) {
      throw UsageError("robustness_experiment: models must share d_z for a common draw");
    }
    if (model->config.time_scale != models.front().second->config.time_scale) {
      throw UsageError("robustness_experiment: models must share time_scale");
    }
  }
  const TrajectorySet& set = data.test;
  if (set.n_samples() == 0) throw UsageError("robustness_experiment: empty test split");

  const std::size_t n_samples =
      std::min<std::size_t>(set.n_samples(), static_cast<std::size_t>(rcfg.max_samples));
  const int cond = data.condition_len;
  const SolverConfig solver =
      make_solver_config(tcfg, rcfg.horizon, models.front().second->config.time_scale);

  RobustnessReport report;
  report.config = rcfg;
  for (const auto& [name, model] : models) {
    RobustnessSeries series;
    series.name = name;
    series.latent_err.assign(rcfg.horizon, 0.0);
    series.obs_err.assign(rcfg.horizon, 0.0);
    series.trajectories.resize(n_samples);
    report.series.push_back(std::move(series));
  }

  Rng root = Rng(rcfg.seed).fork("robustness");
  for (std::size_t s = 0; s < n_samples; ++s) {
    // One noise draw per sample, shared by every model.
    Rng sample_rng = root.fork(static_cast<std::uint64_t>(s));
    Tensor eps;  // drawn once dimensions are known (models share d_z)

    for (std::size_t m = 0; m < models.size(); ++m) {
      const TiOdeModel& model = *models[m].second;
      const std::size_t d_z = model.config.d_z;
      // Conditioning window only; the horizon extends beyond the sample's
      // prediction range without needing ground truth.
      SampleView view = make_sample_view(data, set, s, model.config, cond,
                                         /*prediction_len=*/0);
      if (eps.empty()) {
        eps = draw_noise(sample_rng, rcfg.kind, rcfg.noise, view.n_nodes, d_z);
      }

      Tape tape;
      EncoderOutput enc = encode_window(tape, model.params, model.config.encoder(),
                                        view.enc_index, view.window_feats);
      int z0 = sample_initial_state(tape, enc.refined, Tensor::zeros({view.n_nodes, d_z}));
      int z0_pert = tape.add(z0, tape.leaf(eps));

      const DynamicsConfig dyn = model.config.dynamics();
      FieldFn field = [&](Tape& t, int z, double time) {
        return evolution_field(t, model.params, dyn, view.pair_index, z, time);
      };
      std::vector<int> clean = ode_solve(tape, field, z0, solver);
      std::vector<int> pert = ode_solve(tape, field, z0_pert, solver);

      TrajectoryPair pair;
      pair.pairs = view.pair_index;
      pair.times = solver.eval_times;
      for (int t = 0; t < rcfg.horizon; ++t) {
        const Tensor& zc = tape.value(clean[t]);
        const Tensor& zp = tape.value(pert[t]);
        report.series[m].latent_err[t] += mean_abs_diff(zc, zp);

        Tensor xc = decode_plain(model.params, model.config.decoder(), zc);
        Tensor xp = decode_plain(model.params, model.config.decoder(), zp);
        double obs = 0.0;
        const std::size_t d = data.norm.mean.size();
        for (std::size_t i = 0; i < xc.size(); ++i) {
          obs += std::abs(data.norm.denorm(xc[i], i % d) - data.norm.denorm(xp[i], i % d));
        }
        report.series[m].obs_err[t] += obs / static_cast<double>(xc.size());

        pair.clean.push_back(zc);
        pair.perturbed.push_back(zp);
      }
      report.series[m].trajectories[s] = std::move(pair);
    }
  }

  for (auto& series : report.series) {
    for (auto& v : series.latent_err) v /= static_cast<double>(n_samples);
    for (auto& v : series.obs_err) v /= static_cast<double>(n_samples);
    series.cumulative = 0.0;
    for (double v : series.latent_err) series.cumulative += v;
  }
  return report;
}

void write_robustness_csv(const std::filesystem::path& file, const RobustnessReport& report) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot write " + file.string());
  os << "step";
  for (const auto& s : report.series) {
    os << ",e_latent_" << s.name << ",cum_latent_" << s.name << ",e_obs_" << s.name;
  }
  os << "\n";
  os.precision(12);
  std::vector<double> cums(report.series.size(), 0.0);
  for (int t = 0; t < report.config.horizon; ++t) {
    os << (t + 1);
    for (std::size_t m = 0; m < report.series.size(); ++m) {
      cums[m] += report.series[m].latent_err[t];
      os << "," << report.series[m].latent_err[t] << "," << cums[m] << ","
         << report.series[m].obs_err[t];
    }
    os << "\n";
  }
}

}  // namespace tiode
