#include "tiode/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "tiode/dataset.hpp"
#include "tiode/diagnostics.hpp"
#include "tiode/errors.hpp"
#include "tiode/experiments.hpp"
#include "tiode/model.hpp"
#include "tiode/trainer.hpp"

namespace tiode::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  SimConfig sim;
  std::size_t train_samples = 1000;
  std::size_t valid_samples = 200;
  std::size_t test_samples = 200;
  int condition_len = 12;
  int prediction_len = 12;
  ModelConfig model;
  TrainConfig train;
};

inline constexpr int kRunConfigVersion = 1;

json run_config_to_json(const RunConfig& rc) {
  return json{{"version", kRunConfigVersion},
              {"data",
               {{"sim", sim_config_to_json(rc.sim)},
                {"train_samples", rc.train_samples},
                {"valid_samples", rc.valid_samples},
                {"test_samples", rc.test_samples},
                {"condition_len", rc.condition_len},
                {"prediction_len", rc.prediction_len}}},
              {"model", rc.model.to_json()},
              {"train", rc.train.to_json()}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "version" && k != "data" && k != "model" && k != "train") {
      throw ConfigError("RunConfig: unknown key '" + k + "'");
    }
  }
  if (j.contains("version") && j.at("version").get<int>() != kRunConfigVersion) {
    throw ConfigError("RunConfig: unsupported version");
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    for (auto it = d.begin(); it != d.end(); ++it) {
      const std::string& k = it.key();
      if (k != "sim" && k != "train_samples" && k != "valid_samples" &&
          k != "test_samples" && k != "condition_len" && k != "prediction_len") {
        throw ConfigError("RunConfig.data: unknown key '" + k + "'");
      }
    }
    if (d.contains("sim")) rc.sim = sim_config_from_json(d.at("sim"));
    if (d.contains("train_samples")) rc.train_samples = d.at("train_samples").get<std::size_t>();
    if (d.contains("valid_samples")) rc.valid_samples = d.at("valid_samples").get<std::size_t>();
    if (d.contains("test_samples")) rc.test_samples = d.at("test_samples").get<std::size_t>();
    if (d.contains("condition_len")) rc.condition_len = d.at("condition_len").get<int>();
    if (d.contains("prediction_len")) rc.prediction_len = d.at("prediction_len").get<int>();
  }
  if (j.contains("model")) rc.model = ModelConfig::from_json(j.at("model"));
  if (j.contains("train")) rc.train = TrainConfig::from_json(j.at("train"));
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

void write_json_file(const fs::path& file, const json& j) {
  if (!file.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  std::ofstream os(file);
  if (!os) throw IoError("cannot write " + file.string());
  os << j.dump(2) << "\n";
}

void require_empty_or_force(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw UsageError("output directory '" + dir.string() +
                     "' is not empty (use --force to overwrite)");
  }
}

json metrics_json(const Metrics& m, const json& config_echo, std::uint64_t seed) {
  return json{{"mse", m.mse},
              {"mae", m.mae},
              {"seed", seed},
              {"tool_version", kToolVersion},
              {"config", config_echo}};
}

// Expands one root seed into the per-domain seeds used by a subcommand.
std::uint64_t domain_seed(std::uint64_t root, std::string_view domain) {
  return Rng(root).fork(domain).seed();
}

int cmd_generate(RunConfig rc, const std::string& out, std::uint64_t seed, bool force) {
  rc.sim.seed = seed;
  fs::path dir(out);
  require_empty_or_force(dir, force);

  DatasetSplit ds;
  ds.condition_len = rc.condition_len;
  ds.prediction_len = rc.prediction_len;
  auto generate_split = [&](const char* name, std::size_t count) {
    SimConfig cfg = rc.sim;
    cfg.seed = domain_seed(seed, std::string("datagen.") + name);
    TrajectorySet set = simulate(cfg, count);
    set.split = name;
    return set;
  };
  ds.train = generate_split("train", rc.train_samples);
  ds.valid = generate_split("valid", rc.valid_samples);
  ds.test = generate_split("test", rc.test_samples);
  write_dataset(ds, dir);

  std::cout << "wrote " << system_name(rc.sim.system) << " dataset to " << dir.string()
            << ": S=" << rc.train_samples << "/" << rc.valid_samples << "/"
            << rc.test_samples << " T=" << rc.sim.n_timesteps
            << " N=" << rc.sim.n_particles << " d=4\n";
  return 0;
}

int cmd_train(RunConfig rc, const std::string& data_dir, const std::string& out,
              std::uint64_t seed, const std::string& variant_name_str, bool force) {
  rc.train.seed = seed;
  const Variant variant = variant_from_name(variant_name_str);
  const ModelConfig mcfg = make_variant(rc.model, variant);

  fs::path dir(out);
  if (fs::exists(dir / "checkpoint.json") && !force) {
    throw UsageError("checkpoint already exists in '" + dir.string() + "' (use --force)");
  }
  DatasetSplit data = load_dataset(data_dir);
  TrainResult result = train(data, mcfg, rc.train);

  std::error_code ec;
  fs::create_directories(dir, ec);
  save_checkpoint(result.model, dir / "checkpoint");
  write_loss_curve_csv(dir / "loss_curve.csv", result.curve);

  Metrics test = evaluate(result.model, data, "test", data.prediction_len, rc.train);
  Metrics baseline = copy_last_baseline(data, "test", data.prediction_len);
  json echo = run_config_to_json(rc);
  echo["model"] = mcfg.to_json();
  echo["variant"] = variant_name(variant);
  json mj = metrics_json(test, echo, seed);
  mj["pred_len"] = data.prediction_len;
  mj["best_epoch"] = result.best_epoch;
  mj["epochs_run"] = result.epochs_run;
  mj["best_valid_mse"] = result.best_valid_mse;
  mj["baseline_copy_last"] = {{"mse", baseline.mse}, {"mae", baseline.mae}};
  write_json_file(dir / "metrics.json", mj);

  std::cout << "trained " << variant_name(variant) << ": test mse=" << test.mse
            << " mae=" << test.mae << " (copy-last mse=" << baseline.mse << ") in "
            << result.epochs_run << " epochs\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, int pred_len,
             const std::string& out, int jobs) {
  TiOdeModel model = load_checkpoint(ckpt);
  DatasetSplit data = load_dataset(data_dir);
  TrainConfig tcfg;
  tcfg.jobs = jobs;
  Metrics m = evaluate(model, data, "test", pred_len, tcfg);
  json echo = model.config.to_json();
  json mj = metrics_json(m, echo, 0);
  mj["pred_len"] = pred_len;
  Metrics baseline = copy_last_baseline(data, "test", pred_len);
  mj["baseline_copy_last"] = {{"mse", baseline.mse}, {"mae", baseline.mae}};
  write_json_file(fs::path(out) / "metrics.json", mj);
  std::cout << "eval pred_len=" << pred_len << ": mse=" << m.mse << " mae=" << m.mae << "\n";
  return 0;
}

int cmd_robustness(const std::string& ckpt, const std::string& unified_ckpt,
                   const std::string& data_dir, RobustnessConfig rcfg,
                   const std::string& out, std::uint64_t seed) {
  rcfg.seed = seed;
  TiOdeModel model = load_checkpoint(ckpt);
  TiOdeModel unified = load_checkpoint(unified_ckpt);
  DatasetSplit data = load_dataset(data_dir);
  TrainConfig tcfg;
  std::vector<std::pair<std::string, const TiOdeModel*>> models = {
      {"ti_ode", &model}, {"unified", &unified}};
  RobustnessReport report = robustness_experiment(models, data, rcfg, tcfg);

  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_robustness_csv(dir / "robustness.csv", report);
  json rj{{"noise", rcfg.noise},
          {"horizon", rcfg.horizon},
          {"kind", noise_kind_name(rcfg.kind)},
          {"seed", seed},
          {"tool_version", kToolVersion},
          {"config", rcfg.to_json()}};
  for (const auto& s : report.series) {
    rj["cumulative_latent_error"][s.name] = s.cumulative;
  }
  write_json_file(dir / "robustness.json", rj);
  std::cout << "robustness noise=" << rcfg.noise << " horizon=" << rcfg.horizon;
  for (const auto& s : report.series) {
    std::cout << " cum_" << s.name << "=" << s.cumulative;
  }
  std::cout << "\n";
  return 0;
}

int cmd_diagnose(const std::string& ckpt, const std::string& unified_ckpt,
                 const std::string& data_dir, std::size_t probes, const std::string& out,
                 std::uint64_t seed, bool check_lyapunov) {
  TiOdeModel model = load_checkpoint(ckpt);
  DatasetSplit data = load_dataset(data_dir);
  TrainConfig tcfg;
  DiagnosticConfig dcfg;
  dcfg.probe_count = probes;
  dcfg.seed = seed;

  std::optional<TiOdeModel> unified;
  if (!unified_ckpt.empty()) unified = load_checkpoint(unified_ckpt);

  const int horizon = 36;
  dcfg.max_time = horizon * model.config.time_scale;
  std::vector<Tensor> states = collect_latent_states(model, data, "test", horizon, tcfg);
  DiagnosticReport report =
      lipschitz_diagnostic(model, states, dcfg, unified ? &*unified : nullptr);

  json dj = report.to_json();
  dj["tool_version"] = kToolVersion;
  dj["seed"] = seed;
  dj["config"] = model.config.to_json();

  if (check_lyapunov && unified) {
    RobustnessConfig rcfg;
    rcfg.seed = seed;
    std::vector<std::pair<std::string, const TiOdeModel*>> models = {
        {"ti_ode", &model}, {"unified", &*unified}};
    RobustnessReport rob = robustness_experiment(models, data, rcfg, tcfg);
    LyapunovCheck check =
        empirical_lyapunov_check(model, rob.series.front().trajectories, report);
    dj["lyapunov_check"] = {{"pass", check.pass},
                            {"max_violation", check.max_violation},
                            {"min_margin", check.min_margin},
                            {"steps_checked", check.steps_checked}};
  }
  fs::path dir(out);
  write_json_file(dir / "diagnostic.json", dj);
  std::cout << "diagnostic: L_a=" << report.l_a << " sum_L_k=" << report.sum_l_k;
  if (report.l_r_unified) {
    std::cout << " L_r=" << *report.l_r_unified << " verdict="
              << (*report.verdict ? "holds" : "violated");
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"TI-ODE: time-varying interaction graph ODE forecaster"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int jobs = 1;
  bool force = false;
  app.add_option("--config", config_path, "JSON run configuration (flags override)");
  app.add_option("--seed", seed, "root seed; all randomness derives from it");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "parallel batch workers");
  app.add_flag("--force", force, "overwrite existing outputs");

  // generate
  auto* gen = app.add_subcommand("generate", "simulate a particle dataset");
  std::string system = "springs";
  std::size_t train_samples = 0, valid_samples = 0, test_samples = 0;
  int particles = 0, timesteps = 0, cond_len = 0, pred_len = 0;
  double interaction_prob = -1.0, box = 0.0, dt = 0.0, damping = -1.0, vel_std = -1.0;
  int stride = 0;
  gen->add_option("--system", system, "springs|charged");
  gen->add_option("--train-samples", train_samples);
  gen->add_option("--valid-samples", valid_samples);
  gen->add_option("--test-samples", test_samples);
  gen->add_option("--samples", train_samples, "alias for --train-samples");
  gen->add_option("--particles", particles);
  gen->add_option("--timesteps", timesteps);
  gen->add_option("--stride", stride);
  gen->add_option("--dt", dt);
  gen->add_option("--interaction-prob", interaction_prob);
  gen->add_option("--box", box);
  gen->add_option("--damping", damping);
  gen->add_option("--vel-std", vel_std);
  gen->add_option("--cond", cond_len);
  gen->add_option("--pred", pred_len);

  // shared train/ablate options
  std::string data_dir, variant = "full";
  int epochs = 0, batch = 0, patience = 0;
  double lr = -1.0, solver_step = 0.0, dropout = -1.0, sigma_c2 = 0.0;
  std::string solver_method, mask_mode;
  double time_scale = 0.0;
  int d_hid = 0, d_z = 0, k_basis = 0, k_rand = -1;
  int basis_hidden = 0, random_hidden = 0, weight_hidden = 0, agg_hidden = 0, dec_hidden = 0;
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "dataset directory")->required();
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch", batch);
    cmd->add_option("--lr", lr);
    cmd->add_option("--patience", patience);
    cmd->add_option("--solver", solver_method, "euler|rk4");
    cmd->add_option("--step", solver_step, "solver sub-step");
    cmd->add_option("--d-hid", d_hid);
    cmd->add_option("--d-z", d_z);
    cmd->add_option("--k-basis", k_basis);
    cmd->add_option("--k-rand", k_rand);
    cmd->add_option("--basis-hidden", basis_hidden);
    cmd->add_option("--random-hidden", random_hidden);
    cmd->add_option("--weight-hidden", weight_hidden);
    cmd->add_option("--agg-hidden", agg_hidden);
    cmd->add_option("--dec-hidden", dec_hidden);
    cmd->add_option("--dropout", dropout);
    cmd->add_option("--sigma-c2", sigma_c2);
    cmd->add_option("--time-scale", time_scale, "latent time units per observation step");
    cmd->add_option("--mask", mask_mode, "adjacency|full");
  };
  auto* tr = app.add_subcommand("train", "train a model end to end");
  add_train_options(tr);
  tr->add_option("--variant", variant, "full|no-w|no-r|no-o|unified");

  auto* ab = app.add_subcommand("ablate", "train an ablation variant");
  add_train_options(ab);
  ab->add_option("--variant", variant, "no-w|no-r|no-o")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt, unified_ckpt;
  int eval_pred_len = 12;
  ev->add_option("--checkpoint", ckpt, "checkpoint prefix")->required();
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--pred-len", eval_pred_len, "12 or 24");

  // robustness
  auto* rb = app.add_subcommand("robustness", "perturbation-growth experiment");
  double noise = 0.01;
  int horizon = 36, rob_samples = 16;
  std::string noise_kind = "fixed";
  rb->add_option("--checkpoint", ckpt)->required();
  rb->add_option("--unified-checkpoint", unified_ckpt)->required();
  rb->add_option("--data", data_dir)->required();
  rb->add_option("--noise", noise);
  rb->add_option("--horizon", horizon);
  rb->add_option("--kind", noise_kind, "fixed|uniform|gaussian");
  rb->add_option("--samples", rob_samples);

  // diagnose
  auto* dg = app.add_subcommand("diagnose", "Lipschitz constants and robustness verdict");
  std::size_t probes = 4096;
  bool check_lyapunov = false;
  dg->add_option("--checkpoint", ckpt)->required();
  dg->add_option("--data", data_dir)->required();
  dg->add_option("--unified-checkpoint", unified_ckpt);
  dg->add_option("--probes", probes);
  dg->add_flag("--check-lyapunov", check_lyapunov);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig rc = load_run_config(config_path);
    // Flags override config-file values.
    if (gen->parsed()) {
      if (gen->count("--system")) rc.sim.system = system_from_name(system);
      if (gen->count("--train-samples") || gen->count("--samples")) {
        rc.train_samples = train_samples;
      }
      if (gen->count("--valid-samples")) rc.valid_samples = valid_samples;
      if (gen->count("--test-samples")) rc.test_samples = test_samples;
      if (gen->count("--particles")) rc.sim.n_particles = particles;
      if (gen->count("--timesteps")) rc.sim.n_timesteps = timesteps;
      if (gen->count("--stride")) rc.sim.sample_stride = stride;
      if (gen->count("--dt")) rc.sim.integrator_step = dt;
      if (gen->count("--interaction-prob")) rc.sim.interaction_prob = interaction_prob;
      if (gen->count("--box")) rc.sim.box_half_width = box;
      if (gen->count("--damping")) rc.sim.damping = damping;
      if (gen->count("--vel-std")) rc.sim.vel_std = vel_std;
      if (gen->count("--cond")) rc.condition_len = cond_len;
      if (gen->count("--pred")) rc.prediction_len = pred_len;
      return cmd_generate(rc, out_dir, seed, force);
    }
    if (tr->parsed() || ab->parsed()) {
      CLI::App* cmd = tr->parsed() ? tr : ab;
      if (cmd->count("--epochs")) rc.train.epochs = epochs;
      if (cmd->count("--batch")) rc.train.batch_size = batch;
      if (cmd->count("--lr")) rc.train.learning_rate = lr;
      if (cmd->count("--patience")) rc.train.patience = patience;
      if (cmd->count("--solver")) rc.train.method = solver_method_from_name(solver_method);
      if (cmd->count("--step")) rc.train.solver_step = solver_step;
      if (cmd->count("--d-hid")) rc.model.d_hid = static_cast<std::size_t>(d_hid);
      if (cmd->count("--d-z")) rc.model.d_z = static_cast<std::size_t>(d_z);
      if (cmd->count("--k-basis")) rc.model.k_basis = static_cast<std::size_t>(k_basis);
      if (cmd->count("--k-rand")) rc.model.k_rand = static_cast<std::size_t>(k_rand);
      if (cmd->count("--basis-hidden")) {
        rc.model.basis_hidden = static_cast<std::size_t>(basis_hidden);
      }
      if (cmd->count("--random-hidden")) {
        rc.model.random_hidden = static_cast<std::size_t>(random_hidden);
      }
      if (cmd->count("--weight-hidden")) {
        rc.model.weight_hidden = static_cast<std::size_t>(weight_hidden);
      }
      if (cmd->count("--agg-hidden")) {
        rc.model.agg_hidden = static_cast<std::size_t>(agg_hidden);
      }
      if (cmd->count("--dec-hidden")) {
        rc.model.dec_hidden = static_cast<std::size_t>(dec_hidden);
      }
      if (cmd->count("--dropout")) rc.model.dropout = dropout;
      if (cmd->count("--sigma-c2")) rc.model.sigma_c2 = sigma_c2;
      if (cmd->count("--time-scale")) rc.model.time_scale = time_scale;
      if (cmd->count("--mask")) rc.model.mask = mask_mode_from_name(mask_mode);
      rc.train.jobs = jobs;
      if (ab->parsed()) {
        const Variant v = variant_from_name(variant);
        if (v != Variant::kNoW && v != Variant::kNoR && v != Variant::kNoO) {
          throw UsageError("ablate: variant must be one of no-w|no-r|no-o");
        }
      }
      return cmd_train(rc, data_dir, out_dir, seed, variant, force);
    }
    if (ev->parsed()) return cmd_eval(ckpt, data_dir, eval_pred_len, out_dir, jobs);
    if (rb->parsed()) {
      RobustnessConfig rcfg;
      rcfg.noise = noise;
      rcfg.horizon = horizon;
      rcfg.kind = noise_kind_from_name(noise_kind);
      rcfg.max_samples = rob_samples;
      return cmd_robustness(ckpt, unified_ckpt, data_dir, rcfg, out_dir, seed);
    }
    if (dg->parsed()) {
      return cmd_diagnose(ckpt, unified_ckpt, data_dir, probes, out_dir, seed,
                          check_lyapunov);
    }
    std::cerr << "usage error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tiode::cli
