#include "tiode/sim.hpp"

#include <cmath>

#include "tiode/errors.hpp"
#include "tiode/rng.hpp"

namespace tiode {

const char* system_name(System s) {
  return s == System::kSprings ? "springs" : "charged";
}

System system_from_name(const std::string& s) {
  if (s == "springs") return System::kSprings;
  if (s == "charged") return System::kCharged;
  throw ConfigError("unknown system '" + s + "' (expected springs|charged)");
}

void SimConfig::validate() const {
  if (n_particles < 2) throw ConfigError("SimConfig: n_particles must be >= 2");
  if (n_timesteps < 1) throw ConfigError("SimConfig: n_timesteps must be >= 1");
  if (sample_stride < 1) throw ConfigError("SimConfig: sample_stride must be >= 1");
  if (!(integrator_step > 0.0)) throw ConfigError("SimConfig: integrator_step must be > 0");
  if (!(interaction_prob >= 0.0 && interaction_prob <= 1.0)) {
    throw ConfigError("SimConfig: interaction_prob must be in [0,1]");
  }
  if (system == System::kCharged && charge_values.empty()) {
    throw ConfigError("SimConfig: charge_values must be non-empty for charged system");
  }
  if (!(box_half_width > 0.0)) throw ConfigError("SimConfig: box_half_width must be > 0");
  if (!(softening > 0.0)) throw ConfigError("SimConfig: softening must be > 0");
  if (damping < 0.0) throw ConfigError("SimConfig: damping must be >= 0");
}

Tensor TrajectorySet::adjacency_at(std::size_t s, std::size_t t) const {
  const std::size_t n = n_nodes();
  if (has_dynamic_adjacency()) {
    Tensor out = Tensor::zeros({n, n});
    std::copy_n(adjacency_dyn.data() + (s * n_steps() + t) * n * n, n * n, out.data());
    return out;
  }
  return static_adjacency(s);
}

Tensor TrajectorySet::static_adjacency(std::size_t s) const {
  const std::size_t n = n_nodes();
  Tensor out = Tensor::zeros({n, n});
  std::copy_n(adjacency.data() + s * n * n, n * n, out.data());
  return out;
}

Tensor TrajectorySet::frame(std::size_t s, std::size_t t) const {
  const std::size_t n = n_nodes(), d = feat_dim();
  Tensor out = Tensor::zeros({n, d});
  std::copy_n(features.data() + (s * n_steps() + t) * n * d, n * d, out.data());
  return out;
}

void TrajectorySet::validate() const {
  if (features.rank() != 4) throw ShapeError("TrajectorySet: features must be [S,T,N,d]");
  if (adjacency.rank() != 3) throw ShapeError("TrajectorySet: adjacency must be [S,N,N]");
  if (feat_dim() != 4) throw ShapeError("TrajectorySet: feature dimension must be 4");
  if (adjacency.extent(0) != n_samples() || adjacency.extent(1) != n_nodes() ||
      adjacency.extent(2) != n_nodes()) {
    throw ShapeError("TrajectorySet: adjacency shape mismatch");
  }
  if (!features.all_finite() || !adjacency.all_finite()) {
    throw ShapeError("TrajectorySet: non-finite values");
  }
  const std::size_t n = n_nodes();
  for (std::size_t s = 0; s < n_samples(); ++s) {
    const double* a = adjacency.data() + s * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i * n + i] != 0.0) throw ShapeError("TrajectorySet: adjacency diagonal must be 0");
      for (std::size_t j = i + 1; j < n; ++j) {
        if (a[i * n + j] != a[j * n + i]) {
          throw ShapeError("TrajectorySet: adjacency must be symmetric");
        }
      }
    }
  }
}

namespace {

// Pairwise forces accumulated antisymmetrically so equal-and-opposite
// contributions cancel exactly in floating point.
void accumulate_forces(const SimConfig& cfg, const std::vector<double>& px,
                       const std::vector<double>& py, const std::vector<double>& vx,
                       const std::vector<double>& vy, const Tensor& adj,
                       const std::vector<double>& charges, std::vector<double>& fx,
                       std::vector<double>& fy) {
  const int n = cfg.n_particles;
  std::fill(fx.begin(), fx.end(), 0.0);
  std::fill(fy.begin(), fy.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = px[i] - px[j];
      const double dy = py[i] - py[j];
      double gx = 0.0, gy = 0.0;  // force on i from j
      if (cfg.system == System::kSprings) {
        const double a = adj.at(i, j);
        if (a == 0.0) continue;
        gx = -cfg.spring_k * a * dx;
        gy = -cfg.spring_k * a * dy;
      } else {
        const double r = std::sqrt(dx * dx + dy * dy);
        const double r3 = std::max(r * r * r, cfg.softening * cfg.softening * cfg.softening);
        const double s = cfg.coulomb_c * charges[i] * charges[j] / r3;
        gx = s * dx;
        gy = s * dy;
      }
      fx[i] += gx;
      fy[i] += gy;
      fx[j] -= gx;
      fy[j] -= gy;
    }
  }
  if (cfg.damping > 0.0) {
    for (int i = 0; i < n; ++i) {
      fx[i] -= cfg.damping * vx[i];
      fy[i] -= cfg.damping * vy[i];
    }
  }
}

void reflect(double box, double& r, double& v) {
  // Elastic wall reflection; loop handles the (rare) multi-width overshoot.
  while (r > box || r < -box) {
    if (r > box) {
      r = 2.0 * box - r;
    } else {
      r = -2.0 * box - r;
    }
    v = -v;
  }
}

}  // namespace

Tensor simulate_rollout(const SimConfig& cfg, const RolloutInput& init) {
  cfg.validate();
  const int n = cfg.n_particles;
  const int t_len = cfg.n_timesteps;
  if (init.pos.rows() != static_cast<std::size_t>(n) || init.pos.cols() != 2 ||
      init.vel.rows() != static_cast<std::size_t>(n) || init.vel.cols() != 2) {
    throw ShapeError("simulate_rollout: pos/vel must be [N,2]");
  }
  if (cfg.system == System::kCharged &&
      init.charges.size() != static_cast<std::size_t>(n)) {
    throw ShapeError("simulate_rollout: charges must have one entry per particle");
  }

  std::vector<double> px(n), py(n), vx(n), vy(n), fx(n), fy(n);
  for (int i = 0; i < n; ++i) {
    px[i] = init.pos.at(i, 0);
    py[i] = init.pos.at(i, 1);
    vx[i] = init.vel.at(i, 0);
    vy[i] = init.vel.at(i, 1);
  }

  Tensor out = Tensor::zeros({static_cast<std::size_t>(t_len), static_cast<std::size_t>(n), 4});
  auto record = [&](int frame) {
    double* dst = out.data() + static_cast<std::size_t>(frame) * n * 4;
    for (int i = 0; i < n; ++i) {
      dst[i * 4 + 0] = px[i];
      dst[i * 4 + 1] = py[i];
      dst[i * 4 + 2] = vx[i];
      dst[i * 4 + 3] = vy[i];
    }
  };

  const double dt = cfg.integrator_step;
  record(0);
  accumulate_forces(cfg, px, py, vx, vy, init.adjacency, init.charges, fx, fy);
  for (int frame = 1; frame < t_len; ++frame) {
    for (int s = 0; s < cfg.sample_stride; ++s) {
      // Velocity-Verlet leapfrog: half kick, drift, recompute, half kick.
      for (int i = 0; i < n; ++i) {
        vx[i] += 0.5 * dt * fx[i];
        vy[i] += 0.5 * dt * fy[i];
        px[i] += dt * vx[i];
        py[i] += dt * vy[i];
        reflect(cfg.box_half_width, px[i], vx[i]);
        reflect(cfg.box_half_width, py[i], vy[i]);
      }
      accumulate_forces(cfg, px, py, vx, vy, init.adjacency, init.charges, fx, fy);
      for (int i = 0; i < n; ++i) {
        vx[i] += 0.5 * dt * fx[i];
        vy[i] += 0.5 * dt * fy[i];
      }
    }
    record(frame);
  }
  return out;
}

namespace {

TrajectorySet simulate_batch(const SimConfig& cfg, std::size_t n_samples) {
  cfg.validate();
  const std::size_t n = cfg.n_particles;
  TrajectorySet set;
  set.config = cfg;
  set.features = Tensor::zeros(
      {n_samples, static_cast<std::size_t>(cfg.n_timesteps), n, 4});
  set.adjacency = Tensor::zeros({n_samples, n, n});

  Rng root(cfg.seed);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng = root.fork(static_cast<std::uint64_t>(s));
    RolloutInput init;
    init.pos = Tensor::zeros({n, 2});
    init.vel = Tensor::zeros({n, 2});
    init.adjacency = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      init.pos.at(i, 0) = rng.uniform(-cfg.box_half_width, cfg.box_half_width);
      init.pos.at(i, 1) = rng.uniform(-cfg.box_half_width, cfg.box_half_width);
      init.vel.at(i, 0) = cfg.vel_std * rng.normal();
      init.vel.at(i, 1) = cfg.vel_std * rng.normal();
    }
    if (cfg.system == System::kSprings) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double a = (rng.uniform() < cfg.interaction_prob) ? 1.0 : 0.0;
          init.adjacency.at(i, j) = a;
          init.adjacency.at(j, i) = a;
        }
      }
    } else {
      init.charges.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        init.charges[i] =
            cfg.charge_values[rng.uniform_int(cfg.charge_values.size())];
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double a = init.charges[i] * init.charges[j];
          init.adjacency.at(i, j) = a;
          init.adjacency.at(j, i) = a;
        }
      }
    }

    Tensor traj = simulate_rollout(cfg, init);
    std::copy_n(traj.data(), traj.size(),
                set.features.data() + s * traj.size());
    std::copy_n(init.adjacency.data(), n * n, set.adjacency.data() + s * n * n);
  }
  set.validate();
  return set;
}

}  // namespace

TrajectorySet simulate_springs(const SimConfig& cfg, std::size_t n_samples) {
  if (cfg.system != System::kSprings) {
    throw ConfigError("simulate_springs: config system must be springs");
  }
  return simulate_batch(cfg, n_samples);
}

TrajectorySet simulate_charged(const SimConfig& cfg, std::size_t n_samples) {
  if (cfg.system != System::kCharged) {
    throw ConfigError("simulate_charged: config system must be charged");
  }
  return simulate_batch(cfg, n_samples);
}

TrajectorySet simulate(const SimConfig& cfg, std::size_t n_samples) {
  return simulate_batch(cfg, n_samples);
}

double total_momentum_norm(const Tensor& frame) {
  const std::size_t n = frame.extent(0);
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += frame[i * 4 + 2];
    sy += frame[i * 4 + 3];
  }
  return std::sqrt(sx * sx + sy * sy);
}

double spring_energy(const SimConfig& cfg, const Tensor& frame, const Tensor& adjacency) {
  const std::size_t n = frame.extent(0);
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = frame[i * 4 + 2], vy = frame[i * 4 + 3];
    e += 0.5 * (vx * vx + vy * vy);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = adjacency.at(i, j);
      if (a == 0.0) continue;
      const double dx = frame[i * 4 + 0] - frame[j * 4 + 0];
      const double dy = frame[i * 4 + 1] - frame[j * 4 + 1];
      e += 0.5 * cfg.spring_k * a * (dx * dx + dy * dy);
    }
  }
  return e;
}

}  // namespace tiode
