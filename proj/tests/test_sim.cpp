#include <doctest.h>

#include <cmath>

#include "tiode/errors.hpp"
#include "tiode/sim.hpp"

using namespace tiode;

namespace {

Tensor frame_of(const Tensor& traj, std::size_t t) {
  const std::size_t n = traj.extent(1);
  Tensor f = Tensor::zeros({n, 4});
  std::copy_n(traj.data() + t * n * 4, n * 4, f.data());
  return f;
}

}  // namespace

TEST_CASE("no forces means constant positions") {
  SimConfig cfg;
  cfg.system = System::kSprings;
  cfg.n_particles = 3;
  cfg.n_timesteps = 5;
  cfg.sample_stride = 10;
  RolloutInput init;
  init.pos = Tensor::from_data({3, 2}, {0.0, 0.0, 1.0, 1.0, -2.0, 0.5});
  init.vel = Tensor::zeros({3, 2});
  init.adjacency = Tensor::zeros({3, 3});  // no springs
  Tensor traj = simulate_rollout(cfg, init);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(frame_of(traj, t).bitwise_equal(frame_of(traj, 0)));
  }
}

TEST_CASE("all-zero charges keep particles still") {
  SimConfig cfg;
  cfg.system = System::kCharged;
  cfg.n_particles = 2;
  cfg.n_timesteps = 4;
  cfg.sample_stride = 25;
  RolloutInput init;
  init.pos = Tensor::from_data({2, 2}, {1.0, 0.0, -1.0, 0.0});
  init.vel = Tensor::zeros({2, 2});
  init.adjacency = Tensor::zeros({2, 2});
  init.charges = {0.0, 0.0};
  Tensor traj = simulate_rollout(cfg, init);
  CHECK(frame_of(traj, 3).bitwise_equal(frame_of(traj, 0)));
}

TEST_CASE("spring momentum is conserved without walls") {
  SimConfig cfg;
  cfg.system = System::kSprings;
  cfg.n_particles = 4;
  cfg.n_timesteps = 101;
  cfg.sample_stride = 100;  // 10^4 integrator steps in total
  cfg.box_half_width = 50.0;
  RolloutInput init;
  init.pos = Tensor::from_data({4, 2}, {0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  init.vel = Tensor::from_data({4, 2}, {0.1, -0.05, -0.1, 0.05, 0.05, 0.1, -0.05, -0.1});
  init.adjacency = Tensor::from_data({4, 4}, {0, 1, 1, 0, 1, 0, 0, 1,
                                              1, 0, 0, 1, 0, 1, 1, 0});
  Tensor traj = simulate_rollout(cfg, init);
  const double p0 = total_momentum_norm(frame_of(traj, 0));
  for (std::size_t t = 0; t < traj.extent(0); ++t) {
    CHECK(std::abs(total_momentum_norm(frame_of(traj, t)) - p0) < 1e-10);
  }
}

TEST_CASE("two-particle spring conserves energy under leapfrog") {
  SimConfig cfg;
  cfg.system = System::kSprings;
  cfg.n_particles = 2;
  cfg.n_timesteps = 101;   // 100 frames x 100 steps = 10^4 steps
  cfg.sample_stride = 100;
  cfg.integrator_step = 1e-3;
  cfg.box_half_width = 50.0;
  RolloutInput init;
  init.pos = Tensor::from_data({2, 2}, {0.5, 0.0, -0.5, 0.0});
  init.vel = Tensor::from_data({2, 2}, {0.0, 0.1, 0.0, -0.1});
  init.adjacency = Tensor::from_data({2, 2}, {0, 1, 1, 0});
  Tensor traj = simulate_rollout(cfg, init);
  const double e0 = spring_energy(cfg, frame_of(traj, 0), init.adjacency);
  for (std::size_t t = 0; t < traj.extent(0); ++t) {
    const double e = spring_energy(cfg, frame_of(traj, t), init.adjacency);
    CHECK(std::abs(e - e0) / e0 < 1e-3);
  }
}

TEST_CASE("charged pair with equal charges stays mirror symmetric") {
  SimConfig cfg;
  cfg.system = System::kCharged;
  cfg.n_particles = 2;
  cfg.n_timesteps = 20;
  cfg.sample_stride = 50;
  cfg.box_half_width = 100.0;
  RolloutInput init;
  init.pos = Tensor::from_data({2, 2}, {1.0, 0.0, -1.0, 0.0});
  init.vel = Tensor::from_data({2, 2}, {0.0, 0.2, 0.0, -0.2});
  init.adjacency = Tensor::from_data({2, 2}, {0, 1, 1, 0});
  init.charges = {1.0, 1.0};
  Tensor traj = simulate_rollout(cfg, init);
  for (std::size_t t = 0; t < traj.extent(0); ++t) {
    Tensor f = frame_of(traj, t);
    CHECK(f.at(0, 0) == doctest::Approx(-f.at(1, 0)).epsilon(1e-12));
    CHECK(f.at(0, 1) == doctest::Approx(-f.at(1, 1)).epsilon(1e-12));
  }
}

TEST_CASE("charged momentum conserved when no walls are hit") {
  SimConfig cfg;
  cfg.system = System::kCharged;
  cfg.n_particles = 3;
  cfg.n_timesteps = 40;
  cfg.sample_stride = 100;
  cfg.box_half_width = 1000.0;
  RolloutInput init;
  init.pos = Tensor::from_data({3, 2}, {1.0, 0.0, -1.0, 0.2, 0.0, 1.5});
  init.vel = Tensor::from_data({3, 2}, {0.05, 0.0, -0.02, 0.04, 0.0, -0.06});
  init.adjacency = Tensor::from_data({3, 3}, {0, -1, 1, -1, 0, -1, 1, -1, 0});
  init.charges = {1.0, -1.0, 1.0};
  Tensor traj = simulate_rollout(cfg, init);
  const double p0 = total_momentum_norm(frame_of(traj, 0));
  for (std::size_t t = 0; t < traj.extent(0); ++t) {
    CHECK(std::abs(total_momentum_norm(frame_of(traj, t)) - p0) < 1e-10);
  }
}

TEST_CASE("batched generation is deterministic and structurally valid") {
  SimConfig cfg;
  cfg.system = System::kSprings;
  cfg.n_particles = 5;
  cfg.n_timesteps = 8;
  cfg.sample_stride = 20;
  cfg.seed = 99;
  TrajectorySet a = simulate_springs(cfg, 6);
  TrajectorySet b = simulate_springs(cfg, 6);
  CHECK(a.features.bitwise_equal(b.features));
  CHECK(a.adjacency.bitwise_equal(b.adjacency));
  a.validate();  // symmetry + zero diagonal enforced here

  cfg.seed = 100;
  TrajectorySet c = simulate_springs(cfg, 6);
  CHECK(!a.features.bitwise_equal(c.features));
}

TEST_CASE("charged generation produces sign-pattern adjacency") {
  SimConfig cfg;
  cfg.system = System::kCharged;
  cfg.n_particles = 4;
  cfg.n_timesteps = 4;
  cfg.sample_stride = 10;
  cfg.seed = 3;
  TrajectorySet set = simulate_charged(cfg, 3);
  set.validate();
  for (std::size_t i = 0; i < set.adjacency.size(); ++i) {
    const double v = set.adjacency[i];
    CHECK((v == 0.0 || v == 1.0 || v == -1.0));
  }
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.n_particles = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_particles = 2;
  cfg.integrator_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.integrator_step = 1e-3;
  cfg.sample_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
