#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiode/tensor.hpp"

namespace tiode {

enum class System { kSprings, kCharged };

const char* system_name(System s);
System system_from_name(const std::string& s);

// Particle-simulation configuration. Node features are 2-D position plus
// 2-D velocity (d = 4).
struct SimConfig {
  System system = System::kSprings;
  int n_particles = 5;
  int n_timesteps = 48;       // recorded frames per sample
  int sample_stride = 100;    // integrator steps between frames
  double integrator_step = 1e-3;
  double interaction_prob = 0.5;             // spring wiring probability
  std::vector<double> charge_values = {-1.0, 1.0};
  double box_half_width = 5.0;
  double spring_k = 0.1;
  double coulomb_c = 1.0;
  double softening = 0.1;     // lower clamp on charged pair distance
  double damping = 0.0;
  double vel_std = 0.5;       // Gaussian initial velocity scale
  std::uint64_t seed = 0;

  void validate() const;
};

// Batched trajectories: features [S,T,N,4] and one static adjacency
// [S,N,N] per sample, symmetric with zero diagonal. adjacency_dyn is an
// optional [S,T,N,N] time-varying overlay loaded from disk when present;
// the generated systems never produce one.
struct TrajectorySet {
  Tensor features;
  Tensor adjacency;
  Tensor adjacency_dyn;
  SimConfig config;
  std::string split;

  bool has_dynamic_adjacency() const { return adjacency_dyn.rank() == 4; }
  // Adjacency of sample s at step t as [N,N] (falls back to the static one).
  Tensor adjacency_at(std::size_t s, std::size_t t) const;
  Tensor static_adjacency(std::size_t s) const;
  // Feature frame [N,d] of sample s at step t.
  Tensor frame(std::size_t s, std::size_t t) const;

  std::size_t n_samples() const { return features.rank() == 4 ? features.extent(0) : 0; }
  std::size_t n_steps() const { return features.extent(1); }
  std::size_t n_nodes() const { return features.extent(2); }
  std::size_t feat_dim() const { return features.extent(3); }
  void validate() const;
};

// One deterministic leapfrog rollout from explicit initial conditions.
// pos/vel are [N,2]; adjacency [N,N] (spring 0/1 weights or charge sign
// pattern); charges empty for springs. Records every sample_stride steps,
// starting at the initial state.
struct RolloutInput {
  Tensor pos;
  Tensor vel;
  Tensor adjacency;
  std::vector<double> charges;
};

Tensor simulate_rollout(const SimConfig& cfg, const RolloutInput& init);

// Sample initial conditions and wiring per cfg.seed and roll out
// n_samples independent trajectories (per-sample seeds are derived from
// cfg.seed by sample index).
TrajectorySet simulate_springs(const SimConfig& cfg, std::size_t n_samples = 1);
TrajectorySet simulate_charged(const SimConfig& cfg, std::size_t n_samples = 1);
TrajectorySet simulate(const SimConfig& cfg, std::size_t n_samples = 1);

// Instantaneous conserved quantities, for oracle tests.
double total_momentum_norm(const Tensor& frame);  // [N,4] -> |sum m v|
double spring_energy(const SimConfig& cfg, const Tensor& frame, const Tensor& adjacency);

}  // namespace tiode
