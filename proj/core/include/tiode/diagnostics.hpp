#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "tiode/experiments.hpp"
#include "tiode/model.hpp"

namespace tiode {

// Per-basis Lipschitz/bound constants backing the robustness condition.
struct BasisConstants {
  double l_r = 0.0;    // Lipschitz bound of the basis net
  double l_w = 0.0;    // Lipschitz bound of the gate nets (max of the pair)
  double c_r = 0.0;    // sup-norm of basis outputs over probes
  double c_w = 0.0;    // sup-norm of gate outputs over probes (<= 1)
  double l_k = 0.0;    // d*c_r*l_w + sqrt(d)*c_w*l_r
  double alpha = 0.0;  // 2*N*l_a*l_k
};

struct DiagnosticReport {
  std::size_t n_nodes = 0;
  std::size_t d_z = 0;
  double l_a = 0.0;  // aggregator Lipschitz bound
  std::vector<BasisConstants> basis;
  double sum_l_k = 0.0;
  double sum_alpha = 0.0;
  // Reference unified-model interaction bound and the robustness verdict
  // sum(L^k) <= L_r; absent when no reference model was supplied.
  std::optional<double> l_r_unified;
  std::optional<bool> verdict;
  std::string note;
  std::size_t probe_count = 0;
  std::vector<double> probe_lo, probe_hi;  // probe bounding box per dim

  nlohmann::json to_json() const;
};

struct DiagnosticConfig {
  std::size_t probe_count = 4096;
  double box_margin = 0.5;    // absolute inflation of the probe box
  double box_scale = 1.25;    // relative inflation around the box center
  double max_time = 36.0;     // gate-net time encodings are probed in [0, max_time]
  std::uint64_t seed = 0;
};

// Latent states realized by clean rollouts over the dataset split; these
// seed the probe box (and are themselves probe points).
std::vector<Tensor> collect_latent_states(const TiOdeModel& model, const DatasetSplit& data,
                                          const std::string& split, int horizon,
                                          const TrainConfig& tcfg, int max_samples = 16);

DiagnosticReport lipschitz_diagnostic(const TiOdeModel& model,
                                      const std::vector<Tensor>& latent_states,
                                      const DiagnosticConfig& dcfg,
                                      const TiOdeModel* unified_reference = nullptr);

struct LyapunovCheck {
  bool pass = true;
  double max_violation = 0.0;  // max over steps of dV/dt - bound
  double min_margin = 0.0;     // min over steps of bound - dV/dt
  std::size_t steps_checked = 0;
};

// Along clean/perturbed trajectory pairs, estimates dV/dt = <e, Delta>
// where Delta is the difference of the interaction terms, and checks it
// against ||e||^2 * sqrt(N) * sum(alpha_k) at every recorded step.
LyapunovCheck empirical_lyapunov_check(const TiOdeModel& model,
                                       const std::vector<TrajectoryPair>& trajectories,
                                       const DiagnosticReport& report, double slack = 1e-6);

}  // namespace tiode
