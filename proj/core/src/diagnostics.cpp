#include "tiode/diagnostics.hpp"

#include <cmath>

#include "tiode/encoding.hpp"
#include "tiode/errors.hpp"
#include "tiode/spectral.hpp"

namespace tiode {

using nlohmann::json;

json DiagnosticReport::to_json() const {
  json basis_j = json::array();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    basis_j.push_back({{"k", k},
                       {"L_r_k", basis[k].l_r},
                       {"L_w_k", basis[k].l_w},
                       {"C_r_k", basis[k].c_r},
                       {"C_w_k", basis[k].c_w},
                       {"L_k", basis[k].l_k},
                       {"alpha_k", basis[k].alpha}});
  }
  json j{{"n_nodes", n_nodes},
         {"d_z", d_z},
         {"L_a", l_a},
         {"basis", basis_j},
         {"sum_L_k", sum_l_k},
         {"sum_alpha", sum_alpha},
         {"probe_count", probe_count},
         {"probe_box_lo", probe_lo},
         {"probe_box_hi", probe_hi}};
  if (l_r_unified) j["L_r_unified"] = *l_r_unified;
  if (verdict) j["verdict_sum_L_k_le_L_r"] = *verdict;
  if (!note.empty()) j["note"] = note;
  return j;
}

std::vector<Tensor> collect_latent_states(const TiOdeModel& model, const DatasetSplit& data,
                                          const std::string& split, int horizon,
                                          const TrainConfig& tcfg, int max_samples) {
  const TrajectorySet& set = data.split(split);
  if (set.n_samples() == 0) throw UsageError("collect_latent_states: empty split");
  const std::size_t n_samples =
      std::min<std::size_t>(set.n_samples(), static_cast<std::size_t>(max_samples));
  const SolverConfig solver = make_solver_config(tcfg, horizon, model.config.time_scale);
  std::vector<Tensor> states;
  for (std::size_t s = 0; s < n_samples; ++s) {
    SampleView view =
        make_sample_view(data, set, s, model.config, data.condition_len, 0);
    Tape tape;
    EncoderOutput enc = encode_window(tape, model.params, model.config.encoder(),
                                      view.enc_index, view.window_feats);
    int z0 = sample_initial_state(tape, enc.refined,
                                  Tensor::zeros({view.n_nodes, model.config.d_z}));
    const DynamicsConfig dyn = model.config.dynamics();
    FieldFn field = [&](Tape& t, int z, double time) {
      return evolution_field(t, model.params, dyn, view.pair_index, z, time);
    };
    states.push_back(tape.value(z0));
    for (int node : ode_solve(tape, field, z0, solver)) {
      states.push_back(tape.value(node));
    }
  }
  return states;
}

namespace {

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(t[i]));
  return m;
}

Tensor add_te(const Tensor& z, double t) {
  Tensor te = time_encoding(t, z.cols());
  Tensor out = z;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += te[c];
  }
  return out;
}

}  // namespace

DiagnosticReport lipschitz_diagnostic(const TiOdeModel& model,
                                      const std::vector<Tensor>& latent_states,
                                      const DiagnosticConfig& dcfg,
                                      const TiOdeModel* unified_reference) {
  if (latent_states.empty()) {
    throw UsageError("lipschitz_diagnostic: need at least one latent state");
  }
  const DynamicsConfig dyn = model.config.dynamics();
  if (dyn.mode == FieldMode::kUnified) {
    throw UsageError("lipschitz_diagnostic: run on a basis-decomposed model");
  }
  const std::size_t d_z = model.config.d_z;
  const std::size_t n_nodes = latent_states.front().rows();

  DiagnosticReport report;
  report.n_nodes = n_nodes;
  report.d_z = d_z;
  report.l_a = fnn_lipschitz_bound(fnn_view(model.params, dyn.agg_spec()));

  // Probe box: realized rollout states inflated by margin and scale.
  std::vector<double> lo(d_z, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d_z, -std::numeric_limits<double>::infinity());
  for (const Tensor& z : latent_states) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
      for (std::size_t c = 0; c < d_z; ++c) {
        lo[c] = std::min(lo[c], z.at(r, c));
        hi[c] = std::max(hi[c], z.at(r, c));
      }
    }
  }
  for (std::size_t c = 0; c < d_z; ++c) {
    const double mid = 0.5 * (lo[c] + hi[c]);
    const double half = 0.5 * (hi[c] - lo[c]) * dcfg.box_scale + dcfg.box_margin;
    lo[c] = mid - half;
    hi[c] = mid + half;
  }
  report.probe_lo = lo;
  report.probe_hi = hi;

  // Probe points: realized states plus uniform draws from the box.
  std::vector<Tensor> probes;
  for (const Tensor& z : latent_states) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
      Tensor row = Tensor::zeros({1, d_z});
      for (std::size_t c = 0; c < d_z; ++c) row[c] = z.at(r, c);
      probes.push_back(std::move(row));
    }
  }
  Rng rng = Rng(dcfg.seed).fork("diagnostic");
  for (std::size_t p = 0; p < dcfg.probe_count; ++p) {
    Tensor row = Tensor::zeros({1, d_z});
    for (std::size_t c = 0; c < d_z; ++c) row[c] = rng.uniform(lo[c], hi[c]);
    probes.push_back(std::move(row));
  }
  report.probe_count = probes.size();

  const std::size_t k_total = dyn.effective_k();
  report.basis.resize(k_total);
  for (std::size_t k = 0; k < k_total; ++k) {
    BasisConstants& bc = report.basis[k];
    FnnParams basis = fnn_view(model.params, dyn.basis_spec(k));
    FnnParams recv = fnn_view(model.params, dyn.weight_recv_spec(k));
    FnnParams send = fnn_view(model.params, dyn.weight_send_spec(k));
    bc.l_r = fnn_lipschitz_bound(basis);
    bc.l_w = std::max(fnn_lipschitz_bound(recv), fnn_lipschitz_bound(send));

    // Empirical sup norms over probe pairs (basis) and gated probes.
    Rng pair_rng = rng.fork("pairs").fork(k);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const Tensor& zi = probes[p];
      const Tensor& zj = probes[pair_rng.uniform_int(probes.size())];
      Tensor cat = Tensor::zeros({1, 2 * d_z});
      std::copy_n(zi.data(), d_z, cat.data());
      std::copy_n(zj.data(), d_z, cat.data() + d_z);
      bc.c_r = std::max(bc.c_r, max_abs(fnn_forward(basis, cat)));

      const double t = pair_rng.uniform(0.0, dcfg.max_time);
      Tensor z_t = add_te(zi, t);
      const double w_recv = max_abs(fnn_forward(recv, z_t));
      const double w_send = max_abs(fnn_forward(send, z_t));
      bc.c_w = std::max(bc.c_w, w_recv * w_send);
    }
    const double d = static_cast<double>(d_z);
    bc.l_k = d * bc.c_r * bc.l_w + std::sqrt(d) * bc.c_w * bc.l_r;
    bc.alpha = 2.0 * static_cast<double>(n_nodes) * report.l_a * bc.l_k;
    report.sum_l_k += bc.l_k;
    report.sum_alpha += bc.alpha;
  }

  if (unified_reference) {
    if (unified_reference->config.mode != FieldMode::kUnified) {
      throw UsageError("lipschitz_diagnostic: reference model must be unified");
    }
    report.l_r_unified = fnn_lipschitz_bound(
        fnn_view(unified_reference->params, unified_reference->config.dynamics().unified_spec()));
    report.verdict = report.sum_l_k <= *report.l_r_unified;
  } else {
    report.note = "verdict omitted: no unified reference model supplied";
  }
  return report;
}

LyapunovCheck empirical_lyapunov_check(const TiOdeModel& model,
                                       const std::vector<TrajectoryPair>& trajectories,
                                       const DiagnosticReport& report, double slack) {
  LyapunovCheck check;
  check.min_margin = std::numeric_limits<double>::infinity();
  const DynamicsConfig dyn = model.config.dynamics();

  for (const TrajectoryPair& pair : trajectories) {
    if (pair.clean.size() != pair.perturbed.size() ||
        pair.clean.size() != pair.times.size()) {
      throw UsageError("empirical_lyapunov_check: malformed trajectory pair");
    }
    for (std::size_t t = 0; t < pair.clean.size(); ++t) {
      const Tensor& z = pair.clean[t];
      const Tensor& zp = pair.perturbed[t];
      const double n = static_cast<double>(z.rows());

      Tensor delta = field_interaction_plain(model.params, dyn, pair.pairs, zp, pair.times[t]);
      Tensor base = field_interaction_plain(model.params, dyn, pair.pairs, z, pair.times[t]);

      double dv = 0.0, err_sq = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double e = zp[i] - z[i];
        dv += e * (delta[i] - base[i]);
        err_sq += e * e;
      }
      const double bound = err_sq * std::sqrt(n) * report.sum_alpha;
      const double margin = bound + slack - dv;
      check.min_margin = std::min(check.min_margin, bound - dv);
      check.max_violation = std::max(check.max_violation, dv - bound);
      if (margin < 0.0) check.pass = false;
      ++check.steps_checked;
    }
  }
  if (check.steps_checked == 0) check.min_margin = 0.0;
  return check;
}

}  // namespace tiode
