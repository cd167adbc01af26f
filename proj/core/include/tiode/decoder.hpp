#pragma once

#include "tiode/fnn.hpp"
#include "tiode/params.hpp"
#include "tiode/rng.hpp"
#include "tiode/tape.hpp"

namespace tiode {

// Shared per-node decoder from latent states to observation space.
struct DecoderConfig {
  std::size_t d_z = 16;
  std::size_t feat_dim = 4;
  std::size_t hidden = 64;
  double sigma_c2 = 1.0;  // fixed observation-noise variance

  FnnSpec spec() const;
  void validate() const;
};

void register_decoder(ParamStore& store, const DecoderConfig& cfg, Rng& rng);

// x-hat rows = decoder(z rows); works for [N, d_z] or stacked [P*N, d_z].
int decode(Tape& tape, const ParamStore& store, const DecoderConfig& cfg, int z);
Tensor decode_plain(const ParamStore& store, const DecoderConfig& cfg, const Tensor& z);

// Closed-form KL(N(mean, std^2) || N(0, I)) summed over rows and columns.
int gaussian_kl(Tape& tape, int mean, int std);
double gaussian_kl_value(const Tensor& mean, const Tensor& std);

struct LossNodes {
  int recon = -1;
  int kl = -1;
  int total = -1;  // recon + kl (negated ELBO)
};

struct LossBreakdown {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

// recon = sum of squared errors / (2 sigma_c^2); truth is a constant.
LossNodes elbo_loss(Tape& tape, int predictions, const Tensor& truth, int post_mean,
                    int post_std, double sigma_c2);
LossBreakdown loss_values(const Tape& tape, const LossNodes& nodes);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

// Mean squared / absolute error over every entry; shapes must match.
Metrics metrics(const Tensor& truth, const Tensor& pred);

}  // namespace tiode
