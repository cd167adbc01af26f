#include "tiode/decoder.hpp"

#include <cmath>

#include "tiode/errors.hpp"

namespace tiode {

FnnSpec DecoderConfig::spec() const {
  return {"dec", {d_z, hidden, feat_dim}, Activation::kRelu, Activation::kIdentity, 0.0, true};
}

void DecoderConfig::validate() const {
  if (!(sigma_c2 > 0.0)) throw ConfigError("DecoderConfig: sigma_c2 must be > 0");
  if (d_z == 0 || feat_dim == 0 || hidden == 0) {
    throw ConfigError("DecoderConfig: zero extent");
  }
}

void register_decoder(ParamStore& store, const DecoderConfig& cfg, Rng& rng) {
  cfg.validate();
  register_fnn(store, cfg.spec(), rng);
}

int decode(Tape& tape, const ParamStore& store, const DecoderConfig& cfg, int z) {
  return fnn_forward_tape(tape, store, cfg.spec(), z);
}

Tensor decode_plain(const ParamStore& store, const DecoderConfig& cfg, const Tensor& z) {
  return fnn_forward(fnn_view(store, cfg.spec()), z);
}

int gaussian_kl(Tape& tape, int mean, int std) {
  // 0.5 * sum(mu^2 + sigma^2 - 1 - 2 log sigma)
  int mu2 = tape.mul(mean, mean);
  int sg2 = tape.mul(std, std);
  int logterm = tape.scale(tape.log(std), -2.0);
  int body = tape.add_scalar(tape.add(tape.add(mu2, sg2), logterm), -1.0);
  return tape.scale(tape.sum_all(body), 0.5);
}

double gaussian_kl_value(const Tensor& mean, const Tensor& std) {
  if (!mean.same_shape(std)) throw ShapeError("gaussian_kl_value: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double m = mean[i], sg = std[i];
    s += m * m + sg * sg - 1.0 - 2.0 * std::log(sg);
  }
  return 0.5 * s;
}

LossNodes elbo_loss(Tape& tape, int predictions, const Tensor& truth, int post_mean,
                    int post_std, double sigma_c2) {
  if (!(sigma_c2 > 0.0)) throw ConfigError("elbo_loss: sigma_c2 must be > 0");
  const Tensor& pred = tape.value(predictions);
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw ShapeError("elbo_loss: prediction shape " + shape_str(pred.shape()) +
                     " does not match truth " + shape_str(truth.shape()));
  }
  LossNodes nodes;
  int diff = tape.sub(predictions, tape.leaf(truth));
  nodes.recon = tape.scale(tape.sum_all(tape.mul(diff, diff)), 1.0 / (2.0 * sigma_c2));
  nodes.kl = gaussian_kl(tape, post_mean, post_std);
  nodes.total = tape.add(nodes.recon, nodes.kl);
  return nodes;
}

LossBreakdown loss_values(const Tape& tape, const LossNodes& nodes) {
  LossBreakdown out;
  out.recon = tape.value(nodes.recon)[0];
  out.kl = tape.value(nodes.kl)[0];
  out.total = tape.value(nodes.total)[0];
  if (!std::isfinite(out.total)) throw NumericError("loss is non-finite");
  return out;
}

Metrics metrics(const Tensor& truth, const Tensor& pred) {
  if (!truth.same_shape(pred)) throw ShapeError("metrics: shape mismatch");
  if (truth.size() == 0) throw UsageError("metrics: empty input");
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    se += d * d;
    ae += std::abs(d);
  }
  Metrics m;
  m.mse = se / static_cast<double>(truth.size());
  m.mae = ae / static_cast<double>(truth.size());
  return m;
}

}  // namespace tiode
