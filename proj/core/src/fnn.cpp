#include "tiode/fnn.hpp"

#include <Eigen/Core>

#include <cmath>

#include "tiode/errors.hpp"

namespace tiode {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + s + "'");
}

double activation_lipschitz(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return 0.25;
    case Activation::kRelu:
    case Activation::kTanh:
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kTanh: return std::tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

std::size_t FnnParams::in_dim() const {
  if (layers.empty()) throw UsageError("FnnParams: empty network");
  return layers.front().weight.cols();
}

std::size_t FnnParams::out_dim() const {
  if (layers.empty()) throw UsageError("FnnParams: empty network");
  return layers.back().weight.rows();
}

void FnnParams::validate() const {
  if (layers.empty()) throw ConfigError("FnnParams: at least one layer required");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("FnnParams: dropout_rate must be in [0,1)");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    if (lay.weight.rank() != 2) throw ShapeError("FnnParams: weight must be rank-2");
    if (lay.bias.size() != lay.weight.rows()) {
      throw ShapeError("FnnParams: bias length must match output width");
    }
    if (!lay.weight.all_finite() || !lay.bias.all_finite()) {
      throw ShapeError("FnnParams: non-finite parameters");
    }
    if (l > 0 && layers[l - 1].weight.rows() != lay.weight.cols()) {
      throw ShapeError("FnnParams: adjacent layer dimensions do not chain");
    }
  }
}

FnnParams make_fnn(const std::vector<std::size_t>& dims, Activation hidden,
                   Activation output, double dropout_rate, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("make_fnn: need at least input and output dims");
  FnnParams p;
  p.activation = hidden;
  p.output_activation = output;
  p.dropout_rate = dropout_rate;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(out * in);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    DenseLayer layer;
    layer.weight = Tensor::from_data({out, in}, std::move(w));
    layer.bias = Tensor::zeros({1, out});
    p.layers.push_back(std::move(layer));
  }
  p.validate();
  return p;
}

Tensor fnn_forward(const FnnParams& params, const Tensor& x, bool train_mode, Rng& rng) {
  params.validate();
  if (x.cols() != params.in_dim()) {
    throw ShapeError("fnn_forward: input width " + std::to_string(x.cols()) +
                     " does not match first layer input " + std::to_string(params.in_dim()));
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t m = x.rows();
  Tensor h = x.rank() == 2 ? x : x.reshaped({1, x.cols()});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& lay = params.layers[l];
    const std::size_t out = lay.weight.rows();
    Tensor next = Tensor::zeros({m, out});
    Eigen::Map<RowMat>(next.data(), m, out).noalias() =
        Eigen::Map<const RowMat>(h.data(), m, h.cols()) *
        Eigen::Map<const RowMat>(lay.weight.data(), out, lay.weight.cols()).transpose();
    const bool last = (l + 1 == params.layers.size());
    const Activation act = last ? params.output_activation : params.activation;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < out; ++j) {
        next.at(r, j) = apply_activation(act, next.at(r, j) + lay.bias[j]);
      }
    }
    if (!last && train_mode && params.dropout_rate > 0.0) {
      const double keep = 1.0 - params.dropout_rate;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] = (rng.uniform() < keep) ? next[i] / keep : 0.0;
      }
    }
    h = std::move(next);
  }
  return h;
}

std::string FnnSpec::weight_name(std::size_t l) const {
  return prefix + ".l" + std::to_string(l) + ".W";
}

std::string FnnSpec::bias_name(std::size_t l) const {
  return prefix + ".l" + std::to_string(l) + ".b";
}

void register_fnn(ParamStore& store, const FnnSpec& spec, Rng& rng) {
  Rng block_rng = rng.fork(spec.prefix);
  FnnParams p = make_fnn(spec.dims, spec.activation, spec.output_activation,
                         spec.dropout_rate, block_rng);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    store.add(spec.weight_name(l), std::move(p.layers[l].weight), spec.trainable);
    store.add(spec.bias_name(l), std::move(p.layers[l].bias), spec.trainable);
  }
}

FnnParams fnn_view(const ParamStore& store, const FnnSpec& spec) {
  FnnParams p;
  p.activation = spec.activation;
  p.output_activation = spec.output_activation;
  p.dropout_rate = spec.dropout_rate;
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    DenseLayer lay;
    lay.weight = store.at(spec.weight_name(l));
    lay.bias = store.at(spec.bias_name(l));
    if (lay.bias.rank() == 1) lay.bias = lay.bias.reshaped({1, lay.bias.size()});
    p.layers.push_back(std::move(lay));
  }
  p.validate();
  return p;
}

namespace {
int tape_activation(Tape& tape, Activation act, int x) {
  switch (act) {
    case Activation::kRelu: return tape.relu(x);
    case Activation::kSigmoid: return tape.sigmoid(x);
    case Activation::kTanh: return tape.tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}
}  // namespace

int fnn_forward_tape(Tape& tape, const ParamStore& store, const FnnSpec& spec, int x,
                     bool train, Rng* rng) {
  const std::size_t n_layers = spec.n_layers();
  if (n_layers == 0) throw ConfigError("fnn_forward_tape: empty spec");
  int h = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    int w = tape.param(store, spec.weight_name(l));
    int b = tape.param(store, spec.bias_name(l));
    h = tape.add_rowvec(tape.matmul_tb(h, w), b);
    const bool last = (l + 1 == n_layers);
    h = tape_activation(tape, last ? spec.output_activation : spec.activation, h);
    if (!last && train && spec.dropout_rate > 0.0) {
      if (!rng) throw UsageError("fnn_forward_tape: dropout requires an rng in train mode");
      const double keep = 1.0 - spec.dropout_rate;
      const Tensor& hv = tape.value(h);
      std::vector<double> mask(hv.size());
      for (auto& mv : mask) mv = (rng->uniform() < keep) ? 1.0 / keep : 0.0;
      h = tape.mul(h, tape.leaf(Tensor::raw(hv.shape(), std::move(mask))));
    }
  }
  return h;
}

}  // namespace tiode
