#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tiode/params.hpp"
#include "tiode/rng.hpp"
#include "tiode/tape.hpp"
#include "tiode/tensor.hpp"

namespace tiode {

enum class Activation { kRelu, kSigmoid, kTanh, kIdentity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);
// Lipschitz constant of the scalar activation (relu/tanh 1, sigmoid 0.25).
double activation_lipschitz(Activation a);
double apply_activation(Activation a, double x);

struct DenseLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [1, out]
};

// Plain feed-forward network parameters: alternating affine maps with the
// hidden activation applied after every layer except the last, which uses
// output_activation. Dropout masks hidden activations in train mode,
// scaled by 1/(1-p).
struct FnnParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
  double dropout_rate = 0.0;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  void validate() const;
};

// dims = {in, hidden..., out}. Weights uniform in [-1/sqrt(fan_in),
// +1/sqrt(fan_in)], biases zero.
FnnParams make_fnn(const std::vector<std::size_t>& dims, Activation hidden,
                   Activation output, double dropout_rate, Rng& rng);

Tensor fnn_forward(const FnnParams& params, const Tensor& x, bool train_mode, Rng& rng);
inline Tensor fnn_forward(const FnnParams& params, const Tensor& x) {
  Rng unused(0);
  return fnn_forward(params, x, false, unused);
}

// Architecture description of an FNN whose blocks live in a ParamStore
// under "<prefix>.l<i>.W" / "<prefix>.l<i>.b".
struct FnnSpec {
  std::string prefix;
  std::vector<std::size_t> dims;
  Activation activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
  double dropout_rate = 0.0;
  bool trainable = true;

  std::size_t n_layers() const { return dims.empty() ? 0 : dims.size() - 1; }
  std::string weight_name(std::size_t l) const;
  std::string bias_name(std::size_t l) const;
};

void register_fnn(ParamStore& store, const FnnSpec& spec, Rng& rng);
// Copy the blocks of a registered FNN out of the store (diagnostics,
// plain evaluation).
FnnParams fnn_view(const ParamStore& store, const FnnSpec& spec);

// Tape-side forward. When train is true and the spec carries a dropout
// rate, masks are drawn from rng (required in that case).
int fnn_forward_tape(Tape& tape, const ParamStore& store, const FnnSpec& spec, int x,
                     bool train = false, Rng* rng = nullptr);

}  // namespace tiode
