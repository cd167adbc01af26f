#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tiode/errors.hpp"
#include "tiode/fnn.hpp"

using namespace tiode;

TEST_CASE("zero network maps everything to zero under relu") {
  FnnParams p;
  p.layers.push_back({Tensor::zeros({3, 2}), Tensor::zeros({1, 3})});
  p.layers.push_back({Tensor::zeros({2, 3}), Tensor::zeros({1, 2})});
  p.activation = Activation::kRelu;
  auto y = fnn_forward(p, Tensor::from_data({1, 2}, {0.5, -1.2}));
  for (double v : y.vec()) CHECK(v == 0.0);
}

TEST_CASE("identity single layer passes input through") {
  FnnParams p;
  p.layers.push_back({Tensor::from_data({2, 2}, {1, 0, 0, 1}), Tensor::zeros({1, 2})});
  p.output_activation = Activation::kIdentity;
  auto y = fnn_forward(p, Tensor::from_data({1, 2}, {1, 2}));
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
}

TEST_CASE("scalar tanh layer reference value") {
  FnnParams p;
  p.layers.push_back({Tensor::from_data({1, 1}, {2.0}), Tensor::from_data({1, 1}, {0.5})});
  p.output_activation = Activation::kTanh;
  auto y = fnn_forward(p, Tensor::from_data({1, 1}, {1.0}));
  CHECK(y[0] == doctest::Approx(std::tanh(2.5)).epsilon(1e-12));
  CHECK(y[0] == doctest::Approx(0.98661).epsilon(1e-4));
}

TEST_CASE("dimension mismatch raises a shape error") {
  Rng rng(1);
  FnnParams p = make_fnn({3, 4, 2}, Activation::kRelu, Activation::kIdentity, 0.0, rng);
  CHECK_THROWS_AS(fnn_forward(p, Tensor::from_data({1, 2}, {1, 2})), ShapeError);
}

TEST_CASE("eval mode ignores rng and dropout") {
  Rng rng(5);
  FnnParams p = make_fnn({4, 8, 3}, Activation::kTanh, Activation::kIdentity, 0.5, rng);
  auto x = Tensor::from_data({2, 4}, {0.1, -0.2, 0.3, 0.4, 1.0, -1.0, 0.5, 0.0});
  Rng r1(100), r2(999);
  auto y1 = fnn_forward(p, x, false, r1);
  auto y2 = fnn_forward(p, x, false, r2);
  CHECK(y1.bitwise_equal(y2));
}

TEST_CASE("train-mode dropout scales surviving activations by 1/(1-p)") {
  FnnParams p;
  // Hidden layer of 1 unit makes the mask effect directly observable.
  p.layers.push_back({Tensor::from_data({1, 1}, {1.0}), Tensor::zeros({1, 1})});
  p.layers.push_back({Tensor::from_data({1, 1}, {1.0}), Tensor::zeros({1, 1})});
  p.activation = Activation::kIdentity;
  p.dropout_rate = 0.5;
  auto x = Tensor::from_data({1, 1}, {3.0});
  int kept = 0, dropped = 0;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    auto y = fnn_forward(p, x, true, rng);
    if (y[0] == 0.0) {
      ++dropped;
    } else {
      CHECK(y[0] == doctest::Approx(6.0).epsilon(1e-12));
      ++kept;
    }
  }
  CHECK(kept > 50);
  CHECK(dropped > 50);
}

TEST_CASE("tape forward matches plain forward bitwise") {
  Rng rng(21);
  ParamStore store;
  FnnSpec spec{"net", {3, 8, 8, 2}, Activation::kTanh, Activation::kSigmoid, 0.0, true};
  register_fnn(store, spec, rng);
  auto x = Tensor::from_data({4, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, -0.6, 0.7, 0.8, 0.9, 1, -1, 0});

  Tape tape;
  int y = fnn_forward_tape(tape, store, spec, tape.leaf(x));
  auto plain = fnn_forward(fnn_view(store, spec), x);
  CHECK(tape.value(y).bitwise_equal(plain));
}

TEST_CASE("fnn gradients match finite differences") {
  Rng rng(31);
  ParamStore store;
  FnnSpec spec{"net", {3, 6, 2}, Activation::kTanh, Activation::kIdentity, 0.0, true};
  register_fnn(store, spec, rng);
  auto x = Tensor::from_data({2, 3}, {0.1, -0.2, 0.3, 0.5, 0.4, -0.9});
  auto build = [&](Tape& t, const ParamStore& s) {
    int y = fnn_forward_tape(t, s, spec, t.leaf(x));
    return t.sum_all(t.mul(y, y));
  };
  CHECK(testing::max_grad_rel_error(store, build) < 1e-4);
}
