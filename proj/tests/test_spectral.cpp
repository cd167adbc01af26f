#include <doctest.h>

#include "tiode/errors.hpp"
#include "tiode/rng.hpp"
#include "tiode/spectral.hpp"

using namespace tiode;

TEST_CASE("spectral norm of simple matrices") {
  CHECK(spectral_norm(Tensor::from_data({2, 2}, {3, 0, 0, 1})) == doctest::Approx(3.0));
  auto eye = Tensor::from_data({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  CHECK(spectral_norm(eye) == doctest::Approx(1.0));
  // Nilpotent: W^T W has eigenvalues {0, 4}.
  CHECK(spectral_norm(Tensor::from_data({2, 2}, {0, 2, 0, 0})) == doctest::Approx(2.0));
  CHECK(spectral_norm(Tensor::zeros({3, 2})) == doctest::Approx(0.0));
}

TEST_CASE("spectral norm scales linearly") {
  Rng rng(3);
  std::vector<double> w(12);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  auto W = Tensor::from_data({3, 4}, w);
  for (auto& v : w) v *= -2.5;
  auto W2 = Tensor::from_data({3, 4}, w);
  CHECK(spectral_norm(W2) == doctest::Approx(2.5 * spectral_norm(W)).epsilon(1e-8));
}

TEST_CASE("empty matrix rejected") {
  CHECK_THROWS_AS(spectral_norm(Tensor::zeros({0, 3})), ShapeError);
  CHECK_THROWS_AS(spectral_norm(Tensor::zeros({2, 2, 2})), ShapeError);
}

TEST_CASE("fnn lipschitz bound multiplies layer norms and activation constants") {
  FnnParams p;
  p.layers.push_back({Tensor::from_data({2, 2}, {2, 0, 0, 2}), Tensor::zeros({1, 2})});
  p.output_activation = Activation::kRelu;
  CHECK(fnn_lipschitz_bound(p) == doctest::Approx(2.0));

  FnnParams q;
  q.layers.push_back({Tensor::from_data({2, 2}, {1, 0, 0, 1}), Tensor::zeros({1, 2})});
  q.output_activation = Activation::kSigmoid;
  CHECK(fnn_lipschitz_bound(q) == doctest::Approx(0.25));
}
