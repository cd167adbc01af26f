#include <doctest.h>

#include <limits>

#include "tiode/errors.hpp"
#include "tiode/tensor.hpp"

using namespace tiode;

TEST_CASE("tensor construction validates shape and finiteness") {
  auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at(1, 2) == 6.0);

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(
      Tensor::from_data({1}, {std::numeric_limits<double>::quiet_NaN()}), ShapeError);
  CHECK_THROWS_AS(
      Tensor::from_data({1}, {std::numeric_limits<double>::infinity()}), ShapeError);
}

TEST_CASE("tensor rank-1 behaves as a row in rank-2 views") {
  auto v = Tensor::from_data({3}, {1, 2, 3});
  CHECK(v.rows() == 1);
  CHECK(v.cols() == 3);
}

TEST_CASE("tensor reshape preserves data") {
  auto t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  auto r = t.reshaped({4});
  CHECK(r[3] == 4.0);
  CHECK_THROWS_AS(t.reshaped({3}), ShapeError);
}

TEST_CASE("bitwise equality") {
  auto a = Tensor::from_data({2}, {0.1, 0.2});
  auto b = Tensor::from_data({2}, {0.1, 0.2});
  auto c = Tensor::from_data({2}, {0.1, 0.2000000001});
  CHECK(a.bitwise_equal(b));
  CHECK(!a.bitwise_equal(c));
}
