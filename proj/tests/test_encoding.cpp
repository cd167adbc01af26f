#include <doctest.h>

#include <cmath>

#include "tiode/encoding.hpp"
#include "tiode/errors.hpp"

using namespace tiode;

TEST_CASE("time encoding basics") {
  auto te0 = time_encoding(0.0, 4);
  CHECK(te0[0] == 0.0);
  CHECK(te0[1] == 1.0);
  CHECK(te0[2] == 0.0);
  CHECK(te0[3] == 1.0);

  auto te1 = time_encoding(1.0, 2);
  CHECK(te1[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(te1[1] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(te1[0] == doctest::Approx(0.84147).epsilon(1e-4));
  CHECK(te1[1] == doctest::Approx(0.54030).epsilon(1e-4));
}

TEST_CASE("time encoding entries stay in [-1, 1]") {
  for (double dt : {-123.4, -1.0, 0.0, 0.5, 3.14, 9999.0}) {
    auto te = time_encoding(dt, 8);
    for (double v : te.vec()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("per-pair periodicity") {
  const std::size_t d = 6;
  for (std::size_t i = 0; 2 * i < d; ++i) {
    const double period =
        2.0 * M_PI * std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
    auto a = time_encoding(0.37, d);
    auto b = time_encoding(0.37 + period, d);
    CHECK(a[2 * i] == doctest::Approx(b[2 * i]).epsilon(1e-9));
    CHECK(a[2 * i + 1] == doctest::Approx(b[2 * i + 1]).epsilon(1e-9));
  }
}

TEST_CASE("odd width rejected") {
  CHECK_THROWS_AS(time_encoding(1.0, 3), ConfigError);
  CHECK_THROWS_AS(time_encoding(1.0, 0), ConfigError);
}
