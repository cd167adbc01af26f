#include <doctest.h>

#include <cmath>

#include "tiode/rng.hpp"

using namespace tiode;

TEST_CASE("rng streams are deterministic") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forks are independent of draw count") {
  Rng a(7);
  Rng b(7);
  a.uniform();
  a.uniform();
  CHECK(a.fork("x").next_u64() == b.fork("x").next_u64());
  CHECK(a.fork("x").next_u64() != a.fork("y").next_u64());
  CHECK(a.fork(std::uint64_t{1}).next_u64() != a.fork(std::uint64_t{2}).next_u64());
}

TEST_CASE("uniform range and normal moments") {
  Rng r(123);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}
