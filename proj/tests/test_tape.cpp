#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tiode/errors.hpp"
#include "tiode/rng.hpp"
#include "tiode/tape.hpp"

using namespace tiode;

namespace {

ParamStore random_store(Rng& rng, const std::vector<std::pair<std::string, Shape>>& specs) {
  ParamStore store;
  for (const auto& [name, shape] : specs) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    store.add(name, Tensor::from_data(shape, std::move(v)));
  }
  return store;
}

}  // namespace

TEST_CASE("constant loss yields zero gradients") {
  ParamStore store;
  store.add("w", Tensor::from_data({2, 2}, {1, 2, 3, 4}));
  Tape tape;
  tape.param(store, "w");
  int loss = tape.leaf_scalar(3.0);
  // A constant loss is unreachable from parameters; gradients are zero.
  GradMap g = tape.backward(loss);
  for (double v : g.at("w").vec()) CHECK(v == 0.0);
}

TEST_CASE("hand-computed gradient of 0.5*||Wx||^2") {
  ParamStore store;
  store.add("W", Tensor::from_data({1, 1}, {1.0}));
  Tape tape;
  int w = tape.param(store, "W");
  int x = tape.leaf(Tensor::from_data({1, 1}, {3.0}));
  int y = tape.matmul(w, x);
  int loss = tape.scale(tape.sum_all(tape.mul(y, y)), 0.5);
  GradMap g = tape.backward(loss);
  CHECK(g.at("W")[0] == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("non-scalar loss is a usage error") {
  ParamStore store;
  store.add("W", Tensor::from_data({2, 2}, {1, 2, 3, 4}));
  Tape tape;
  int w = tape.param(store, "W");
  CHECK_THROWS_AS(tape.backward(w), UsageError);
}

TEST_CASE("finite differences agree with every primitive") {
  Rng rng(2024);
  ParamStore store = random_store(
      rng, {{"A", {3, 4}}, {"B", {4, 2}}, {"C", {3, 2}}, {"v", {1, 2}}, {"c", {3, 1}}});

  auto build = [](Tape& t, const ParamStore& s) {
    int a = t.param(s, "A");
    int b = t.param(s, "B");
    int c = t.param(s, "C");
    int v = t.param(s, "v");
    int col = t.param(s, "c");

    int m = t.matmul(a, b);                       // [3,2]
    int m2 = t.add_rowvec(m, v);
    int m3 = t.add(m2, t.mul_colvec(c, col));
    int m4 = t.sub(m3, t.scale(c, 0.25));
    int act = t.add(t.tanh(m4), t.sigmoid(m3));
    int sp = t.softplus(act);
    int lg = t.log(t.add_scalar(t.mul(sp, sp), 1.0));
    int rd = t.row_dot(lg, m3);                   // [3,1]
    int cc = t.concat_cols(lg, m3);               // [3,4]
    int cr = t.concat_rows(cc, cc);               // [6,4]
    auto idx = make_indices({0, 2, 2, 5, 1});
    int gth = t.gather_rows(cr, idx);             // [5,4]
    int sct = t.scatter_add_rows(gth, make_indices({1, 0, 1, 2, 2}), 3);
    int tb = t.matmul_tb(sct, cc);                // [3,3]
    int cl = t.clamp_min(tb, -0.3);
    int rl = t.relu(cl);
    int s1 = t.sum_all(rl);
    int s2 = t.sum_all(t.mul_colvec(lg, rd));
    return t.add(t.scale(s1, 0.5), t.scale(s2, 0.25));
  };

  CHECK(testing::max_grad_rel_error(store, build) < 1e-4);
}

TEST_CASE("gradients are deterministic for a fixed tape") {
  Rng rng(11);
  ParamStore store = random_store(rng, {{"A", {4, 4}}, {"B", {4, 4}}});
  auto run = [&]() {
    Tape t;
    int a = t.param(store, "A");
    int b = t.param(store, "B");
    int loss = t.sum_all(t.sigmoid(t.matmul(a, b)));
    return t.backward(loss);
  };
  GradMap g1 = run(), g2 = run();
  CHECK(g1.at("A").bitwise_equal(g2.at("A")));
  CHECK(g1.at("B").bitwise_equal(g2.at("B")));
}

TEST_CASE("frozen parameters receive exactly zero gradient") {
  ParamStore store;
  store.add("free", Tensor::from_data({1, 2}, {0.3, -0.2}), true);
  store.add("frozen", Tensor::from_data({2, 2}, {1, 2, 3, 4}), false);
  Tape tape;
  int x = tape.param(store, "free");
  int w = tape.param(store, "frozen");
  int loss = tape.sum_all(tape.matmul(x, w));
  GradMap g = tape.backward(loss);
  for (double v : g.at("frozen").vec()) CHECK(v == 0.0);
  // The trainable input still gets its gradient through the frozen block.
  CHECK(g.at("free")[0] == doctest::Approx(3.0));
  CHECK(g.at("free")[1] == doctest::Approx(7.0));
}

TEST_CASE("scatter_add is invariant to edge order") {
  auto vals = Tensor::from_data({4, 2}, {0.1, 0.7, -0.3, 0.2, 0.9, -0.5, 0.4, 0.6});
  auto vals_perm = Tensor::from_data({4, 2}, {0.9, -0.5, 0.1, 0.7, 0.4, 0.6, -0.3, 0.2});
  Tape t1, t2;
  int a1 = t1.leaf(vals);
  int a2 = t2.leaf(vals_perm);
  int s1 = t1.scatter_add_rows(a1, make_indices({0, 1, 0, 1}), 2);
  int s2 = t2.scatter_add_rows(a2, make_indices({0, 0, 1, 1}), 2);
  // Same multiset of contributions per destination row in both layouts.
  CHECK(t1.value(s1).bitwise_equal(t2.value(s2)));
}
