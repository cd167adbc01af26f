#include <doctest.h>

#include <map>

#include "tiode/rng.hpp"
#include "tiode/temporal_graph.hpp"

using namespace tiode;

TEST_CASE("single node, single step: no edges") {
  TemporalGraph tg = build_temporal_graph({Tensor::zeros({1, 1})});
  CHECK(tg.edges.empty());
  CHECK(tg.n_instances() == 1);
}

TEST_CASE("two nodes, two steps: exhaustive edge enumeration") {
  Tensor a = Tensor::from_data({2, 2}, {0, 1, 1, 0});
  TemporalGraph tg = build_temporal_graph({a, a});
  // 4 spatial (both directions x 2 steps) + 2 temporal (each node 1->2).
  CHECK(tg.edges.size() == 6);

  std::map<std::pair<int, int>, double> e;
  for (const auto& ed : tg.edges) e[{ed.src, ed.dst}] = ed.weight;
  // Instances: t-major, inst(i,t) = t*2 + i.
  CHECK(e.at({0, 1}) == 1.0);  // node0^1 -> node1^1 spatial
  CHECK(e.at({1, 0}) == 1.0);
  CHECK(e.at({2, 3}) == 1.0);  // node0^2 -> node1^2 spatial
  CHECK(e.at({3, 2}) == 1.0);
  CHECK(e.at({0, 2}) == 1.0);  // node0^1 -> node0^2 temporal
  CHECK(e.at({1, 3}) == 1.0);
}

TEST_CASE("spatial edge weights equal adjacency entries exactly") {
  Tensor a1 = Tensor::from_data({2, 2}, {0, 0.25, 0.25, 0});
  Tensor a2 = Tensor::from_data({2, 2}, {0, -1.5, -1.5, 0});
  TemporalGraph tg = build_temporal_graph({a1, a2});
  for (const auto& ed : tg.edges) {
    if (ed.dt == 0) {
      const int t = tg.time_of(ed.src);
      const Tensor& a = (t == 0) ? a1 : a2;
      CHECK(ed.weight == a.at(tg.node_of(ed.src), tg.node_of(ed.dst)));
    } else {
      CHECK(ed.weight == 1.0);
      CHECK(tg.node_of(ed.src) == tg.node_of(ed.dst));
      CHECK(tg.time_of(ed.dst) == tg.time_of(ed.src) + 1);
    }
  }
}

TEST_CASE("edge count formula on random dense-checkable graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + trial;
    const int t_len = 2 + trial % 3;
    std::vector<Tensor> steps;
    std::size_t nnz = 0;
    for (int t = 0; t < t_len; ++t) {
      Tensor a = Tensor::zeros({n, n});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (rng.uniform() < 0.5) {
            a.at(i, j) = 1.0;
            a.at(j, i) = 1.0;
            nnz += 2;
          }
        }
      }
      steps.push_back(std::move(a));
    }
    TemporalGraph tg = build_temporal_graph(steps);
    CHECK(tg.edges.size() == nnz + n * (t_len - 1));
  }
}
