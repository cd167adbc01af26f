#include "tiode/temporal_graph.hpp"

#include "tiode/errors.hpp"

namespace tiode {

TemporalGraph build_temporal_graph(const std::vector<Tensor>& adjacency_steps) {
  if (adjacency_steps.empty()) {
    throw UsageError("build_temporal_graph: need at least one snapshot");
  }
  const std::size_t n = adjacency_steps.front().rows();
  TemporalGraph tg;
  tg.n_nodes = static_cast<int>(n);
  tg.t_len = static_cast<int>(adjacency_steps.size());

  for (int t = 0; t < tg.t_len; ++t) {
    const Tensor& a = adjacency_steps[t];
    if (a.rows() != n || a.cols() != n) {
      throw ShapeError("build_temporal_graph: snapshot " + std::to_string(t) +
                       " is not [N,N]");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double w = a.at(i, j);
        if (w != 0.0) {
          tg.edges.push_back({tg.instance(static_cast<int>(i), t),
                              tg.instance(static_cast<int>(j), t), w, 0});
        }
      }
    }
  }
  // Temporal self-edges i^t -> i^{t+1}, weight 1.
  for (int t = 0; t + 1 < tg.t_len; ++t) {
    for (int i = 0; i < tg.n_nodes; ++i) {
      tg.edges.push_back({tg.instance(i, t), tg.instance(i, t + 1), 1.0, -1});
    }
  }
  return tg;
}

}  // namespace tiode
