#pragma once

#include <vector>

#include "tiode/tensor.hpp"

namespace tiode {

// Auxiliary graph over node-time instances for a condition window of
// length T_h. Instances are indexed time-major: inst(i, t) = t*N + i with
// t in [0, T_h). Edges are the nonzero entries of the temporal adjacency:
//   (i^t, j^t)     weight A^t_ij   spatial, within a snapshot
//   (i^t, i^{t+1}) weight 1        temporal, node to its next instance
struct TemporalGraph {
  int n_nodes = 0;
  int t_len = 0;

  struct Edge {
    int src;        // instance index i^t (row of the temporal adjacency)
    int dst;        // instance index j^t~ (column)
    double weight;
    int dt;         // t_src - t_dst: 0 for spatial, -1 for temporal
  };
  std::vector<Edge> edges;

  int n_instances() const { return n_nodes * t_len; }
  int instance(int node, int t) const { return t * n_nodes + node; }
  int node_of(int inst) const { return inst % n_nodes; }
  int time_of(int inst) const { return inst / n_nodes; }
};

// Build from per-step adjacency matrices A^1..A^{T_h} (each [N,N]).
TemporalGraph build_temporal_graph(const std::vector<Tensor>& adjacency_steps);

}  // namespace tiode
