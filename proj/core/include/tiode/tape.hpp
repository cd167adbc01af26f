#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tiode/params.hpp"
#include "tiode/tensor.hpp"

namespace tiode {

// Gradients keyed by parameter block name. Contains an entry for every
// parameter block touched by the tape; frozen or unused blocks map to
// exact zeros.
using GradMap = std::map<std::string, Tensor>;

using IdxPtr = std::shared_ptr<const std::vector<int>>;
IdxPtr make_indices(std::vector<int> idx);

// Define-by-run reverse-mode tape over a fixed primitive set. Every
// operation records one node holding the forward value; backward() walks
// the nodes in reverse and accumulates gradients for registered
// parameters. All values are rank-2 (a rank-1 leaf becomes a single row).
class Tape {
public:
  Tape() { nodes_.reserve(1024); }

  // Constant input; never receives gradient.
  int leaf(Tensor value);
  int leaf_scalar(double v) { return leaf(Tensor::scalar(v)); }
  // Parameter block; repeated calls with the same name return the same
  // node, so gradients from multiple uses accumulate naturally.
  int param(const ParamStore& store, const std::string& name);

  const Tensor& value(int id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // [m,k] x [k,n] -> [m,n]
  int matmul(int a, int b);
  // [m,k] x [n,k]^T -> [m,n]
  int matmul_tb(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  // [m,n] + [1,n] broadcast over rows
  int add_rowvec(int a, int v);
  int add_scalar(int a, double c);
  int scale(int a, double c);
  int mul(int a, int b);
  // [m,n] * [m,1] broadcast over columns
  int mul_colvec(int a, int v);
  // rowwise dot product: [m,n],[m,n] -> [m,1]
  int row_dot(int a, int b);
  int sum_all(int a);  // -> [1,1]
  int concat_cols(int a, int b);
  int concat_rows(int a, int b);
  // out[e,:] = in[idx[e],:]
  int gather_rows(int a, IdxPtr idx);
  // out[idx[e],:] += in[e,:], accumulated per destination in value-sorted
  // order so the result is invariant under reordering of the edge list.
  int scatter_add_rows(int a, IdxPtr idx, int out_rows);
  int relu(int a);
  int tanh(int a);
  int sigmoid(int a);
  int softplus(int a);
  int log(int a);
  int clamp_min(int a, double c);

  // d(loss)/d(block) for every parameter block registered on this tape.
  // loss must be a scalar node.
  GradMap backward(int loss) const;

private:
  enum class Op : std::uint8_t {
    kLeaf, kParam, kMatmul, kMatmulTB, kAdd, kSub, kAddRowvec, kAddScalar,
    kScale, kMul, kMulColvec, kRowDot, kSumAll, kConcatCols, kConcatRows,
    kGatherRows, kScatterAddRows, kRelu, kTanh, kSigmoid, kSoftplus, kLog,
    kClampMin
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double c = 0.0;
    IdxPtr idx;
    Tensor value;
    bool needs_grad = false;
  };

  int push(Node n);
  const Tensor& val(int id) const;
  bool ng(int id) const { return nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, int>> params_;  // name -> node id
  std::map<std::string, int> param_ids_;
};

}  // namespace tiode
