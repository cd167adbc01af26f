#include "tiode/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tiode/errors.hpp"

namespace tiode {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

CMapMat cmap(const Tensor& t) {
  return CMapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

MapMat map(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

Shape rank2(const Tensor& t) { return {t.rows(), t.cols()}; }

}  // namespace

IdxPtr make_indices(std::vector<int> idx) {
  return std::make_shared<const std::vector<int>>(std::move(idx));
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Tape::val(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw UsageError("Tape: node id out of range");
  }
  return nodes_[id].value;
}

int Tape::leaf(Tensor value) {
  if (value.rank() > 2) throw ShapeError("Tape::leaf: rank-2 value required");
  Node n;
  n.op = Op::kLeaf;
  Shape s = rank2(value);
  n.value = value.rank() == 2 ? std::move(value) : value.reshaped(s);
  return push(std::move(n));
}

int Tape::param(const ParamStore& store, const std::string& name) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return it->second;
  const ParamBlock& blk = store.block(name);
  Node n;
  n.op = Op::kParam;
  n.value = blk.value.rank() == 2 ? blk.value : blk.value.reshaped(rank2(blk.value));
  n.needs_grad = blk.trainable;
  int id = push(std::move(n));
  params_.emplace_back(name, id);
  param_ids_[name] = id;
  return id;
}

int Tape::matmul(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (A.cols() != B.rows()) {
    throw ShapeError("Tape::matmul: inner extents differ: " + shape_str(A.shape()) + " x " +
                     shape_str(B.shape()));
  }
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  n.value = Tensor::zeros({A.rows(), B.cols()});
  map(n.value).noalias() = cmap(A) * cmap(B);
  return push(std::move(n));
}

int Tape::matmul_tb(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (A.cols() != B.cols()) {
    throw ShapeError("Tape::matmul_tb: inner extents differ: " + shape_str(A.shape()) + " x " +
                     shape_str(B.shape()) + "^T");
  }
  Node n;
  n.op = Op::kMatmulTB;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  n.value = Tensor::zeros({A.rows(), B.rows()});
  map(n.value).noalias() = cmap(A) * cmap(B).transpose();
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (!A.same_shape(B)) {
    throw ShapeError("Tape::add: shape mismatch " + shape_str(A.shape()) + " vs " +
                     shape_str(B.shape()));
  }
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (!A.same_shape(B)) {
    throw ShapeError("Tape::sub: shape mismatch " + shape_str(A.shape()) + " vs " +
                     shape_str(B.shape()));
  }
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] - B[i];
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::add_rowvec(int a, int v) {
  const Tensor &A = val(a), &V = val(v);
  if (V.rows() != 1 || V.cols() != A.cols()) {
    throw ShapeError("Tape::add_rowvec: want [1," + std::to_string(A.cols()) + "], got " +
                     shape_str(V.shape()));
  }
  Node n;
  n.op = Op::kAddRowvec;
  n.a = a;
  n.b = v;
  n.needs_grad = ng(a) || ng(v);
  std::vector<double> out(A.size());
  const std::size_t m = A.rows(), c = A.cols();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = A[r * c + j] + V[j];
  }
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::add_scalar(int a, double c) {
  const Tensor& A = val(a);
  Node n;
  n.op = Op::kAddScalar;
  n.a = a;
  n.c = c;
  n.needs_grad = ng(a);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + c;
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  const Tensor& A = val(a);
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.c = c;
  n.needs_grad = ng(a);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * c;
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (!A.same_shape(B)) {
    throw ShapeError("Tape::mul: shape mismatch " + shape_str(A.shape()) + " vs " +
                     shape_str(B.shape()));
  }
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::mul_colvec(int a, int v) {
  const Tensor &A = val(a), &V = val(v);
  if (V.cols() != 1 || V.rows() != A.rows()) {
    throw ShapeError("Tape::mul_colvec: want [" + std::to_string(A.rows()) + ",1], got " +
                     shape_str(V.shape()));
  }
  Node n;
  n.op = Op::kMulColvec;
  n.a = a;
  n.b = v;
  n.needs_grad = ng(a) || ng(v);
  std::vector<double> out(A.size());
  const std::size_t m = A.rows(), c = A.cols();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = A[r * c + j] * V[r];
  }
  n.value = Tensor::raw(A.shape(), std::move(out));
  return push(std::move(n));
}

int Tape::row_dot(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (!A.same_shape(B)) {
    throw ShapeError("Tape::row_dot: shape mismatch " + shape_str(A.shape()) + " vs " +
                     shape_str(B.shape()));
  }
  Node n;
  n.op = Op::kRowDot;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  const std::size_t m = A.rows(), c = A.cols();
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += A[r * c + j] * B[r * c + j];
    out[r] = s;
  }
  n.value = Tensor::raw({m, 1}, std::move(out));
  return push(std::move(n));
}

int Tape::sum_all(int a) {
  const Tensor& A = val(a);
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.needs_grad = ng(a);
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i];
  n.value = Tensor::raw({1, 1}, {s});
  return push(std::move(n));
}

int Tape::concat_cols(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (A.rows() != B.rows()) throw ShapeError("Tape::concat_cols: row counts differ");
  Node n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  const std::size_t m = A.rows(), ca = A.cols(), cb = B.cols();
  std::vector<double> out(m * (ca + cb));
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(A.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(B.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  n.value = Tensor::raw({m, ca + cb}, std::move(out));
  return push(std::move(n));
}

int Tape::concat_rows(int a, int b) {
  const Tensor &A = val(a), &B = val(b);
  if (A.cols() != B.cols()) throw ShapeError("Tape::concat_rows: column counts differ");
  Node n;
  n.op = Op::kConcatRows;
  n.a = a;
  n.b = b;
  n.needs_grad = ng(a) || ng(b);
  std::vector<double> out;
  out.reserve(A.size() + B.size());
  out.insert(out.end(), A.vec().begin(), A.vec().end());
  out.insert(out.end(), B.vec().begin(), B.vec().end());
  n.value = Tensor::raw({A.rows() + B.rows(), A.cols()}, std::move(out));
  return push(std::move(n));
}

int Tape::gather_rows(int a, IdxPtr idx) {
  const Tensor& A = val(a);
  const std::size_t m = A.rows(), c = A.cols();
  for (int i : *idx) {
    if (i < 0 || static_cast<std::size_t>(i) >= m) {
      throw ShapeError("Tape::gather_rows: index out of range");
    }
  }
  Node n;
  n.op = Op::kGatherRows;
  n.a = a;
  n.idx = idx;
  n.needs_grad = ng(a);
  std::vector<double> out(idx->size() * c);
  for (std::size_t e = 0; e < idx->size(); ++e) {
    std::copy_n(A.data() + static_cast<std::size_t>((*idx)[e]) * c, c, out.data() + e * c);
  }
  n.value = Tensor::raw({idx->size(), c}, std::move(out));
  return push(std::move(n));
}

int Tape::scatter_add_rows(int a, IdxPtr idx, int out_rows) {
  const Tensor& A = val(a);
  if (idx->size() != A.rows()) throw ShapeError("Tape::scatter_add_rows: index count mismatch");
  for (int i : *idx) {
    if (i < 0 || i >= out_rows) throw ShapeError("Tape::scatter_add_rows: index out of range");
  }
  Node n;
  n.op = Op::kScatterAddRows;
  n.a = a;
  n.idx = idx;
  n.needs_grad = ng(a);
  const std::size_t c = A.cols(), ne = idx->size();

  // Accumulation order: by destination, then by source-row values. The
  // order then depends only on the multiset of contributions per
  // destination, so relabelling rows (node permutations) cannot change
  // the floating-point result.
  std::vector<int> ord(ne);
  std::iota(ord.begin(), ord.end(), 0);
  const double* ad = A.data();
  std::sort(ord.begin(), ord.end(), [&](int x, int y) {
    if ((*idx)[x] != (*idx)[y]) return (*idx)[x] < (*idx)[y];
    const double *rx = ad + static_cast<std::size_t>(x) * c,
                 *ry = ad + static_cast<std::size_t>(y) * c;
    for (std::size_t j = 0; j < c; ++j) {
      if (rx[j] != ry[j]) return rx[j] < ry[j];
    }
    return false;
  });
  std::vector<double> out(static_cast<std::size_t>(out_rows) * c, 0.0);
  for (int e : ord) {
    double* dst = out.data() + static_cast<std::size_t>((*idx)[e]) * c;
    const double* src = ad + static_cast<std::size_t>(e) * c;
    for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
  }
  n.value = Tensor::raw({static_cast<std::size_t>(out_rows), c}, std::move(out));
  return push(std::move(n));
}

namespace {
template <typename F>
Tensor unary(const Tensor& a, F f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
  return Tensor::raw(a.shape(), std::move(out));
}
}  // namespace

int Tape::relu(int a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [](double x) { return x > 0.0 ? x : 0.0; });
  return push(std::move(n));
}

int Tape::tanh(int a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [](double x) { return std::tanh(x); });
  return push(std::move(n));
}

int Tape::sigmoid(int a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

int Tape::softplus(int a) {
  Node n;
  n.op = Op::kSoftplus;
  n.a = a;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [](double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
  });
  return push(std::move(n));
}

int Tape::log(int a) {
  Node n;
  n.op = Op::kLog;
  n.a = a;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [](double x) { return std::log(x); });
  return push(std::move(n));
}

int Tape::clamp_min(int a, double c) {
  Node n;
  n.op = Op::kClampMin;
  n.a = a;
  n.c = c;
  n.needs_grad = ng(a);
  n.value = unary(val(a), [c](double x) { return x < c ? c : x; });
  return push(std::move(n));
}

GradMap Tape::backward(int loss) const {
  const Tensor& lv = val(loss);
  if (lv.size() != 1) {
    throw UsageError("Tape::backward: loss must be scalar, got " + shape_str(lv.shape()));
  }

  std::vector<Tensor> grads(nodes_.size());
  auto gbuf = [&](int id) -> Tensor& {
    if (grads[id].empty()) grads[id] = Tensor::zeros(nodes_[id].value.shape());
    return grads[id];
  };
  if (nodes_[loss].needs_grad) gbuf(loss)[0] = 1.0;

  for (int id = loss; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || grads[id].empty()) continue;
    const Tensor& g = grads[id];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        const Tensor &A = nodes_[n.a].value, &B = nodes_[n.b].value;
        if (ng(n.a)) map(gbuf(n.a)).noalias() += cmap(g) * cmap(B).transpose();
        if (ng(n.b)) map(gbuf(n.b)).noalias() += cmap(A).transpose() * cmap(g);
        break;
      }
      case Op::kMatmulTB: {
        const Tensor &A = nodes_[n.a].value, &B = nodes_[n.b].value;
        if (ng(n.a)) map(gbuf(n.a)).noalias() += cmap(g) * cmap(B);
        if (ng(n.b)) map(gbuf(n.b)).noalias() += cmap(g).transpose() * cmap(A);
        break;
      }
      case Op::kAdd: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
        break;
      }
      case Op::kAddRowvec: {
        const std::size_t m = g.rows(), c = g.cols();
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ng(n.b)) {
          Tensor& gv = gbuf(n.b);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < c; ++j) gv[j] += g[r * c + j];
          }
        }
        break;
      }
      case Op::kAddScalar: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        break;
      }
      case Op::kScale: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.c * g[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor &A = nodes_[n.a].value, &B = nodes_[n.b].value;
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
        }
        break;
      }
      case Op::kMulColvec: {
        const Tensor &A = nodes_[n.a].value, &V = nodes_[n.b].value;
        const std::size_t m = A.rows(), c = A.cols();
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += g[r * c + j] * V[r];
          }
        }
        if (ng(n.b)) {
          Tensor& gv = gbuf(n.b);
          for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += g[r * c + j] * A[r * c + j];
            gv[r] += s;
          }
        }
        break;
      }
      case Op::kRowDot: {
        const Tensor &A = nodes_[n.a].value, &B = nodes_[n.b].value;
        const std::size_t m = A.rows(), c = A.cols();
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += g[r] * B[r * c + j];
          }
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < c; ++j) gb[r * c + j] += g[r] * A[r * c + j];
          }
        }
        break;
      }
      case Op::kSumAll: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        }
        break;
      }
      case Op::kConcatCols: {
        const std::size_t m = g.rows();
        const std::size_t ca = nodes_[n.a].value.cols(), cb = nodes_[n.b].value.cols();
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
          }
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
          }
        }
        break;
      }
      case Op::kConcatRows: {
        const std::size_t na = nodes_[n.a].value.size();
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        if (ng(n.b)) {
          Tensor& gb = gbuf(n.b);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
        }
        break;
      }
      case Op::kGatherRows: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          const std::size_t c = ga.cols();
          for (std::size_t e = 0; e < n.idx->size(); ++e) {
            double* dst = ga.data() + static_cast<std::size_t>((*n.idx)[e]) * c;
            const double* src = g.data() + e * c;
            for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
        break;
      }
      case Op::kScatterAddRows: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          const std::size_t c = ga.cols();
          for (std::size_t e = 0; e < n.idx->size(); ++e) {
            double* dst = ga.data() + e * c;
            const double* src = g.data() + static_cast<std::size_t>((*n.idx)[e]) * c;
            for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
        break;
      }
      case Op::kRelu: {
        if (ng(n.a)) {
          const Tensor& A = nodes_[n.a].value;
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (A[i] > 0.0) ga[i] += g[i];
          }
        }
        break;
      }
      case Op::kTanh: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
          }
        }
        break;
      }
      case Op::kSigmoid: {
        if (ng(n.a)) {
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
          }
        }
        break;
      }
      case Op::kSoftplus: {
        if (ng(n.a)) {
          const Tensor& A = nodes_[n.a].value;
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] / (1.0 + std::exp(-A[i]));
          }
        }
        break;
      }
      case Op::kLog: {
        if (ng(n.a)) {
          const Tensor& A = nodes_[n.a].value;
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / A[i];
        }
        break;
      }
      case Op::kClampMin: {
        if (ng(n.a)) {
          const Tensor& A = nodes_[n.a].value;
          Tensor& ga = gbuf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (A[i] >= n.c) ga[i] += g[i];
          }
        }
        break;
      }
    }
  }

  GradMap result;
  for (const auto& [name, id] : params_) {
    if (!grads[id].empty()) {
      result[name] = std::move(grads[id]);
    } else {
      result[name] = Tensor::zeros(nodes_[id].value.shape());
    }
  }
  return result;
}

}  // namespace tiode
