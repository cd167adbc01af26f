#include "tiode/spectral.hpp"

#include <Eigen/Core>

#include <cmath>

#include "tiode/errors.hpp"

namespace tiode {

double spectral_norm(const Tensor& w, int iters, double tol) {
  if (w.rank() != 2) throw ShapeError("spectral_norm: rank-2 tensor required");
  if (w.size() == 0) throw ShapeError("spectral_norm: empty matrix");
  if (iters < 1) throw UsageError("spectral_norm: iters must be >= 1");

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> W(w.data(), w.rows(), w.cols());

  // Deterministic start vector with unequal entries so it is almost never
  // orthogonal to the leading right-singular subspace.
  Eigen::VectorXd v(W.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = 1.0 + 0.01 * static_cast<double>(i);
  }
  v.normalize();

  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd u = W * v;
    const double nu = u.norm();
    if (nu == 0.0) {
      // v landed in the kernel; restart from a basis vector that does not.
      bool restarted = false;
      for (Eigen::Index i = 0; i < W.cols(); ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(W.cols());
        e(i) = 1.0;
        if ((W * e).norm() > 0.0) {
          v = e;
          restarted = true;
          break;
        }
      }
      if (!restarted) return 0.0;  // zero matrix
      continue;
    }
    u /= nu;
    Eigen::VectorXd wt = W.transpose() * u;
    const double sigma_new = wt.norm();
    if (sigma_new == 0.0) return 0.0;
    v = wt / sigma_new;
    if (std::abs(sigma_new - sigma) <= tol * std::max(1.0, sigma_new)) {
      return sigma_new;
    }
    sigma = sigma_new;
  }
  return sigma;
}

double fnn_lipschitz_bound(const FnnParams& params, int iters, double tol) {
  params.validate();
  double bound = 1.0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    bound *= spectral_norm(params.layers[l].weight, iters, tol);
    const bool last = (l + 1 == params.layers.size());
    bound *= activation_lipschitz(last ? params.output_activation : params.activation);
  }
  return bound;
}

}  // namespace tiode
