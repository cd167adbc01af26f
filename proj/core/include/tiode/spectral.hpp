#pragma once

#include "tiode/fnn.hpp"
#include "tiode/tensor.hpp"

namespace tiode {

// Largest singular value of a rank-2 tensor via power iteration,
// converged to tol or iters exhausted.
double spectral_norm(const Tensor& w, int iters = 200, double tol = 1e-12);

// Upper bound on the Lipschitz constant of an FNN: product of layer
// spectral norms times the Lipschitz constant of every applied
// activation.
double fnn_lipschitz_bound(const FnnParams& params, int iters = 200, double tol = 1e-12);

}  // namespace tiode
