#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tiode/params.hpp"
#include "tiode/tape.hpp"
#include "tiode/tensor.hpp"

namespace tiode::testing {

// Max relative error between reverse-mode gradients and central finite
// differences over every trainable block in the store. build must
// construct the full forward graph from the store and return the scalar
// loss node. The same construction runs once per perturbed entry.
inline double max_grad_rel_error(
    ParamStore& store, const std::function<int(Tape&, const ParamStore&)>& build,
    double h = 1e-5) {
  Tape tape;
  int loss = build(tape, store);
  GradMap grads = tape.backward(loss);

  double worst = 0.0;
  for (auto& blk : store.blocks()) {
    if (!blk.trainable) continue;
    const Tensor& g = grads.at(blk.name);
    for (std::size_t i = 0; i < blk.value.size(); ++i) {
      const double orig = blk.value[i];
      blk.value[i] = orig + h;
      Tape tp;
      const double up = tp.value(build(tp, store))[0];
      blk.value[i] = orig - h;
      Tape tm;
      const double dn = tm.value(build(tm, store))[0];
      blk.value[i] = orig;
      const double fd = (up - dn) / (2.0 * h);
      const double an = g[i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace tiode::testing
