#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tiode/tape.hpp"

namespace tiode {

enum class SolverMethod { kEuler, kRk4 };

const char* solver_method_name(SolverMethod m);
SolverMethod solver_method_from_name(const std::string& s);

// Fixed-step integration plan. eval_times are offsets from the initial
// state's time (t = 0); the step must divide every inter-time gap.
struct SolverConfig {
  SolverMethod method = SolverMethod::kRk4;
  double step = 0.25;
  std::vector<double> eval_times;

  void validate() const;
};

// The field builds dZ/dt on the tape from the current state node.
using FieldFn = std::function<int(Tape&, int z, double t)>;

// Integrates from z0 at t = 0 and returns the state node at each
// requested time. Fully differentiable: every solver step is tape ops.
// Throws DivergenceError naming the step if a state goes non-finite.
std::vector<int> ode_solve(Tape& tape, const FieldFn& field, int z0,
                           const SolverConfig& cfg);

}  // namespace tiode
