#include "tiode/solver.hpp"

#include <cmath>

#include "tiode/errors.hpp"

namespace tiode {

const char* solver_method_name(SolverMethod m) {
  return m == SolverMethod::kEuler ? "euler" : "rk4";
}

SolverMethod solver_method_from_name(const std::string& s) {
  if (s == "euler") return SolverMethod::kEuler;
  if (s == "rk4") return SolverMethod::kRk4;
  throw ConfigError("unknown solver method '" + s + "' (expected euler|rk4)");
}

void SolverConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("SolverConfig: step must be > 0");
  if (eval_times.empty()) throw ConfigError("SolverConfig: eval_times must be non-empty");
  double prev = 0.0;
  for (double t : eval_times) {
    if (!(t > prev)) throw ConfigError("SolverConfig: eval_times must be strictly increasing");
    const double gap = t - prev;
    const double k = std::round(gap / step);
    if (std::abs(k * step - gap) > 1e-9) {
      throw ConfigError("SolverConfig: step must divide the gap ending at t=" +
                        std::to_string(t));
    }
    prev = t;
  }
}

std::vector<int> ode_solve(Tape& tape, const FieldFn& field, int z0,
                           const SolverConfig& cfg) {
  cfg.validate();
  const double h = cfg.step;
  int z = z0;
  double t = 0.0;
  long step_index = 0;
  std::vector<int> out;
  out.reserve(cfg.eval_times.size());

  for (double target : cfg.eval_times) {
    const long n_steps = std::lround((target - t) / h);
    for (long s = 0; s < n_steps; ++s) {
      if (cfg.method == SolverMethod::kEuler) {
        z = tape.add(z, tape.scale(field(tape, z, t), h));
      } else {
        int k1 = field(tape, z, t);
        int k2 = field(tape, tape.add(z, tape.scale(k1, h / 2.0)), t + h / 2.0);
        int k3 = field(tape, tape.add(z, tape.scale(k2, h / 2.0)), t + h / 2.0);
        int k4 = field(tape, tape.add(z, tape.scale(k3, h)), t + h);
        int incr = tape.add(tape.add(k1, k4), tape.scale(tape.add(k2, k3), 2.0));
        z = tape.add(z, tape.scale(incr, h / 6.0));
      }
      t += h;
      ++step_index;
      if (!tape.value(z).all_finite()) {
        throw DivergenceError("ode_solve: non-finite state at step " +
                              std::to_string(step_index) + " (t=" + std::to_string(t) + ")");
      }
    }
    out.push_back(z);
  }
  return out;
}

}  // namespace tiode
