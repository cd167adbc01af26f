#pragma once

#include <cstdint>
#include <string_view>

namespace tiode {

// All randomness in the project flows from one root seed, expanded into
// independent substreams by domain tag or counter. Stream derivation and
// sampling are implemented from raw 64-bit draws so results are identical
// across standard-library versions.
//
//   root seed --fork("datagen")--> simulator stream
//             --fork("train")----> training stream --fork(step)--> ...
//
// fork() derives from the construction seed, not the evolved generator
// state, so forks are independent of how many values were drawn.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal, Box-Muller
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  // Random sign, +1 or -1.
  double sign();

  std::uint64_t seed() const { return seed_; }
  Rng fork(std::string_view tag) const;
  Rng fork(std::uint64_t index) const;

private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {0, 0, 0, 0};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace tiode
