#include "tiode/encoding.hpp"

#include <cmath>

#include "tiode/errors.hpp"

namespace tiode {

Tensor time_encoding(double dt, std::size_t d_hid) {
  if (d_hid == 0 || d_hid % 2 != 0) {
    throw ConfigError("time_encoding: d_hid must be even and positive, got " +
                      std::to_string(d_hid));
  }
  std::vector<double> out(d_hid);
  for (std::size_t i = 0; 2 * i < d_hid; ++i) {
    const double freq =
        std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_hid));
    out[2 * i] = std::sin(dt / freq);
    out[2 * i + 1] = std::cos(dt / freq);
  }
  return Tensor::raw({1, d_hid}, std::move(out));
}

}  // namespace tiode
