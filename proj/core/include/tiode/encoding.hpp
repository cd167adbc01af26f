#pragma once

#include "tiode/tensor.hpp"

namespace tiode {

// Sinusoidal time embedding: TE[2i] = sin(dt / 10000^(2i/d_hid)),
// TE[2i+1] = cos(dt / 10000^(2i/d_hid)). d_hid must be even.
Tensor time_encoding(double dt, std::size_t d_hid);

}  // namespace tiode
