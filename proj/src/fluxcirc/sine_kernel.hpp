#pragma once

#include <cstddef>

namespace fluxcirc::detail {

// out[i] = sin(in[i]); compiled separately so the loop can use vector math.
void sine_block(const double* in, double* out, std::size_t n);

} // namespace fluxcirc::detail
