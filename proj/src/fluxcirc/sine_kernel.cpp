#include "fluxcirc/sine_kernel.hpp"

#include <cmath>

namespace fluxcirc::detail {
namespace {

__attribute__((target("avx2,fma"))) void sine_avx2(const double* __restrict in, double* __restrict out,
                                                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(in[i]);
}

void sine_generic(const double* __restrict in, double* __restrict out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(in[i]);
}

using Kernel = void (*)(const double*, double*, std::size_t);

Kernel pick() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") ? sine_avx2 : sine_generic; }

} // namespace

void sine_block(const double* in, double* out, std::size_t n) {
  static const Kernel kernel = pick();
  kernel(in, out, n);
}

} // namespace fluxcirc::detail
