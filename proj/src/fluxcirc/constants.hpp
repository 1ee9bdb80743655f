#pragma once

#include <numbers>

namespace fluxcirc {

inline constexpr double pi = std::numbers::pi;

/// Magnetic flux quantum h/(2e) in webers (exact since the 2019 SI).
inline constexpr double flux_quantum = 2.067833848461929e-15;

} // namespace fluxcirc
