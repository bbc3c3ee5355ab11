#pragma once

#include <numbers>

/// Physical constants (CODATA 2018, exact SI values where defined), stored to
/// 12 significant digits. Every module reads them from here.
namespace cbjj::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;         // J s
inline constexpr double hbar = 1.05457181765e-34;        // J s
inline constexpr double boltzmann = 1.380649e-23;        // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double flux_quantum = 2.06783384846e-15;     // Wb, h / 2e

}  // namespace cbjj::constants
