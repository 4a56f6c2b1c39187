#pragma once

#include <cmath>

// Unit conventions used throughout the library:
//   energies        E/h in GHz
//   times           microseconds, or milliseconds where a field says so
//   rates           1/ms
//   flux            dimensionless, in units of the flux quantum
//   temperature     kelvin
//   gap             microelectronvolt
//   cavity rates    linear frequency in MHz (kappa/2pi, chi/2pi)
// Every formula that mixes unit systems converts through this header.

namespace fluxonium::units {

inline constexpr double planck_h = 6.62607015e-34;        // J s
inline constexpr double hbar = planck_h / (2.0 * M_PI);   // J s
inline constexpr double boltzmann_kb = 1.380649e-23;      // J / K
inline constexpr double electron_charge = 1.602176634e-19;// C

inline constexpr double ghz_to_joule(double f_ghz) { return planck_h * f_ghz * 1e9; }
inline constexpr double uev_to_joule(double e_uev) { return e_uev * 1e-6 * electron_charge; }

// h f / (k_B T), the Boltzmann exponent for a transition at f (GHz) and T (K).
inline double thermal_exponent(double f_ghz, double temperature_k) {
    return ghz_to_joule(f_ghz) / (boltzmann_kb * temperature_k);
}

// angular frequency (rad/s) of a linear frequency given in MHz
inline constexpr double mhz_to_angular(double f_mhz) { return 2.0 * M_PI * f_mhz * 1e6; }

inline constexpr double per_second_to_per_ms(double rate_per_s) { return rate_per_s * 1e-3; }

}  // namespace fluxonium::units
