#pragma once

// SI constants and the handful of unit conversions used throughout.
// Everything internal is SI unless a function name says otherwise.

namespace mtsim::units {

inline constexpr double hbar_SI = 1.054571817e-34;   // J s
inline constexpr double hbar_eV = 6.582119569e-16;   // eV s
inline constexpr double c_SI = 2.99792458e8;         // m/s
inline constexpr double hbar_c_eV_m = 1.973269804e-7; // eV m
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double eV_to_J = 1.602176634e-19;
inline constexpr double proton_mass_eV = 938.27208816e6; // eV (mc^2)

inline constexpr double GeV_to_eV = 1e9;

} // namespace mtsim::units
