#pragma once

namespace vactof::constants {

inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double elementary_charge = 1.602177e-19; // C
inline constexpr double amu_kg = 1.66054e-27;             // kg per atomic mass unit

// Wiley-McLaren convention constant: rounded conversion factor that makes the
// time-of-flight formulas come out in microseconds when mass is in amu, energy
// in eV and distances in cm. Kept only for the cross-check path.
inline constexpr double wiley_mclaren_factor = 1.02;

} // namespace vactof::constants
