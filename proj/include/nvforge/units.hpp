#pragma once

namespace nvforge::units {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kAvogadro = 6.02214076e23;  // 1/mol

// Bohr radius and the Coulomb constant e^2/(4 pi eps0), in nm / eV*nm.
inline constexpr double kBohrRadiusNm = 0.0529177210903;
inline constexpr double kCoulombEvNm = 1.43996454;

// Unit conversions used at module boundaries.
inline constexpr double kNmPerCm = 1.0e7;
inline constexpr double kCm3PerNm3 = 1.0e-21;

}  // namespace nvforge::units
