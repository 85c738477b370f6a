#pragma once

#include <cmath>
#include <stdexcept>

#include "nvforge/target.hpp"
#include "nvforge/units.hpp"

namespace nvforge::bca {

// Kinetic energy per amu at which an ion moves at the Bohr velocity:
// (1/2) m_u c^2 alpha^2, in keV.
inline constexpr double kBohrVelocityKevPerAmu =
    0.5 * 931494.10242 * 7.2973525693e-3 * 7.2973525693e-3;

// Lindhard-Scharff stopping cross section for one target element, in
// eV*nm^2 per atom: xi_e * 8 pi e^2 a0 * Z1 Z2 / (Z1^2/3 + Z2^2/3)^3/2
// * v/v0 with xi_e = Z1^(1/6). Velocity-proportional regime; valid for
// light ions up to ~100 keV.
inline double lindhard_scharff_cross_section(int z1, double m1_amu, int z2,
                                             double energy_kev) {
  constexpr double kPrefactorEvNm2 =
      8.0 * units::kPi * units::kCoulombEvNm * units::kBohrRadiusNm;
  const double z1_23 = std::pow(z1, 2.0 / 3.0);
  const double z2_23 = std::pow(z2, 2.0 / 3.0);
  const double k = kPrefactorEvNm2 * std::pow(z1, 1.0 / 6.0) * z1 * z2 /
                   std::pow(z1_23 + z2_23, 1.5) /
                   std::sqrt(kBohrVelocityKevPerAmu * m1_amu);
  return k * std::sqrt(energy_kev);
}

// Electronic stopping power dE/dx in eV/nm for an ion of the given species
// at the given lab energy, Bragg-summed over the target composition.
inline double electronic_stopping_ev_nm(const Element& ion,
                                        const TargetMaterial& target,
                                        double energy_kev) {
  if (!(energy_kev > 0.0))
    throw std::invalid_argument("electronic_stopping: energy must be > 0");
  ion.validate();
  const double n_per_nm3 = atomic_density_per_nm3(target);
  double cross = 0.0;  // eV*nm^2, composition-weighted
  for (const auto& c : target.components)
    cross += c.fraction * lindhard_scharff_cross_section(
                              ion.z, ion.mass_amu, c.element.z, energy_kev);
  return cross * n_per_nm3;
}

}  // namespace nvforge::bca
