#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvforge/units.hpp"

namespace nvforge {

struct Element {
  int z = 0;             // atomic number
  double mass_amu = 0.0;

  void validate() const {
    if (z < 1) throw std::invalid_argument("Element: atomic number must be >= 1");
    if (!(mass_amu > 0.0)) throw std::invalid_argument("Element: mass must be > 0");
  }
};

inline bool operator==(const Element& a, const Element& b) {
  return a.z == b.z && a.mass_amu == b.mass_amu;
}

struct TargetComponent {
  Element element;
  double fraction = 1.0;  // stoichiometric fraction
};

// Amorphous single-layer target. Per-element displacement energies are not
// modelled; one displacement / lattice / surface energy applies to the slab.
struct TargetMaterial {
  std::vector<TargetComponent> components;
  double mass_density_g_cm3 = 0.0;
  double displacement_energy_ev = 0.0;
  double lattice_binding_ev = 0.0;
  double surface_binding_ev = 0.0;

  void validate() const {
    if (components.empty() || components.size() > 4)
      throw std::invalid_argument("TargetMaterial: 1 to 4 elements supported");
    double sum = 0.0;
    for (const auto& c : components) {
      c.element.validate();
      if (!(c.fraction > 0.0))
        throw std::invalid_argument("TargetMaterial: fractions must be > 0");
      sum += c.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("TargetMaterial: fractions must sum to 1");
    if (!(mass_density_g_cm3 > 0.0) || !(displacement_energy_ev > 0.0) ||
        !(lattice_binding_ev > 0.0) || !(surface_binding_ev > 0.0))
      throw std::invalid_argument("TargetMaterial: densities and energies must be > 0");
  }

  double mean_mass_amu() const {
    double m = 0.0;
    for (const auto& c : components) m += c.fraction * c.element.mass_amu;
    return m;
  }

  double mean_z() const {
    double z = 0.0;
    for (const auto& c : components) z += c.fraction * c.element.z;
    return z;
  }
};

inline double atomic_density_per_cm3(const TargetMaterial& material) {
  material.validate();
  return material.mass_density_g_cm3 * units::kAvogadro / material.mean_mass_amu();
}

inline double atomic_density_per_nm3(const TargetMaterial& material) {
  return atomic_density_per_cm3(material) * units::kCm3PerNm3;
}

struct IonBeam {
  Element ion;
  int charge_state = 1;  // provenance only; transport ignores it
  double energy_kev = 0.0;
  double fluence_per_cm2 = 0.0;
  double tilt_deg = 0.0;  // from surface normal

  void validate() const {
    ion.validate();
    if (!(energy_kev > 0.0)) throw std::invalid_argument("IonBeam: energy must be > 0");
    if (!(fluence_per_cm2 > 0.0)) throw std::invalid_argument("IonBeam: fluence must be > 0");
    if (tilt_deg < 0.0 || tilt_deg >= 90.0)
      throw std::invalid_argument("IonBeam: tilt must be in [0, 90) degrees");
  }
};

namespace presets {

inline Element carbon12() { return {6, 12.0}; }
inline Element nitrogen15() { return {7, 15.0001}; }
inline Element carbon_natural() { return {6, 12.011}; }

inline TargetMaterial diamond() {
  TargetMaterial m;
  m.components = {{carbon_natural(), 1.0}};
  m.mass_density_g_cm3 = 3.515;
  m.displacement_energy_ev = 28.0;
  m.lattice_binding_ev = 3.0;
  m.surface_binding_ev = 7.41;
  return m;
}

inline IonBeam beam(Element ion, double energy_kev) {
  IonBeam b;
  b.ion = ion;
  b.charge_state = 1;
  b.energy_kev = energy_kev;
  b.fluence_per_cm2 = energy_kev < 25.0 ? 1e10 : 5e8;
  b.tilt_deg = 7.0;
  return b;
}

inline IonBeam c12_12kev() { return beam(carbon12(), 12.0); }
inline IonBeam c12_50kev() { return beam(carbon12(), 50.0); }
inline IonBeam c12_55kev() { return beam(carbon12(), 55.0); }
inline IonBeam n15_12kev() { return beam(nitrogen15(), 12.0); }
inline IonBeam n15_50kev() { return beam(nitrogen15(), 50.0); }
inline IonBeam n15_55kev() { return beam(nitrogen15(), 55.0); }

}  // namespace presets

}  // namespace nvforge
