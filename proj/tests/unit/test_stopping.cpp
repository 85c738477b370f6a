#include <doctest.h>

#include <cmath>

#include "nvforge/stopping.hpp"

using namespace nvforge;
using namespace nvforge::bca;

TEST_CASE("electronic stopping follows the sqrt(E) law") {
  const auto diamond = presets::diamond();
  const auto c12 = presets::carbon12();
  const double s1 = electronic_stopping_ev_nm(c12, diamond, 10.0);
  const double s4 = electronic_stopping_ev_nm(c12, diamond, 40.0);
  CHECK(s4 == doctest::Approx(2.0 * s1).epsilon(1e-12));
}

TEST_CASE("carbon on diamond at 50 keV matches the direct formula") {
  const auto diamond = presets::diamond();
  const double se = electronic_stopping_ev_nm(presets::carbon12(), diamond, 50.0);

  // independent evaluation: xi_e 8 pi e^2 a0 Z1 Z2 / (Z1^2/3 + Z2^2/3)^1.5
  // * v/v0 * N
  const double e2a0 = 1.43996454 * 0.0529177210903;  // eV nm^2
  const double pref = std::pow(6.0, 1.0 / 6.0) * 8.0 * nvforge::units::kPi * e2a0;
  const double z_term = 36.0 / std::pow(2.0 * std::pow(6.0, 2.0 / 3.0), 1.5);
  const double bohr_kev_per_amu = 0.5 * 931494.10242 * 7.2973525693e-3 * 7.2973525693e-3;
  const double v_ratio = std::sqrt(50.0 / (bohr_kev_per_amu * 12.0));
  const double n_nm3 = atomic_density_per_cm3(diamond) * 1e-21;
  const double by_hand = pref * z_term * v_ratio * n_nm3;
  CHECK(se == doctest::Approx(by_hand).epsilon(1e-6));
  CHECK(se > 0.0);
  CHECK(se == doctest::Approx(394.0).epsilon(0.02));
}

TEST_CASE("species ratio reduces to the Z, A prefactors") {
  const auto diamond = presets::diamond();
  const auto c12 = presets::carbon12();
  const auto n15 = presets::nitrogen15();
  const double ratio_20 = electronic_stopping_ev_nm(n15, diamond, 20.0) /
                          electronic_stopping_ev_nm(c12, diamond, 20.0);
  const double ratio_45 = electronic_stopping_ev_nm(n15, diamond, 45.0) /
                          electronic_stopping_ev_nm(c12, diamond, 45.0);
  CHECK(ratio_20 == doctest::Approx(ratio_45).epsilon(1e-12));  // energy cancels

  auto prefactor = [](int z1, double m1) {
    const double z23 = std::pow(z1, 2.0 / 3.0) + std::pow(6.0, 2.0 / 3.0);
    return std::pow(z1, 1.0 / 6.0) * z1 / std::pow(z23, 1.5) / std::sqrt(m1);
  };
  CHECK(ratio_20 ==
        doctest::Approx(prefactor(7, 15.0001) / prefactor(6, 12.0)).epsilon(1e-9));
}

TEST_CASE("stopping rejects non-positive energy") {
  CHECK_THROWS_AS(
      electronic_stopping_ev_nm(presets::carbon12(), presets::diamond(), 0.0),
      std::invalid_argument);
}
