#include <doctest.h>

#include <cmath>

#include "nvforge/etalon.hpp"

using namespace nvforge::etalon;

TEST_CASE("constructive-interference wavelengths are local maxima") {
  const double n = 2.41, d = 5.4;
  const int m = 37;  // order
  const double lambda_m = 2.0 * n * d * 1e3 / m;
  const double peak = slab_modulation(d, n, lambda_m);
  CHECK(peak == doctest::Approx(1.0 + fringe_visibility(n)).epsilon(1e-9));
  CHECK(peak > slab_modulation(d, n, lambda_m + 2.0));
  CHECK(peak > slab_modulation(d, n, lambda_m - 2.0));
}

TEST_CASE("fringe spacing near 700 nm matches lambda^2 / (2 n d)") {
  const double n = 2.41, d = 5.4;
  // locate two adjacent maxima numerically
  const int m = static_cast<int>(2.0 * n * d * 1e3 / 700.0);
  const double l1 = 2.0 * n * d * 1e3 / m;
  const double l2 = 2.0 * n * d * 1e3 / (m + 1);
  const double spacing = l1 - l2;
  CHECK(spacing == doctest::Approx(18.8).epsilon(0.05));
  CHECK(spacing == doctest::Approx(700.0 * 700.0 / (2.0 * n * d * 1e3)).epsilon(0.06));
}

TEST_CASE("fringe visibility vanishes as the index contrast disappears") {
  CHECK(fringe_visibility(1.0 + 1e-6) < 1e-9);
  CHECK(fringe_visibility(2.41) > 0.25);
}

TEST_CASE("modulation is periodic in 1/lambda and doubling d halves the period") {
  const double n = 2.41, d = 3.0;
  const double x = 1.0 / 700.0;
  const double period = 1.0 / (2.0 * n * d * 1e3);
  CHECK(slab_modulation(d, n, 1.0 / (x + period)) ==
        doctest::Approx(slab_modulation(d, n, 1.0 / x)).epsilon(1e-9));
  CHECK(slab_modulation(2.0 * d, n, 1.0 / (x + period / 2.0)) ==
        doctest::Approx(slab_modulation(2.0 * d, n, 1.0 / x)).epsilon(1e-9));
}

TEST_CASE("guards reject non-physical inputs") {
  CHECK_THROWS_AS(slab_modulation(0.0, 2.41, 700.0), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_psb_spectrum(0.0, 2.41, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_psb_spectrum(5.4, 2.41, -0.1), std::invalid_argument);
  const auto spec = synthesize_psb_spectrum(5.4, 2.41, 0.0);
  CHECK_THROWS_AS(fit_thickness(spec, 2.41, 0.1, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_thickness(spec, 2.41, 5.0, 70.0), std::invalid_argument);
}

TEST_CASE("noiseless round trip recovers the thickness to 0.5 percent") {
  for (double d : {3.8, 5.4}) {
    const auto spec = synthesize_psb_spectrum(d, 2.41, 0.0);
    const auto fit = fit_thickness(spec, 2.41, 1.0, 10.0);
    CHECK(fit.thickness_um == doctest::Approx(d).epsilon(0.005));
  }
}

TEST_CASE("noisy round trip stays within 2 percent across the measured span") {
  for (double d : {1.9, 2.5, 3.8, 5.4}) {
    const auto spec = synthesize_psb_spectrum(d, 2.41, 0.05, 1);
    const auto fit = fit_thickness(spec, 2.41, 1.0, 10.0);
    CHECK(fit.thickness_um == doctest::Approx(d).epsilon(0.02));
  }
}

TEST_CASE("showcase thickness is recovered within 0.1 um") {
  const auto spec = synthesize_psb_spectrum(5.4, 2.41, 0.05, 2);
  const auto fit = fit_thickness(spec, 2.41, 1.0, 10.0);
  CHECK(std::abs(fit.thickness_um - 5.4) <= 0.1);
  CHECK(fit.uncertainty_um < 0.1);
}

TEST_CASE("white noise has no determinable thickness") {
  nvforge::RngStream rng(9, 0);
  Spectrum spec;
  for (int i = 0; i < 1024; ++i) {
    spec.wavelength_nm.push_back(630.0 + i * 170.0 / 1023.0);
    spec.intensity.push_back(100.0 + 5.0 * rng.normal());
  }
  CHECK_THROWS_AS(fit_thickness(spec, 2.41, 1.0, 10.0), IndeterminateThickness);
}

TEST_CASE("unresolved fringes near the top of the range are flagged") {
  const auto spec = synthesize_psb_spectrum(15.0, 2.41, 0.0, 1, 64);
  CHECK_THROWS_AS(fit_thickness(spec, 2.41, 1.0, 20.0), IndeterminateThickness);
}

TEST_CASE("fit is invariant under uniform intensity rescaling") {
  auto spec = synthesize_psb_spectrum(3.8, 2.41, 0.05, 4);
  const auto a = fit_thickness(spec, 2.41, 1.0, 10.0);
  for (auto& v : spec.intensity) v *= 7.25;
  const auto b = fit_thickness(spec, 2.41, 1.0, 10.0);
  CHECK(a.thickness_um == doctest::Approx(b.thickness_um).epsilon(1e-9));
}

TEST_CASE("spectrum invariants are enforced") {
  Spectrum spec;
  spec.wavelength_nm = {700.0, 699.0};
  spec.intensity = {1.0, 1.0};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
