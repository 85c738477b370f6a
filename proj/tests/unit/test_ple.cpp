#include <doctest.h>

#include <cmath>

#include "nvforge/ple.hpp"

using namespace nvforge::ple;

namespace {

PleScanConfig quick_scan(double span_mhz, int points = 61) {
  PleScanConfig cfg;
  cfg.detuning_min_mhz = -span_mhz;
  cfg.detuning_max_mhz = span_mhz;
  cfg.detuning_step_mhz = 2.0 * span_mhz / (points - 1);
  cfg.dwell_ms = 2.0;
  cfg.n_scans = 10;
  cfg.collection_rate_cps = 3e5;
  return cfg;
}

}  // namespace

TEST_CASE("power broadening follows sqrt(1 + s)") {
  CHECK(power_broadened_width(13.0, 0.0) == doctest::Approx(13.0));
  CHECK(power_broadened_width(13.0, 8.0) == doctest::Approx(39.0));
  CHECK(power_broadened_width(13.0, 3.0) == doctest::Approx(26.0));
  CHECK_THROWS_AS(power_broadened_width(13.0, -0.5), std::invalid_argument);
}

TEST_CASE("voigt oracle limits and cross-check") {
  CHECK(voigt_fwhm_oracle(50.0, 0.0) == doctest::Approx(50.0));
  CHECK(voigt_fwhm_oracle(0.0, 80.0) == doctest::Approx(80.0));
  // Olivero-Longbothum approximation as an independent route
  const double approx = 0.5346 * 100.0 + std::sqrt(0.2166 * 100.0 * 100.0 + 100.0 * 100.0);
  CHECK(voigt_fwhm_oracle(100.0, 100.0) == doctest::Approx(approx).epsilon(0.01));
}

TEST_CASE("gaussian fit is exact on clean gaussian data") {
  PleScan scan;
  const double amp = 640.0, center = 12.0, sigma = 40.0, base = 25.0;
  for (int i = -40; i <= 40; ++i) {
    const double x = i * 6.0;
    scan.detuning_mhz.push_back(x);
    const double t = (x - center) / sigma;
    scan.mean_counts.push_back(amp * std::exp(-0.5 * t * t) + base);
  }
  const auto fit = fit_line_gaussian(scan);
  CHECK(fit.fwhm_mhz == doctest::Approx(sigma * LineFit::kFwhmPerSigma).epsilon(1e-6));
  CHECK(fit.center_mhz == doctest::Approx(center).epsilon(1e-6));
  CHECK(fit.amplitude == doctest::Approx(amp).epsilon(1e-6));
  CHECK(fit.baseline == doctest::Approx(base).epsilon(1e-4));
  CHECK(!fit.unresolved);
}

TEST_CASE("gaussian fit of a lorentzian lands within 20 percent") {
  EmitterModel em;
  em.gamma_h_mhz = 40.0;
  PleScanConfig cfg = quick_scan(80.0);  // span = 4x FWHM
  const auto profile = expected_single_window_profile(em, cfg);
  const auto fit = fit_line_gaussian(profile);
  CHECK(fit.fwhm_mhz >= 0.8 * 40.0);
  CHECK(fit.fwhm_mhz <= 1.2 * 40.0);
}

TEST_CASE("no jumps and weak drive recover the homogeneous width") {
  EmitterModel em;
  em.gamma_h_mhz = 13.0;
  em.background_rate_cps = 200.0;
  const auto cfg = quick_scan(2.5 * 13.0);
  double mean = 0.0;
  const int k = 6;
  for (int s = 0; s < k; ++s)
    mean += fit_line_gaussian(simulate_ple_scan(em, cfg, 50 + s, 0)).fwhm_mhz;
  mean /= k;
  CHECK(mean == doctest::Approx(13.0).epsilon(0.10));
}

TEST_CASE("jump-broadened scans match the voigt convolution oracle") {
  EmitterModel em;
  em.gamma_h_mhz = 13.0;
  em.jump_sigma_mhz = 60.0;
  em.background_rate_cps = 300.0;
  const double expected =
      voigt_fwhm_oracle(13.0, LineFit::kFwhmPerSigma * 60.0);
  const auto cfg = quick_scan(3.2 * expected, 81);
  double mean = 0.0;
  const int k = 6;
  for (int s = 0; s < k; ++s)
    mean += fit_line_gaussian(simulate_ple_scan(em, cfg, 100 + s, 0)).fwhm_mhz;
  mean /= k;
  CHECK(mean == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("background-only scans are flat") {
  EmitterModel em;
  em.gamma_h_mhz = 13.0;
  em.background_rate_cps = 5e4;
  auto cfg = quick_scan(100.0);
  cfg.collection_rate_cps = 0.0;
  const auto scan = simulate_ple_scan(em, cfg, 12, 0);
  double lo = scan.mean_counts[0], hi = scan.mean_counts[0], sum = 0.0;
  for (double v : scan.mean_counts) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / scan.mean_counts.size();
  CHECK((hi - lo) / mean < 0.25);
}

TEST_CASE("fitted width grows with jump size and drive") {
  EmitterModel em;
  em.gamma_h_mhz = 13.0;
  em.background_rate_cps = 100.0;
  double prev = 0.0;
  for (double sj : {0.0, 40.0, 120.0}) {
    em.jump_sigma_mhz = sj;
    const double width = voigt_fwhm_oracle(13.0, LineFit::kFwhmPerSigma * std::max(sj, 1.0));
    const auto cfg = quick_scan(std::max(3.0 * width, 40.0), 81);
    double mean = 0.0;
    for (int s = 0; s < 5; ++s)
      mean += fit_line_gaussian(simulate_ple_scan(em, cfg, 31 + s, 0)).fwhm_mhz;
    mean /= 5;
    CHECK(mean > prev);
    prev = mean;
  }
  em.jump_sigma_mhz = 0.0;
  double narrow = prev = 0.0;
  for (double s : {0.0, 3.0}) {
    em.saturation = s;
    const auto cfg = quick_scan(80.0, 81);
    double mean = 0.0;
    for (int k = 0; k < 5; ++k)
      mean += fit_line_gaussian(simulate_ple_scan(em, cfg, 77 + k, 0)).fwhm_mhz;
    mean /= 5;
    if (s == 0.0)
      narrow = mean;
    else
      CHECK(mean > narrow);
  }
}

TEST_CASE("single-window profile is narrower than the full sequence") {
  EmitterModel em;
  em.gamma_h_mhz = 13.0;
  em.jump_sigma_mhz = 60.0;
  em.saturation = 2.0;
  const auto cfg = quick_scan(450.0, 91);
  const auto dephasing = fit_line_gaussian(expected_single_window_profile(em, cfg));
  const auto extrinsic = fit_line_gaussian(simulate_ple_scan(em, cfg, 3, 0));
  const double pb = power_broadened_width(13.0, 2.0);
  CHECK(dephasing.fwhm_mhz >= 0.8 * pb);
  CHECK(dephasing.fwhm_mhz <= 1.3 * pb);
  CHECK(dephasing.fwhm_mhz < extrinsic.fwhm_mhz);
}

TEST_CASE("total counts scale with dwell time") {
  EmitterModel em;
  em.gamma_h_mhz = 20.0;
  em.jump_sigma_mhz = 20.0;
  em.background_rate_cps = 1000.0;
  auto cfg = quick_scan(150.0);
  const auto one = simulate_ple_scan(em, cfg, 8, 0);
  cfg.dwell_ms *= 2.0;
  const auto two = simulate_ple_scan(em, cfg, 8, 0);
  double s1 = 0.0, s2 = 0.0;
  for (double v : one.mean_counts) s1 += v;
  for (double v : two.mean_counts) s2 += v;
  CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("configuration and fit preconditions are enforced") {
  PleScanConfig cfg;
  cfg.repump_us = 4.0;
  cfg.probe_us = 8.0;  // 12 us > 10 us period at 100 kHz
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  PleScan scan;
  scan.detuning_mhz = {0, 1, 2};
  scan.mean_counts = {1, 2, 1};
  CHECK_THROWS_AS(fit_line_gaussian(scan), std::invalid_argument);

  // span below twice the apparent width
  PleScan wide;
  for (int i = 0; i <= 20; ++i) {
    wide.detuning_mhz.push_back(i * 1.0);
    wide.mean_counts.push_back(100.0);  // flat-top: apparent width = span
  }
  CHECK_THROWS_AS(fit_line_gaussian(wide), std::invalid_argument);
}
