// Acceptance suite: every criterion prints one PASS/FAIL line with the
// measured values so a run can be audited from its log alone.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "nvforge/cascade.hpp"
#include "nvforge/damage.hpp"
#include "nvforge/etalon.hpp"
#include "nvforge/hom.hpp"
#include "nvforge/linewidth_stats.hpp"
#include "nvforge/ple.hpp"
#include "nvforge/scattering.hpp"

using namespace nvforge;

namespace {

constexpr std::uint64_t kSeed = 42;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[ACCEPTANCE] %2d %-46s %s  %s\n", index, name.c_str(),
              ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

struct PeakPair {
  double ion_nm = 0.0;
  double vac_nm = 0.0;
};

PeakPair fc_peaks(const IonBeam& beam, int ions, double bin_nm, std::uint64_t seed,
                  int threads) {
  const auto recs = bca::run_implantation(beam, presets::diamond(), 500.0, ions,
                                          bca::DamageMode::kFullCascade, seed, threads);
  auto [ih, vh] = damage::build_depth_histograms(recs, bin_nm);
  return {damage::peak_depth_nm(ih), damage::peak_depth_nm(vh)};
}

double kp_yield(const IonBeam& beam, int ions, std::uint64_t seed) {
  const auto recs = bca::run_implantation(beam, presets::diamond(), 500.0, ions,
                                          bca::DamageMode::kKinchinPease, seed, 0);
  return damage::vacancy_yield(recs);
}

}  // namespace

TEST_CASE("criterion 1: implanted-ion and vacancy depth maxima") {
  using clock = std::chrono::steady_clock;

  const auto t0 = clock::now();
  const auto low = fc_peaks(presets::c12_12kev(), 10000, 0.5, kSeed, 1);
  const double t_low = std::chrono::duration<double>(clock::now() - t0).count();

  const auto t1 = clock::now();
  const auto high = fc_peaks(presets::c12_50kev(), 10000, 2.0, kSeed, 1);
  const double t_high = std::chrono::duration<double>(clock::now() - t1).count();

  const bool peaks_ok = within(low.vac_nm, 15.3, 0.30) && within(low.ion_nm, 20.4, 0.30) &&
                        within(high.vac_nm, 64.6, 0.30) && within(high.ion_nm, 79.9, 0.30);
  const bool time_ok = t_low < 60.0 && t_high < 60.0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "12keV vac/ion %.1f/%.1f nm (15.3/20.4 +-30%%), 50keV %.1f/%.1f nm "
                "(64.6/79.9), runtimes %.0f/%.0f s",
                low.vac_nm, low.ion_nm, high.vac_nm, high.ion_nm, t_low, t_high);
  report(1, "depth maxima, 1e4-ion runs", peaks_ok && time_ok, buf);
  CHECK(peaks_ok);
  CHECK(time_ok);
}

TEST_CASE("criterion 2: vacancy yields and species yield ratios") {
  const double c12 = kp_yield(presets::c12_12kev(), 20000, kSeed);
  const double n12 = kp_yield(presets::n15_12kev(), 20000, kSeed);
  const double c50 = kp_yield(presets::c12_50kev(), 20000, kSeed);
  const double n50 = kp_yield(presets::n15_50kev(), 20000, kSeed);

  const bool yields_ok = within(c12, 68.0, 0.30) && within(n12, 74.0, 0.30) &&
                         within(c50, 151.0, 0.30) && within(n50, 175.0, 0.30);
  const double r12 = c12 / n12;
  const double r50 = c50 / n50;
  const bool ratios_ok = within(r12, 68.0 / 74.0, 0.10) && within(r50, 151.0 / 175.0, 0.10);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "KP yields C12/N15: %.1f/%.1f (12 keV), %.1f/%.1f (50 keV); "
                "ratios %.3f (0.92) and %.3f (0.86)",
                c12, n12, c50, n50, r12, r50);
  report(2, "vacancy yields within 30%, ratios within 10%", yields_ok && ratios_ok, buf);
  CHECK(yields_ok);
  CHECK(ratios_ok);
}

TEST_CASE("criterion 3: species depth-difference bounds") {
  // Peak positions averaged over four pinned streams; single-run smoothed
  // argmax on these plateau-shaped profiles wobbles by a bin.
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  auto mean_peaks = [&](const IonBeam& beam, double bin_nm) {
    PeakPair acc;
    for (const auto s : seeds) {
      const auto p = fc_peaks(beam, 20000, bin_nm, s, 0);
      acc.ion_nm += p.ion_nm;
      acc.vac_nm += p.vac_nm;
    }
    acc.ion_nm /= seeds.size();
    acc.vac_nm /= seeds.size();
    return acc;
  };
  const auto c12 = mean_peaks(presets::c12_12kev(), 1.0);
  const auto n12 = mean_peaks(presets::n15_12kev(), 1.0);
  const auto c50 = mean_peaks(presets::c12_50kev(), 2.0);
  const auto n50 = mean_peaks(presets::n15_50kev(), 2.0);

  const double ion12 = std::abs(n12.ion_nm - c12.ion_nm) / n12.ion_nm;
  const double vac12 = std::abs(n12.vac_nm - c12.vac_nm) / n12.vac_nm;
  const double ion50 = std::abs(n50.ion_nm - c50.ion_nm) / n50.ion_nm;
  const double vac50 = std::abs(n50.vac_nm - c50.vac_nm) / n50.vac_nm;

  const bool ion_ok = ion12 < 0.20 && ion50 < 0.20;
  const bool vac_ok = vac12 < 0.15 && vac50 < 0.15;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "relative ion deltas %.3f/%.3f (<0.20), vacancy deltas %.3f/%.3f (<0.15)",
                ion12, ion50, vac12, vac50);
  report(3, "N15-vs-C12 depth differences", ion_ok && vac_ok, buf);
  CHECK(ion_ok);
  CHECK(vac_ok);
}

TEST_CASE("criterion 4: closed-form scattering against the integral") {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double eps = 1e-4 * std::pow(1e6, i / 19.0);
    for (int j = 0; j < 20; ++j) {
      const double b = 10.0 * j / 19.0;
      const double q = bca::scattering_angle_quadrature(eps, b);
      const double m = bca::scattering_angle_magic(eps, b);
      worst = std::max(worst, std::abs(std::cos(m / 2) - std::cos(q / 2)));
    }
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = worst <= 0.01 && elapsed < 5.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst |dcos(theta/2)| = %.4f on 20x20 grid, %.2f s",
                worst, elapsed);
  report(4, "MAGIC vs quadrature oracle", ok, buf);
  CHECK(worst <= 0.01);
  CHECK(elapsed < 5.0);
}

TEST_CASE("criterion 5: per-cascade energy conservation") {
  RngStream pick(kSeed, 0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    IonBeam beam;
    beam.ion = (pick.uniform() < 0.5) ? presets::carbon12() : presets::nitrogen15();
    beam.energy_kev = 1.0 + 54.0 * pick.uniform();
    beam.fluence_per_cm2 = 1e10;
    beam.tilt_deg = 75.0 * pick.uniform();
    const auto mode = pick.uniform() < 0.5 ? bca::DamageMode::kFullCascade
                                           : bca::DamageMode::kKinchinPease;
    RngStream rng(kSeed + 1, static_cast<std::uint64_t>(i));
    const auto rec = bca::transport_ion(beam, presets::diamond(), 400.0, mode, rng);
    worst = std::max(worst, rec.energy_balance_error());
  }
  const bool ok = worst <= 1e-3;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst relative imbalance %.2e over 1000 cascades", worst);
  report(5, "energy bookkeeping within 0.1%", ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 6: determinism across worker counts") {
  bool ok = true;
  for (auto mode : {bca::DamageMode::kFullCascade, bca::DamageMode::kKinchinPease}) {
    const auto a = bca::run_implantation(presets::c12_12kev(), presets::diamond(),
                                         400.0, 1000, mode, kSeed, 1);
    const auto b = bca::run_implantation(presets::c12_12kev(), presets::diamond(),
                                         400.0, 1000, mode, kSeed, 8);
    if (a.size() != b.size()) {
      ok = false;
      continue;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == b[i])) ok = false;
  }
  report(6, "1 vs 8 workers bit-identical", ok, "1000 ions, both damage modes");
  CHECK(ok);
}

TEST_CASE("criterion 7: etalon thickness round trip") {
  bool ok = true;
  std::string detail;
  for (double d : {1.9, 2.5, 3.8, 5.4}) {
    const auto spec = etalon::synthesize_psb_spectrum(d, 2.41, 0.05, 1);
    const auto fit = etalon::fit_thickness(spec, 2.41, 1.0, 10.0);
    const bool this_ok = within(fit.thickness_um, d, 0.02);
    ok = ok && this_ok;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f->%.3f ", d, fit.thickness_um);
    detail += buf;
  }
  report(7, "fit(synthesize(d, 5% noise)) within 2%", ok, detail);
  CHECK(ok);
}

TEST_CASE("criterion 8: PLE linewidths match the Voigt oracle") {
  const int n_seeds = 20;
  double worst = 0.0;
  for (double gh : {13.0, 20.0, 26.0}) {
    for (double sj : {40.0, 60.0, 120.0}) {
      ple::EmitterModel em;
      em.gamma_h_mhz = gh;
      em.jump_sigma_mhz = sj;
      em.background_rate_cps = 300.0;
      const double expected =
          ple::voigt_fwhm_oracle(gh, ple::LineFit::kFwhmPerSigma * sj);
      ple::PleScanConfig cfg;
      const double span = 3.2 * expected;
      cfg.detuning_min_mhz = -span;
      cfg.detuning_max_mhz = span;
      cfg.detuning_step_mhz = 2.0 * span / 80.0;
      cfg.dwell_ms = 2.0;
      cfg.n_scans = 10;
      cfg.collection_rate_cps = 3e5;
      double mean = 0.0;
      for (int s = 0; s < n_seeds; ++s)
        mean += ple::fit_line_gaussian(ple::simulate_ple_scan(em, cfg, kSeed + s, 0)).fwhm_mhz;
      mean /= n_seeds;
      worst = std::max(worst, std::abs(mean / expected - 1.0));
    }
  }

  ple::EmitterModel narrow;
  narrow.gamma_h_mhz = 13.0;
  narrow.background_rate_cps = 200.0;
  ple::PleScanConfig cfg;
  cfg.detuning_min_mhz = -2.5 * 13.0;
  cfg.detuning_max_mhz = 2.5 * 13.0;
  cfg.detuning_step_mhz = 5.0 * 13.0 / 60.0;
  cfg.dwell_ms = 2.0;
  cfg.n_scans = 10;
  cfg.collection_rate_cps = 3e5;
  double mean = 0.0;
  for (int s = 0; s < n_seeds; ++s)
    mean += ple::fit_line_gaussian(ple::simulate_ple_scan(narrow, cfg, kSeed + s, 0)).fwhm_mhz;
  mean /= n_seeds;
  const double limit_err = std::abs(mean / 13.0 - 1.0);

  const bool ok = worst <= 0.05 && limit_err <= 0.10;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "worst grid deviation %.3f (<=0.05); jump-free width %.2f MHz vs 13 (%.3f)",
                worst, mean, limit_err);
  report(8, "simulated FWHM vs convolution oracle", ok, buf);
  CHECK(worst <= 0.05);
  CHECK(limit_err <= 0.10);
}

TEST_CASE("criterion 9: statistics pipeline") {
  RngStream rng(kSeed, 0);
  const auto big = stats::sample_lognormal(rng, std::log(143.0), 0.9, 10000);
  const auto fit = stats::lognormal_mle(big);
  const bool mle_ok = within(fit.median_mhz, 143.0, 0.03);

  const double mu = std::log(143.0), sigma = 0.9;
  int covered = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    RngStream trial_rng(kSeed + 7, static_cast<std::uint64_t>(t));
    const auto v = stats::sample_lognormal(trial_rng, mu, sigma, 50);
    const auto band = stats::ecdf_with_band(v, 0.05);
    bool inside = true;
    for (std::size_t i = 0; i < band.x.size() && inside; ++i) {
      const double truth = stats::lognormal_cdf(band.x[i], mu, sigma);
      const double step_lo = static_cast<double>(i) / band.x.size();
      if (truth > band.f[i] + band.epsilon || truth < step_lo - band.epsilon)
        inside = false;
    }
    if (inside) ++covered;
  }
  const double coverage = static_cast<double>(covered) / trials;
  const bool dkw_ok = coverage >= 0.94;

  // 50-keV-class two-sample mixture fixture
  RngStream ra(kSeed + 11, 0);
  auto mix = stats::sample_lognormal(ra, std::log(143.0),
                                     std::sqrt(2.0 * std::log(227.0 / 143.0)), 1000);
  RngStream rb(kSeed + 11, 1);
  const auto b = stats::sample_lognormal(rb, std::log(138.0),
                                         std::sqrt(2.0 * std::log(181.0 / 138.0)), 1000);
  mix.insert(mix.end(), b.begin(), b.end());
  const double frac = stats::fraction_below(mix, 150.0);
  const bool frac_ok = std::abs(frac - 0.54) <= 0.05;

  const bool ok = mle_ok && dkw_ok && frac_ok;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "median %.1f (143 +-3%%), DKW coverage %.3f (>=0.94), narrow fraction %.3f "
                "(0.54 +-0.05)",
                fit.median_mhz, coverage, frac);
  report(9, "lognormal MLE, DKW coverage, narrow fraction", ok, buf);
  CHECK(mle_ok);
  CHECK(dkw_ok);
  CHECK(frac_ok);
}

TEST_CASE("criterion 10: indistinguishability threshold") {
  const double max_w = hom::max_linewidth_for_visibility(12.0, 300.0, 0.9);
  const bool range_ok = max_w >= 120.0 && max_w <= 180.0;

  hom::PhotonSource src;
  src.lifetime_ns = 12.0;
  double worst = 0.0;
  for (double fw : {40.0, 100.0, 150.0, 300.0, 600.0}) {
    for (double wp : {100.0, 200.0, 300.0, 600.0, 1000.0}) {
      src.measured_fwhm_mhz = fw;
      const double closed = hom::hom_visibility(src, {wp});
      const double mc = hom::hom_visibility_mc(src, {wp}, 4000000, kSeed, 0);
      worst = std::max(worst, std::abs(closed - mc));
    }
  }
  const bool mc_ok = worst <= 0.02;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "max linewidth %.1f MHz (in [120,180]); worst |closed-MC| %.4f (<=0.02)",
                max_w, worst);
  report(10, "filtered two-photon visibility", range_ok && mc_ok, buf);
  CHECK(range_ok);
  CHECK(mc_ok);
}

TEST_CASE("criterion 11: entanglement rate gain") {
  const double gain = hom::barrett_kok_gain(0.03, 0.30);
  const bool ok = std::abs(gain - 100.0) < 1e-9;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "10x ZPL fraction -> %.1fx success", gain);
  report(11, "quadratic heralding gain", ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 12: no-trend statistics across thickness") {
  std::vector<stats::LinewidthSample> samples;
  const double mu = std::log(140.0), sigma = 0.85;
  for (int region = 0; region < 6; ++region) {
    RngStream rng(kSeed + 21, static_cast<std::uint64_t>(region));
    const auto v = stats::sample_lognormal(rng, mu, sigma, 60);
    for (double w : v)
      samples.push_back({w, 1.9 + 0.6 * region, "S", "S" + std::to_string(region + 1)});
  }
  const auto table = stats::median_by_thickness(samples);
  double lo_max = 0.0, hi_min = 1e300;
  for (const auto& row : table.rows) {
    lo_max = std::max(lo_max, row.fit.median_mhz / row.fit.geometric_std);
    hi_min = std::min(hi_min, row.fit.median_mhz * row.fit.geometric_std);
  }
  const bool ok = table.rows.size() == 6 && lo_max < hi_min;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "6 thickness groups over 1.9-4.9 um, interval overlap %s",
                ok ? "yes" : "no");
  report(12, "overlapping geometric-std intervals", ok, buf);
  CHECK(ok);
}
