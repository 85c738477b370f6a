#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "nvforge/fit.hpp"
#include "nvforge/rng.hpp"
#include "nvforge/units.hpp"

namespace nvforge::ple {

struct EmitterModel {
  double gamma_h_mhz = 13.0;        // homogeneous FWHM
  double center_offset_mhz = 0.0;   // mean line position
  double jump_sigma_mhz = 0.0;      // std of post-repump center shifts
  double saturation = 0.0;          // s at probe power
  double ionization_prob = 0.0;     // per probe pulse
  double repump_recovery_prob = 1.0;
  double background_rate_cps = 0.0; // repump photon leakage
  bool random_walk_jumps = false;   // accumulate jumps instead of i.i.d. redraw

  void validate() const {
    if (!(gamma_h_mhz > 0.0))
      throw std::invalid_argument("EmitterModel: homogeneous width must be > 0");
    if (jump_sigma_mhz < 0.0 || saturation < 0.0 || background_rate_cps < 0.0)
      throw std::invalid_argument("EmitterModel: negative noise parameter");
    if (ionization_prob < 0.0 || ionization_prob > 1.0 ||
        repump_recovery_prob < 0.0 || repump_recovery_prob > 1.0)
      throw std::invalid_argument("EmitterModel: probabilities must lie in [0,1]");
  }
};

struct PleScanConfig {
  double repump_us = 1.5;
  double probe_us = 7.5;
  double rep_rate_khz = 100.0;
  double dwell_ms = 10.0;
  double detuning_min_mhz = -400.0;
  double detuning_max_mhz = 400.0;
  double detuning_step_mhz = 10.0;
  int n_scans = 100;
  double collection_rate_cps = 2e5;  // detected rate at resonance

  void validate() const {
    if (!(repump_us > 0.0) || !(probe_us > 0.0) || !(rep_rate_khz > 0.0))
      throw std::invalid_argument("PleScanConfig: durations and rate must be > 0");
    if (repump_us + probe_us > 1e3 / rep_rate_khz + 1e-9)
      throw std::invalid_argument("PleScanConfig: repump + probe exceed the sequence period");
    if (!(detuning_step_mhz > 0.0) || !(detuning_max_mhz > detuning_min_mhz))
      throw std::invalid_argument("PleScanConfig: detuning grid must be increasing");
    if (n_scans < 1) throw std::invalid_argument("PleScanConfig: n_scans must be >= 1");
    if (!(dwell_ms > 0.0) || collection_rate_cps < 0.0)
      throw std::invalid_argument("PleScanConfig: invalid dwell or collection rate");
  }

  std::vector<double> detunings() const {
    std::vector<double> d;
    for (double v = detuning_min_mhz; v <= detuning_max_mhz + 1e-9;
         v += detuning_step_mhz)
      d.push_back(v);
    return d;
  }

  int repetitions_per_dwell() const {
    return static_cast<int>(dwell_ms * rep_rate_khz);
  }
};

struct PleScan {
  std::vector<double> detuning_mhz;
  std::vector<double> mean_counts;  // per dwell, averaged over scans
};

inline double power_broadened_width(double gamma_h_mhz, double saturation) {
  if (saturation < 0.0)
    throw std::invalid_argument("power_broadened_width: saturation must be >= 0");
  return gamma_h_mhz * std::sqrt(1.0 + saturation);
}

// Two-level response normalized to 1 at resonance: a Lorentzian whose FWHM
// carries the sqrt(1+s) power broadening.
inline double lorentzian_response(double detuning_mhz, double gamma_h_mhz,
                                  double saturation) {
  const double u = 2.0 * detuning_mhz / gamma_h_mhz;
  return (1.0 + saturation) / (1.0 + saturation + u * u);
}

// Full pulsed-PLE sequence: each repetition tries an off-resonant repump
// (which restores the bright state and re-draws the line center), then
// accumulates Poisson counts from a resonant probe window. Scans run on
// independent streams and integer count sums, so the result is independent
// of the worker count.
inline PleScan simulate_ple_scan(const EmitterModel& emitter,
                                 const PleScanConfig& cfg, std::uint64_t seed,
                                 int n_threads = 0) {
  emitter.validate();
  cfg.validate();

  PleScan scan;
  scan.detuning_mhz = cfg.detunings();
  const std::size_t n_det = scan.detuning_mhz.size();
  const int reps = cfg.repetitions_per_dwell();
  const double probe_s = cfg.probe_us * 1e-6;
  const double bg_mean = emitter.background_rate_cps * probe_s;
  const double peak_mean = cfg.collection_rate_cps * probe_s;

  std::vector<std::vector<std::int64_t>> per_scan(cfg.n_scans,
                                                  std::vector<std::int64_t>(n_det, 0));

  auto run_scan = [&](int scan_idx) {
    RngStream rng(seed, static_cast<std::uint64_t>(scan_idx));
    bool bright = true;
    double center = emitter.center_offset_mhz + emitter.jump_sigma_mhz * rng.normal();
    auto& counts = per_scan[scan_idx];
    for (std::size_t di = 0; di < n_det; ++di) {
      const double delta = scan.detuning_mhz[di];
      std::int64_t acc = 0;
      for (int r = 0; r < reps; ++r) {
        if (rng.uniform() < emitter.repump_recovery_prob) {
          bright = true;
          if (emitter.random_walk_jumps)
            center += emitter.jump_sigma_mhz * rng.normal();
          else
            center = emitter.center_offset_mhz +
                     emitter.jump_sigma_mhz * rng.normal();
        }
        double mean = bg_mean;
        if (bright) {
          mean += peak_mean * lorentzian_response(delta - center,
                                                  emitter.gamma_h_mhz,
                                                  emitter.saturation);
        }
        acc += rng.poisson(mean);
        if (bright && emitter.ionization_prob > 0.0 &&
            rng.uniform() < emitter.ionization_prob)
          bright = false;
      }
      counts[di] = acc;
    }
  };

  unsigned workers = n_threads > 0 ? static_cast<unsigned>(n_threads)
                                   : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.n_scans));
  if (workers <= 1) {
    for (int i = 0; i < cfg.n_scans; ++i) run_scan(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const int i = next.fetch_add(1, std::memory_order_relaxed);
          if (i >= cfg.n_scans) return;
          run_scan(i);
        }
      });
    for (auto& t : pool) t.join();
  }

  scan.mean_counts.assign(n_det, 0.0);
  for (int i = 0; i < cfg.n_scans; ++i)
    for (std::size_t di = 0; di < n_det; ++di)
      scan.mean_counts[di] += static_cast<double>(per_scan[i][di]);
  for (auto& v : scan.mean_counts) v /= cfg.n_scans;
  return scan;
}

// Expected (noise-free) profile of a single probe window with the center
// held at its mean: the dephasing-limited line, free of repump-induced
// jumps. Fitting this and the full sequence operationalizes the distinction
// between dephasing and extrinsically broadened linewidths.
inline PleScan expected_single_window_profile(const EmitterModel& emitter,
                                              const PleScanConfig& cfg) {
  emitter.validate();
  cfg.validate();
  PleScan scan;
  scan.detuning_mhz = cfg.detunings();
  const double probe_s = cfg.probe_us * 1e-6;
  for (double delta : scan.detuning_mhz) {
    const double mean =
        cfg.collection_rate_cps * probe_s *
            lorentzian_response(delta - emitter.center_offset_mhz,
                                emitter.gamma_h_mhz, emitter.saturation) +
        emitter.background_rate_cps * probe_s;
    scan.mean_counts.push_back(mean);
  }
  return scan;
}

struct LineFit {
  double fwhm_mhz = 0.0;
  double center_mhz = 0.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  bool unresolved = false;  // fitted width below the grid spacing

  static constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
};

inline LineFit fit_line_gaussian(const PleScan& scan) {
  const std::size_t n = scan.detuning_mhz.size();
  if (n < 8)
    throw std::invalid_argument("fit_line_gaussian: need at least 8 detuning points");
  if (scan.mean_counts.size() != n)
    throw std::invalid_argument("fit_line_gaussian: column length mismatch");

  // Moment-based initial guesses.
  std::size_t imax = 0;
  double ymax = scan.mean_counts[0], ymin = scan.mean_counts[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (scan.mean_counts[i] > ymax) {
      ymax = scan.mean_counts[i];
      imax = i;
    }
    ymin = std::min(ymin, scan.mean_counts[i]);
  }
  const double half = ymin + 0.5 * (ymax - ymin);
  double lo = scan.detuning_mhz.front(), hi = scan.detuning_mhz.back();
  for (std::size_t i = imax; i-- > 0;)
    if (scan.mean_counts[i] < half) {
      lo = scan.detuning_mhz[i];
      break;
    }
  for (std::size_t i = imax + 1; i < n; ++i)
    if (scan.mean_counts[i] < half) {
      hi = scan.detuning_mhz[i];
      break;
    }
  const double grid_step = (scan.detuning_mhz.back() - scan.detuning_mhz.front()) /
                           static_cast<double>(n - 1);
  const double fwhm0 = std::max(hi - lo, grid_step);
  const double span = scan.detuning_mhz.back() - scan.detuning_mhz.front();
  if (span < 2.0 * fwhm0)
    throw std::invalid_argument(
        "fit_line_gaussian: scan must span at least twice the apparent width");

  auto model = [&](const std::vector<double>& p, std::size_t i) {
    const double t = (scan.detuning_mhz[i] - p[1]) / p[2];
    return p[0] * std::exp(-0.5 * t * t) + p[3];
  };
  std::vector<double> init = {ymax - ymin, scan.detuning_mhz[imax],
                              fwhm0 / LineFit::kFwhmPerSigma, ymin};
  auto lm = fit::levenberg_marquardt(model, scan.mean_counts, init, 400);
  if (!lm.converged)
    throw std::runtime_error("fit_line_gaussian: fit did not converge");

  LineFit out;
  out.amplitude = lm.params[0];
  out.center_mhz = lm.params[1];
  out.fwhm_mhz = std::abs(lm.params[2]) * LineFit::kFwhmPerSigma;
  out.baseline = lm.params[3];
  out.unresolved = out.fwhm_mhz < grid_step;
  return out;
}

// FWHM of the convolution of a Lorentzian (FWHM gamma_l) with a Gaussian
// (FWHM gamma_g), from direct numerical convolution and bisection on the
// half maximum. Tolerance 0.1 MHz. Independent oracle for the scan
// simulation tests.
inline double voigt_fwhm_oracle(double gamma_l_mhz, double gamma_g_mhz) {
  if (gamma_l_mhz < 0.0 || gamma_g_mhz < 0.0)
    throw std::invalid_argument("voigt_fwhm_oracle: widths must be >= 0");
  if (gamma_g_mhz == 0.0) return gamma_l_mhz;
  if (gamma_l_mhz == 0.0) return gamma_g_mhz;

  const double sigma = gamma_g_mhz / LineFit::kFwhmPerSigma;
  const double hl = 0.5 * gamma_l_mhz;
  const auto voigt = [&](double x) {
    // integrate Lorentzian(x - t) * Gaussian(t) over t
    const double t_max = 8.0 * sigma;
    const int steps = 4000;
    const double dt = 2.0 * t_max / steps;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double t = -t_max + i * dt;
      const double g = std::exp(-0.5 * (t / sigma) * (t / sigma));
      const double l = hl * hl / ((x - t) * (x - t) + hl * hl);
      const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
      acc += w * g * l;
    }
    return acc;
  };

  const double peak = voigt(0.0);
  double lo = 0.0;
  double hi = 0.5 * (gamma_l_mhz + gamma_g_mhz) + 2.0 * (gamma_l_mhz + gamma_g_mhz);
  while (voigt(hi) > 0.5 * peak) hi *= 2.0;
  while (hi - lo > 0.05) {  // 0.1 MHz FWHM tolerance = 0.05 on the half width
    const double mid = 0.5 * (lo + hi);
    if (voigt(mid) > 0.5 * peak)
      lo = mid;
    else
      hi = mid;
  }
  return lo + hi;  // 2 * half width at half maximum
}

}  // namespace nvforge::ple
