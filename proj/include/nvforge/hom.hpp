#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "nvforge/rng.hpp"
#include "nvforge/units.hpp"

namespace nvforge::hom {

struct PhotonSource {
  double lifetime_ns = 12.0;
  double measured_fwhm_mhz = 13.0;

  double lifetime_limit_mhz() const {
    return 1e3 / (2.0 * units::kPi * lifetime_ns);
  }

  void validate() const {
    if (!(lifetime_ns > 0.0))
      throw std::invalid_argument("PhotonSource: lifetime must be > 0");
    if (measured_fwhm_mhz < lifetime_limit_mhz() - 1e-9)
      throw std::invalid_argument(
          "PhotonSource: measured width below the lifetime limit");
  }
};

struct FilterWindow {
  double window_ps = 300.0;

  void validate() const {
    if (!(window_ps > 0.0))
      throw std::invalid_argument("FilterWindow: window must be > 0");
  }
};

// Pure dephasing rate (angular, 1/s) when all excess width is attributed to
// Markovian dephasing -- the worst case for filtered indistinguishability.
inline double dephasing_rate(const PhotonSource& source) {
  return units::kPi * (source.measured_fwhm_mhz - source.lifetime_limit_mhz()) * 1e6;
}

// Two-photon interference visibility after selecting coincidences closer in
// time than the window: V = E[exp(-2 gamma* tau) | tau <= dt] for one-sided
// exponential wavepackets with a common emission time. Closed form.
inline double hom_visibility(const PhotonSource& source, const FilterWindow& window) {
  source.validate();
  window.validate();
  const double decay = 1.0 / (source.lifetime_ns * 1e-9);  // 1/s
  const double g2 = 2.0 * dephasing_rate(source);
  const double dt = window.window_ps * 1e-12;

  const double x = (decay + g2) * dt;
  const double y = decay * dt;
  // V = [Gamma (1 - e^-x)] / [(Gamma + 2 gamma*) (1 - e^-y)]
  const double num = decay * -std::expm1(-x);
  const double den = (decay + g2) * -std::expm1(-y);
  return num / den;
}

// Monte Carlo oracle: exponential detection times, Wiener-phase dephasing,
// Bernoulli coincidences at the beam splitter. Deterministic in (seed,
// n_pairs) and the worker count (per-chunk streams, integer reduction).
inline double hom_visibility_mc(const PhotonSource& source,
                                const FilterWindow& window, long n_pairs,
                                std::uint64_t seed, int n_threads = 0) {
  source.validate();
  window.validate();
  if (n_pairs < 1) throw std::invalid_argument("hom_visibility_mc: need pairs");
  const double t1_s = source.lifetime_ns * 1e-9;
  const double gstar = dephasing_rate(source);
  const double dt = window.window_ps * 1e-12;

  constexpr long kChunk = 1 << 14;
  const long n_chunks = (n_pairs + kChunk - 1) / kChunk;
  std::vector<std::int64_t> windowed(n_chunks, 0), coincident(n_chunks, 0);

  auto run_chunk = [&](long c) {
    RngStream rng(seed, static_cast<std::uint64_t>(c));
    const long count = std::min(kChunk, n_pairs - c * kChunk);
    std::int64_t w = 0, k = 0;
    for (long i = 0; i < count; ++i) {
      const double t1 = -t1_s * std::log(rng.uniform_open());
      const double t2 = -t1_s * std::log(rng.uniform_open());
      const double tau = std::abs(t1 - t2);
      if (tau > dt) continue;
      ++w;
      const double dphi = std::sqrt(4.0 * gstar * tau) * rng.normal();
      const double p_coinc = 0.5 * (1.0 - std::cos(dphi));
      if (rng.uniform() < p_coinc) ++k;
    }
    windowed[c] = w;
    coincident[c] = k;
  };

  unsigned workers = n_threads > 0 ? static_cast<unsigned>(n_threads)
                                   : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (workers <= 1 || n_chunks == 1) {
    for (long c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const long c = next.fetch_add(1, std::memory_order_relaxed);
          if (c >= n_chunks) return;
          run_chunk(c);
        }
      });
    for (auto& t : pool) t.join();
  }

  std::int64_t w_total = 0, k_total = 0;
  for (long c = 0; c < n_chunks; ++c) {
    w_total += windowed[c];
    k_total += coincident[c];
  }
  if (w_total == 0)
    throw std::runtime_error("hom_visibility_mc: no pairs inside the window");
  return 1.0 - 2.0 * static_cast<double>(k_total) / static_cast<double>(w_total);
}

// Largest measured linewidth still reaching the target visibility at the
// given window; bisection to 1 MHz.
inline double max_linewidth_for_visibility(double lifetime_ns, double window_ps,
                                           double target_visibility) {
  if (!(target_visibility > 0.0) || !(target_visibility < 1.0))
    throw std::invalid_argument("max_linewidth_for_visibility: target in (0,1)");
  PhotonSource src;
  src.lifetime_ns = lifetime_ns;
  FilterWindow win{window_ps};

  double lo = src.lifetime_limit_mhz();
  double hi = 1e4;  // 10 GHz
  src.measured_fwhm_mhz = hi;
  if (hom_visibility(src, win) > target_visibility)
    throw std::runtime_error(
        "max_linewidth_for_visibility: target reached for any width up to 10 GHz");
  src.measured_fwhm_mhz = lo;
  if (hom_visibility(src, win) < target_visibility)
    throw std::runtime_error(
        "max_linewidth_for_visibility: target unreachable at the lifetime limit");
  while (hi - lo > 1.0) {
    const double mid = 0.5 * (lo + hi);
    src.measured_fwhm_mhz = mid;
    if (hom_visibility(src, win) >= target_visibility)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Rate gain of two-photon-heralded entanglement from an improved zero-phonon
// photon fraction: success probability is quadratic in the per-node
// efficiency.
inline double barrett_kok_gain(double zpl_fraction_bare,
                               double zpl_fraction_enhanced) {
  if (!(zpl_fraction_bare > 0.0) || zpl_fraction_bare > 1.0 ||
      !(zpl_fraction_enhanced > 0.0) || zpl_fraction_enhanced > 1.0)
    throw std::invalid_argument("barrett_kok_gain: fractions must lie in (0,1]");
  const double r = zpl_fraction_enhanced / zpl_fraction_bare;
  return r * r;
}

}  // namespace nvforge::hom
