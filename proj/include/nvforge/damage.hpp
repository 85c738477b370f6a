#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nvforge/cascade.hpp"
#include "nvforge/target.hpp"

namespace nvforge::damage {

enum class HistogramKind { kImplantedIon, kVacancy };

struct DepthHistogram {
  std::vector<double> bin_edges_nm;  // size counts.size() + 1, strictly increasing
  std::vector<double> counts;
  int normalization_ions = 0;
  HistogramKind kind = HistogramKind::kImplantedIon;
  bool empty_warning = false;  // set when every ion exited the slab

  double total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }
};

struct DepthSummary {
  double peak_depth_nm = 0.0;
  double vacancies_per_ion = 0.0;
  Element species;
  double energy_kev = 0.0;
  HistogramKind kind = HistogramKind::kImplantedIon;
};

inline std::pair<DepthHistogram, DepthHistogram> build_depth_histograms(
    const std::vector<bca::CascadeRecord>& records, double bin_width_nm) {
  if (records.empty())
    throw std::invalid_argument("build_depth_histograms: need at least one record");
  if (!(bin_width_nm > 0.0))
    throw std::invalid_argument("build_depth_histograms: bin width must be > 0");

  double max_depth = 0.0;
  for (const auto& r : records) {
    if (r.terminal == bca::Terminal::kStopped)
      max_depth = std::max(max_depth, r.final_depth_nm);
    for (const auto& v : r.vacancies) max_depth = std::max(max_depth, v.depth_nm);
  }
  const int n_bins = std::max(1, static_cast<int>(std::floor(max_depth / bin_width_nm)) + 1);

  DepthHistogram ions, vacs;
  ions.kind = HistogramKind::kImplantedIon;
  vacs.kind = HistogramKind::kVacancy;
  ions.normalization_ions = vacs.normalization_ions = static_cast<int>(records.size());
  ions.bin_edges_nm.resize(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i) ions.bin_edges_nm[i] = i * bin_width_nm;
  vacs.bin_edges_nm = ions.bin_edges_nm;
  ions.counts.assign(n_bins, 0.0);
  vacs.counts.assign(n_bins, 0.0);

  const auto bin_of = [&](double depth) {
    int i = static_cast<int>(std::floor(depth / bin_width_nm));
    return std::clamp(i, 0, n_bins - 1);
  };

  bool any_stopped = false;
  for (const auto& r : records) {
    if (r.terminal == bca::Terminal::kStopped) {
      ions.counts[bin_of(r.final_depth_nm)] += 1.0;
      any_stopped = true;
    }
    for (const auto& v : r.vacancies)
      vacs.counts[bin_of(v.depth_nm)] += v.vacancy_weight;
  }
  ions.empty_warning = !any_stopped;
  return {ions, vacs};
}

// Center of the maximum bin after 3-bin moving-average smoothing; ties break
// toward smaller depth. Smoothing suppresses Monte Carlo shot noise that
// makes the raw argmax unstable at 1e4 ions.
inline double peak_depth_nm(const DepthHistogram& hist) {
  const std::size_t n = hist.counts.size();
  if (n == 0 || hist.total() <= 0.0)
    throw std::invalid_argument("peak_depth: empty histogram");
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = hist.counts[i];  // zero-padded 3-bin window
    if (i > 0) sum += hist.counts[i - 1];
    if (i + 1 < n) sum += hist.counts[i + 1];
    const double smoothed = sum / 3.0;
    if (smoothed > best_val) {
      best_val = smoothed;
      best = i;
    }
  }
  return 0.5 * (hist.bin_edges_nm[best] + hist.bin_edges_nm[best + 1]);
}

struct DepthDelta {
  double delta_nm = 0.0;
  double relative = 0.0;  // delta / D of the first (reference) argument
};

// Depth-difference metric between two species at equal energy; the first
// argument is the reference whose peak depth forms the denominator.
inline DepthDelta depth_delta(const DepthSummary& reference,
                              const DepthSummary& other) {
  if (reference.energy_kev != other.energy_kev)
    throw std::invalid_argument("depth_delta: summaries at different energies");
  if (reference.kind != other.kind)
    throw std::invalid_argument("depth_delta: summaries of different kinds");
  DepthDelta d;
  d.delta_nm = std::abs(reference.peak_depth_nm - other.peak_depth_nm);
  d.relative = d.delta_nm / reference.peak_depth_nm;
  return d;
}

inline double vacancy_yield(const std::vector<bca::CascadeRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("vacancy_yield: need at least one record");
  double total = 0.0;
  for (const auto& r : records) total += r.vacancy_count();
  return total / static_cast<double>(records.size());
}

// Phenomenological NV depth profile: vacancies recombine with native
// nitrogen at a free capture fraction, clamped so no bin converts more NVs
// than it holds nitrogen atoms. Returns NV areal density (1/cm^2) per bin.
inline std::vector<double> nv_density_profile(const DepthHistogram& vac_hist,
                                              const TargetMaterial& material,
                                              double native_n_ppb,
                                              double capture_fraction,
                                              double fluence_per_cm2) {
  if (capture_fraction < 0.0 || capture_fraction > 1.0)
    throw std::invalid_argument("nv_density_profile: capture fraction in [0,1]");
  if (native_n_ppb < 0.0)
    throw std::invalid_argument("nv_density_profile: nitrogen concentration >= 0");
  const double n_frac = native_n_ppb * 1e-9;
  const double atoms_cm3 = atomic_density_per_cm3(material);
  std::vector<double> nv(vac_hist.counts.size(), 0.0);
  const double ions = std::max(1, vac_hist.normalization_ions);
  for (std::size_t i = 0; i < nv.size(); ++i) {
    const double width_cm =
        (vac_hist.bin_edges_nm[i + 1] - vac_hist.bin_edges_nm[i]) / units::kNmPerCm;
    const double vac_areal = vac_hist.counts[i] / ions * fluence_per_cm2;
    const double nitrogen_areal = n_frac * atoms_cm3 * width_cm;
    nv[i] = std::min(capture_fraction * vac_areal * n_frac, nitrogen_areal);
  }
  return nv;
}

}  // namespace nvforge::damage
