#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvforge/rng.hpp"

namespace nvforge::stats {

struct LinewidthSample {
  double fwhm_mhz = 0.0;
  double thickness_um = 0.0;
  std::string sample_label;
  std::string region_label;
};

struct LognormalFit {
  double mu = 0.0;             // log-space mean
  double sigma = 0.0;          // log-space population std
  double median_mhz = 0.0;     // exp(mu)
  double geometric_std = 1.0;  // exp(sigma)
  int n = 0;
};

inline LognormalFit lognormal_mle(const std::vector<double>& values) {
  if (values.size() < 3)
    throw std::invalid_argument("lognormal_mle: need at least 3 samples");
  double mu = 0.0;
  for (double v : values) {
    if (!(v > 0.0))
      throw std::invalid_argument("lognormal_mle: samples must be positive");
    mu += std::log(v);
  }
  mu /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) {
    const double d = std::log(v) - mu;
    var += d * d;
  }
  var /= static_cast<double>(values.size());  // population variance

  LognormalFit fit;
  fit.mu = mu;
  fit.sigma = std::sqrt(var);
  fit.median_mhz = std::exp(mu);
  fit.geometric_std = std::exp(fit.sigma);
  fit.n = static_cast<int>(values.size());
  return fit;
}

inline LognormalFit lognormal_mle(const std::vector<LinewidthSample>& samples) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.fwhm_mhz);
  return lognormal_mle(v);
}

// Uniform DKW band by default; pointwise normal-approximation binomial
// intervals behind the flag.
enum class BandKind { kDkw, kPointwiseBinomial };

struct EcdfBand {
  std::vector<double> x;      // sorted sample values
  std::vector<double> f;      // ECDF at x (right-continuous steps)
  std::vector<double> lower;  // band, clipped to [0,1]
  std::vector<double> upper;
  double epsilon = 0.0;       // uniform half width (DKW bands only)
  BandKind kind = BandKind::kDkw;
};

// Dvoretzky-Kiefer-Wolfowitz half width for a uniform 1 - alpha band.
inline double dkw_epsilon(std::size_t n, double alpha) {
  if (n < 1) throw std::invalid_argument("dkw_epsilon: need n >= 1");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("dkw_epsilon: alpha must lie in (0,1)");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

inline EcdfBand ecdf_with_band(std::vector<double> values, double alpha = 0.05,
                               BandKind kind = BandKind::kDkw) {
  if (values.empty()) throw std::invalid_argument("ecdf_with_band: need samples");
  std::sort(values.begin(), values.end());
  EcdfBand band;
  band.kind = kind;
  band.x = std::move(values);
  const double n = static_cast<double>(band.x.size());
  band.f.resize(band.x.size());
  band.lower.resize(band.x.size());
  band.upper.resize(band.x.size());
  if (kind == BandKind::kDkw) {
    band.epsilon = dkw_epsilon(band.x.size(), alpha);
    for (std::size_t i = 0; i < band.x.size(); ++i) {
      band.f[i] = static_cast<double>(i + 1) / n;
      band.lower[i] = std::max(0.0, band.f[i] - band.epsilon);
      band.upper[i] = std::min(1.0, band.f[i] + band.epsilon);
    }
  } else {
    // z for the two-sided 1 - alpha level via bisection on the normal CDF
    double lo = 0.0, hi = 10.0;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < 1.0 - alpha / 2.0)
        lo = mid;
      else
        hi = mid;
    }
    const double z = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < band.x.size(); ++i) {
      band.f[i] = static_cast<double>(i + 1) / n;
      const double se = std::sqrt(band.f[i] * (1.0 - band.f[i]) / n);
      band.lower[i] = std::max(0.0, band.f[i] - z * se);
      band.upper[i] = std::min(1.0, band.f[i] + z * se);
    }
  }
  return band;
}

inline double ecdf_value(const EcdfBand& band, double query) {
  const auto it = std::upper_bound(band.x.begin(), band.x.end(), query);
  if (it == band.x.begin()) return 0.0;
  return band.f[static_cast<std::size_t>(it - band.x.begin()) - 1];
}

inline double fraction_below(const std::vector<double>& values, double threshold) {
  if (values.empty()) throw std::invalid_argument("fraction_below: need samples");
  std::size_t count = 0;
  for (double v : values)
    if (v <= threshold) ++count;
  return static_cast<double>(count) / static_cast<double>(values.size());
}

inline double fraction_below(const std::vector<LinewidthSample>& samples,
                             double threshold) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.fwhm_mhz);
  return fraction_below(v, threshold);
}

struct RegionSummary {
  std::string region;
  double thickness_um = 0.0;  // group mean
  LognormalFit fit;
};

struct ThicknessTable {
  std::vector<RegionSummary> rows;              // ordered by thickness
  std::vector<std::string> excluded_regions;    // groups with n < 3
};

// Per-region lognormal summaries ordered by thickness. No monotonicity is
// implied or asserted; groups with fewer than 3 samples are excluded and
// reported back.
inline ThicknessTable median_by_thickness(
    const std::vector<LinewidthSample>& samples) {
  std::map<std::string, std::vector<const LinewidthSample*>> groups;
  for (const auto& s : samples) groups[s.region_label].push_back(&s);

  ThicknessTable table;
  for (const auto& [region, members] : groups) {
    if (members.size() < 3) {
      table.excluded_regions.push_back(region);
      continue;
    }
    RegionSummary row;
    row.region = region;
    std::vector<double> widths;
    for (const auto* s : members) {
      row.thickness_um += s->thickness_um;
      widths.push_back(s->fwhm_mhz);
    }
    row.thickness_um /= static_cast<double>(members.size());
    row.fit = lognormal_mle(widths);
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const RegionSummary& a, const RegionSummary& b) {
              return a.thickness_um < b.thickness_um;
            });
  return table;
}

// Standard normal CDF and a lognormal sampler for fixtures and coverage tests.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double lognormal_cdf(double x, double mu, double sigma) {
  if (x <= 0.0) return 0.0;
  return normal_cdf((std::log(x) - mu) / sigma);
}

inline std::vector<double> sample_lognormal(RngStream& rng, double mu,
                                            double sigma, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = std::exp(mu + sigma * rng.normal());
  return out;
}

}  // namespace nvforge::stats
