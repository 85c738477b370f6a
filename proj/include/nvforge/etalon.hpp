#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nvforge/fit.hpp"
#include "nvforge/rng.hpp"
#include "nvforge/units.hpp"

namespace nvforge::etalon {

struct Spectrum {
  std::vector<double> wavelength_nm;  // strictly increasing
  std::vector<double> intensity;      // arbitrary units, >= 0

  void validate() const {
    if (wavelength_nm.size() != intensity.size())
      throw std::invalid_argument("Spectrum: column length mismatch");
    if (wavelength_nm.size() < 16)
      throw std::invalid_argument("Spectrum: too few samples");
    for (std::size_t i = 1; i < wavelength_nm.size(); ++i)
      if (!(wavelength_nm[i] > wavelength_nm[i - 1]))
        throw std::invalid_argument("Spectrum: wavelengths must be strictly increasing");
  }
};

struct ThicknessFit {
  double thickness_um = 0.0;
  double uncertainty_um = 0.0;
  double power_ratio = 0.0;  // fringe peak over strongest out-of-band peak
};

struct IndeterminateThickness : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plane slab with a constant index or an optional two-term Cauchy
// dispersion n(lambda) = n0 + b / lambda^2 (off by default: b = 0).
struct EtalonModel {
  double thickness_um = 0.0;
  double n0 = 2.41;
  double dispersion_b_nm2 = 0.0;

  double index_at(double wavelength_nm) const {
    return n0 + dispersion_b_nm2 / (wavelength_nm * wavelength_nm);
  }

  void validate() const {
    if (!(thickness_um > 0.0))
      throw std::invalid_argument("EtalonModel: thickness must be > 0");
    if (!(n0 > 1.0)) throw std::invalid_argument("EtalonModel: index must be > 1");
  }

  // Constructive orders m and their wavelengths with 2 n(lambda) d = m lambda
  // inside [lambda_min, lambda_max], ordered by decreasing wavelength.
  std::vector<std::pair<int, double>> constructive_orders(
      double lambda_min_nm, double lambda_max_nm) const {
    validate();
    std::vector<std::pair<int, double>> out;
    const double d_nm = thickness_um * 1e3;
    const int m_lo = static_cast<int>(std::ceil(2.0 * index_at(lambda_max_nm) *
                                                d_nm / lambda_max_nm));
    const int m_hi = static_cast<int>(std::floor(2.0 * index_at(lambda_min_nm) *
                                                 d_nm / lambda_min_nm));
    for (int m = m_lo; m <= m_hi; ++m) {
      double lam = 2.0 * n0 * d_nm / m;  // fixed point of 2 n(lam) d = m lam
      for (int i = 0; i < 20; ++i) lam = 2.0 * index_at(lam) * d_nm / m;
      if (lam >= lambda_min_nm && lam <= lambda_max_nm) out.push_back({m, lam});
    }
    return out;
  }
};

// Fringe visibility of a low-finesse slab from the Fresnel reflectivity of
// its two faces.
inline double fringe_visibility(double refractive_index) {
  const double r = (refractive_index - 1.0) / (refractive_index + 1.0);
  const double big_r = r * r;
  return 2.0 * big_r / (1.0 + big_r * big_r);
}

// Two-beam interference envelope of a plane slab: 1 + V cos(4 pi n d / lambda),
// periodic in 1/lambda with period 1/(2 n d).
inline double slab_modulation(double thickness_um, double refractive_index,
                              double wavelength_nm) {
  if (!(thickness_um > 0.0) || !(wavelength_nm > 0.0))
    throw std::invalid_argument("slab_modulation: thickness and wavelength must be > 0");
  const double d_nm = thickness_um * 1e3;
  const double v = fringe_visibility(refractive_index);
  return 1.0 + v * std::cos(4.0 * units::kPi * refractive_index * d_nm / wavelength_nm);
}

inline double slab_modulation(const EtalonModel& model, double wavelength_nm) {
  model.validate();
  return slab_modulation(model.thickness_um, model.index_at(wavelength_nm),
                         wavelength_nm);
}

// Smooth sideband envelope peaking near 680 nm (lognormal bump in wavelength)
// used as the synthesis fixture; the fit never assumes this shape.
inline double psb_envelope(double wavelength_nm) {
  const double x = wavelength_nm - 560.0;
  if (x <= 0.0) return 0.0;
  const double w = 0.45;
  const double x0 = 120.0 * std::exp(w * w);
  const double t = std::log(x / x0) / w;
  return std::exp(-0.5 * t * t);
}

inline Spectrum synthesize_psb_spectrum(double thickness_um,
                                        double refractive_index,
                                        double noise_level,
                                        std::uint64_t seed = 1,
                                        std::size_t n_samples = 1024,
                                        double lambda_min_nm = 630.0,
                                        double lambda_max_nm = 800.0) {
  if (!(thickness_um > 0.0))
    throw std::invalid_argument("synthesize_psb_spectrum: thickness must be > 0");
  if (noise_level < 0.0)
    throw std::invalid_argument("synthesize_psb_spectrum: noise level must be >= 0");
  RngStream rng(seed, 0);
  Spectrum spec;
  spec.wavelength_nm.resize(n_samples);
  spec.intensity.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double lam = lambda_min_nm + (lambda_max_nm - lambda_min_nm) *
                                           static_cast<double>(i) /
                                           static_cast<double>(n_samples - 1);
    spec.wavelength_nm[i] = lam;
    double val = 1000.0 * psb_envelope(lam) *
                 slab_modulation(thickness_um, refractive_index, lam);
    if (noise_level > 0.0) val *= 1.0 + noise_level * rng.normal();
    spec.intensity[i] = std::max(val, 0.0);
  }
  return spec;
}

namespace detail {

// Lomb-style periodogram power of the detrended signal at the fringe
// frequency implied by thickness d (f = 2 n d in the 1/lambda domain).
inline double fringe_power(const std::vector<double>& x,
                           const std::vector<double>& s, double d_nm,
                           double refractive_index) {
  const double f = 2.0 * refractive_index * d_nm;
  double c = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ph = 2.0 * units::kPi * f * x[i];
    c += s[i] * std::cos(ph);
    sn += s[i] * std::sin(ph);
  }
  return c * c + sn * sn;
}

// Divide out a smooth envelope estimate: low-order polynomial fit of the
// log intensity. A cubic tracks any single broad sideband bump but cannot
// follow the fringes themselves, and it leaves the result invariant under
// uniform intensity rescaling. A sliding median was tried first and biases
// the recovered thickness by several percent when fewer than ~5 fringe
// periods fit in the spectral window.
inline std::vector<double> detrend(const std::vector<double>& lam,
                                   const std::vector<double>& intensity,
                                   int degree = 3) {
  const std::size_t m = lam.size();
  const double l0 = lam.front();
  const double l1 = lam.back();
  const auto norm = [&](double l) { return 2.0 * (l - l0) / (l1 - l0) - 1.0; };

  std::vector<std::vector<double>> ata(degree + 1, std::vector<double>(degree + 1, 0.0));
  std::vector<double> atb(degree + 1, 0.0);
  std::vector<double> powers(degree + 1);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = norm(lam[i]);
    const double y = std::log(std::max(intensity[i], 1e-12));
    powers[0] = 1.0;
    for (int k = 1; k <= degree; ++k) powers[k] = powers[k - 1] * t;
    for (int a = 0; a <= degree; ++a) {
      atb[a] += powers[a] * y;
      for (int b = 0; b <= degree; ++b) ata[a][b] += powers[a] * powers[b];
    }
  }
  std::vector<double> coef;
  if (!fit::solve_linear(ata, atb, coef))
    throw std::runtime_error("fit_thickness: envelope fit failed");

  std::vector<double> s(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = norm(lam[i]);
    double e = 0.0, p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      e += coef[k] * p;
      p *= t;
    }
    s[i] = intensity[i] / std::exp(e) - 1.0;
  }
  return s;
}

}  // namespace detail

// Recovers slab thickness from the fringe modulation of a spectrum:
// detrend by moving median, scan periodogram power over the thickness grid,
// refine by local least squares, uncertainty from the objective curvature.
inline ThicknessFit fit_thickness(const Spectrum& spec, double refractive_index,
                                  double d_min_um, double d_max_um) {
  spec.validate();
  if (!(d_min_um < d_max_um) || d_min_um < 0.5 || d_max_um > 60.0)
    throw std::invalid_argument("fit_thickness: thickness range must lie in [0.5, 60] um");

  const std::size_t m = spec.wavelength_nm.size();
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = 1.0 / spec.wavelength_nm[i];
  const double sample_nm = (spec.wavelength_nm.back() - spec.wavelength_nm.front()) /
                           static_cast<double>(m - 1);

  const auto s = detail::detrend(spec.wavelength_nm, spec.intensity);
  const double step_um = 0.02;
  auto scan = [&](const std::vector<double>& sig) {
    double best_d = d_min_um, best_p = -1.0;
    for (double d = d_min_um; d <= d_max_um + 1e-12; d += step_um) {
      const double p = detail::fringe_power(x, sig, d * 1e3, refractive_index);
      if (p > best_p) {
        best_p = p;
        best_d = d;
      }
    }
    return std::pair{best_d, best_p};
  };
  auto [d_best, p_best] = scan(s);

  // Significance: fringe peak against the strongest power away from it.
  const double lobe_um = (1.0 / (x.front() - x.back())) / (2.0 * refractive_index) * 1e-3;
  double background = 0.0;
  for (double d = d_min_um; d <= d_max_um + 1e-12; d += step_um) {
    if (std::abs(d - d_best) < 2.0 * lobe_um) continue;
    background = std::max(background, detail::fringe_power(x, s, d * 1e3, refractive_index));
  }
  const double ratio = background > 0.0 ? p_best / background
                                        : std::numeric_limits<double>::infinity();
  if (ratio < 3.0)
    throw IndeterminateThickness("fit_thickness: no significant fringe peak (power ratio " +
                                 std::to_string(ratio) + " < 3)");

  // Aliasing guard: fringes must be resolved by at least 3 sample spacings.
  const double fringe_at_min =
      spec.wavelength_nm.front() * spec.wavelength_nm.front() /
      (2.0 * refractive_index * d_best * 1e3);
  if (fringe_at_min < 3.0 * sample_nm)
    throw IndeterminateThickness("fit_thickness: fringes unresolved at fitted thickness");

  // Refine by parabolic interpolation of the periodogram peak; the parabola
  // stays within one grid step, which keeps the refinement local.
  ThicknessFit out;
  out.power_ratio = ratio;
  {
    const double p0 = detail::fringe_power(x, s, d_best * 1e3, refractive_index);
    const double pl =
        detail::fringe_power(x, s, (d_best - step_um) * 1e3, refractive_index);
    const double ph =
        detail::fringe_power(x, s, (d_best + step_um) * 1e3, refractive_index);
    const double denom = pl - 2.0 * p0 + ph;
    double offset = denom < 0.0 ? 0.5 * step_um * (pl - ph) / denom : 0.0;
    offset = std::clamp(offset, -step_um, step_um);
    out.thickness_um = d_best + offset;
  }

  // Uncertainty from the curvature of the profile least-squares objective:
  // chi^2(d) with the quadrature amplitudes re-projected at each probe d.
  auto chi2_at = [&](double d) {
    const double f = 2.0 * refractive_index * d * 1e3;
    double cc = 0.0, cs = 0.0, ss = 0.0, yc = 0.0, ys = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double ph = 2.0 * units::kPi * f * x[i];
      const double co = std::cos(ph);
      const double si = std::sin(ph);
      cc += co * co;
      cs += co * si;
      ss += si * si;
      yc += s[i] * co;
      ys += s[i] * si;
      yy += s[i] * s[i];
    }
    const double det = cc * ss - cs * cs;
    if (std::abs(det) < 1e-300) return yy;
    const double a = (yc * ss - ys * cs) / det;
    const double b = (ys * cc - yc * cs) / det;
    return yy - a * yc - b * ys;  // residual sum of squares at optimal (a, b)
  };
  const double h = std::max(1e-4, 2e-4 * out.thickness_um);
  const double c_mid = chi2_at(out.thickness_um);
  const double c_lo = chi2_at(out.thickness_um - h);
  const double c_hi = chi2_at(out.thickness_um + h);
  const double curvature = (c_lo - 2.0 * c_mid + c_hi) / (h * h);
  const double resid_var = c_mid / static_cast<double>(m - 3);
  out.uncertainty_um =
      curvature > 0.0 ? std::sqrt(2.0 * resid_var / curvature) : step_um;

  // Amplitude floor: the fringe must explain a visible share of the
  // detrended variance, or the peak-to-background ratio is just comparing
  // noise cells against each other.
  double syy = 0.0;
  for (double v : s) syy += v * v;
  const double explained = syy > 0.0 ? 1.0 - c_mid / syy : 0.0;
  if (explained < 0.10)
    throw IndeterminateThickness(
        "fit_thickness: fringe explains " + std::to_string(explained * 100.0) +
        "% of the detrended variance; no significant fringe");
  return out;
}

}  // namespace nvforge::etalon
