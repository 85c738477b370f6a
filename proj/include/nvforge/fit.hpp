#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nvforge::fit {

// Dense Gaussian elimination with partial pivoting; returns false if singular.
inline bool solve_linear(std::vector<std::vector<double>> a,
                         std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

struct LmResult {
  std::vector<double> params;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt least squares with forward-difference Jacobian.
// model(params, i) returns the prediction for data point i.
inline LmResult levenberg_marquardt(
    const std::function<double(const std::vector<double>&, std::size_t)>& model,
    const std::vector<double>& y, std::vector<double> params,
    int max_iterations = 200, double tolerance = 1e-12) {
  const std::size_t m = y.size();
  const std::size_t n = params.size();
  if (m < n) throw std::invalid_argument("levenberg_marquardt: underdetermined fit");

  auto chi2_of = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - model(p, i);
      s += r * r;
    }
    return s;
  };

  LmResult out;
  double lambda = 1e-3;
  double chi2 = chi2_of(params);

  std::vector<std::vector<double>> jac(m, std::vector<double>(n));
  for (int iter = 0; iter < max_iterations; ++iter) {
    ++out.iterations;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = std::abs(params[j]) > 1e-12 ? std::abs(params[j]) * 1e-7 : 1e-9;
      std::vector<double> pp = params;
      pp[j] += h;
      for (std::size_t i = 0; i < m; ++i)
        jac[i][j] = (model(pp, i) - model(params, i)) / h;
    }
    std::vector<std::vector<double>> jtj(n, std::vector<double>(n, 0.0));
    std::vector<double> jtr(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - model(params, i);
      for (std::size_t a = 0; a < n; ++a) {
        jtr[a] += jac[i][a] * r;
        for (std::size_t b = a; b < n; ++b) jtj[a][b] += jac[i][a] * jac[i][b];
      }
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      auto damped = jtj;
      for (std::size_t a = 0; a < n; ++a) damped[a][a] *= 1.0 + lambda;
      std::vector<double> step;
      if (solve_linear(damped, jtr, step)) {
        std::vector<double> trial = params;
        for (std::size_t a = 0; a < n; ++a) trial[a] += step[a];
        const double trial_chi2 = chi2_of(trial);
        if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
          const double gain = chi2 - trial_chi2;
          params = trial;
          chi2 = trial_chi2;
          lambda = std::max(lambda * 0.3, 1e-12);
          improved = true;
          if (gain < tolerance * (chi2 + tolerance)) {
            out.params = params;
            out.chi2 = chi2;
            out.converged = true;
            return out;
          }
          break;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!improved) break;
  }
  out.params = params;
  out.chi2 = chi2;
  out.converged = out.iterations < max_iterations && std::isfinite(chi2);
  return out;
}

}  // namespace nvforge::fit
