#pragma once

// Monte Carlo summaries with standard errors. All reductions run in index
// order so results are independent of how the samples were produced.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgdfclt/linalg.hpp"

namespace sgdfclt {

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

inline Estimate estimate_mean(std::span<const double> xs) {
  const std::size_t m = xs.size();
  if (m == 0) throw std::invalid_argument("estimate_mean: no samples");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(m);
  if (m == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m))};
}

/// Sample covariance of (u, v) with unbiased normalisation and the standard
/// error of the mean of the centred products.
inline Estimate estimate_covariance(std::span<const double> u, std::span<const double> v) {
  const std::size_t m = u.size();
  if (m != v.size()) throw std::invalid_argument("estimate_covariance: length mismatch");
  if (m < 2) throw std::invalid_argument("estimate_covariance: need at least two samples");
  double su = 0.0, sv = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    su += u[k];
    sv += v[k];
  }
  const double mu = su / static_cast<double>(m), mv = sv / static_cast<double>(m);
  std::vector<double> prod(m);
  double sp = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    prod[k] = (u[k] - mu) * (v[k] - mv);
    sp += prod[k];
  }
  const double mean_prod = sp / static_cast<double>(m);
  double ss = 0.0;
  for (double p : prod) ss += (p - mean_prod) * (p - mean_prod);
  const double cov = sp / static_cast<double>(m - 1);
  const double se = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
  return {cov, se};
}

struct CovarianceEstimate {
  Matrix cov;
  Matrix se;
};

/// Entry (i, j) estimates Cov(a[:, i], b[:, j]).
inline CovarianceEstimate estimate_cross_covariance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("estimate_cross_covariance: row mismatch");
  CovarianceEstimate out{Matrix(a.cols(), b.cols()), Matrix(a.cols(), b.cols())};
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const Vector u = a.column(i);
    for (std::size_t j = 0; j < b.cols(); ++j) {
      const auto e = estimate_covariance(u, b.column(j));
      out.cov(i, j) = e.mean;
      out.se(i, j) = e.se;
    }
  }
  return out;
}

/// Linear-interpolation quantile (type 7).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: no samples");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * xs[lo] + w * xs[hi];
}

}  // namespace sgdfclt
