#pragma once

// The limit process Y_t = sum_i t^{-mu_i} (e_i^T int_0^t s^{mu_i} delta Gamma^{1/2} dB_s) e_i:
// its covariance kernel, an exact sampler built on Gaussian transitions in the
// eigenbasis, and an Euler-Maruyama reference sampler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgdfclt/asymptotics.hpp"
#include "sgdfclt/limit_params.hpp"
#include "sgdfclt/linalg.hpp"
#include "sgdfclt/rng.hpp"

namespace sgdfclt {

class DiffusionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DiffusionPath {
  Vector grid;
  Matrix values;  // |grid| x d, ambient coordinates
  std::uint64_t seed = 0;
};

/// E[Z_s(i) Z_t(j)] for the eigen-coordinates Z = Q^T Y (0-based i, j):
/// delta^2 Gamma~_ij s^{1 - delta lambda_i} t^{1 - delta lambda_j} min(s,t)^m / m,
/// m = delta lambda_i + delta lambda_j - 1.
inline double covariance_kernel(const LimitParams& p, std::size_t i, std::size_t j, double s, double t) {
  if (!(s > 0.0) || !(t > 0.0)) throw DiffusionError("covariance_kernel: times must be > 0");
  if (i >= p.dim() || j >= p.dim()) throw DiffusionError("covariance_kernel: coordinate out of range");
  const double gij = p.gamma_eig(i, j);
  if (gij == 0.0) return 0.0;
  const double dli = p.delta * p.lambda[i];
  const double dlj = p.delta * p.lambda[j];
  const double m = dli + dlj - 1.0;
  const double log_part = (1.0 - dli) * std::log(s) + (1.0 - dlj) * std::log(t) + m * std::log(std::min(s, t));
  return p.delta * p.delta * gij * std::exp(log_part) / m;
}

/// [covariance_kernel(i, j, s, t)]_{ij} in eigen-coordinates.
inline Matrix eigen_kernel_matrix(const LimitParams& p, double s, double t) {
  const std::size_t d = p.dim();
  Matrix k(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) k(i, j) = covariance_kernel(p, i, j, s, t);
  return k;
}

/// E[Y_s Y_t^T] in ambient coordinates.
inline Matrix ambient_kernel_matrix(const LimitParams& p, double s, double t) {
  return p.q * eigen_kernel_matrix(p, s, t) * p.q.transposed();
}

inline SymMatrix marginal_covariance(const LimitParams& p, double t) {
  return congruence(p.q, SymMatrix::symmetrize(eigen_kernel_matrix(p, t, t)));
}

inline void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw DiffusionError("time grid is empty");
  if (!(grid.front() > 0.0)) throw DiffusionError("time grid must be strictly positive");
  for (std::size_t r = 1; r < grid.size(); ++r)
    if (!(grid[r] > grid[r - 1])) throw DiffusionError("time grid must be strictly increasing");
  if (!std::isfinite(grid.back())) throw DiffusionError("time grid must be finite");
}

/// Exact sampler on a fixed grid. In eigen-coordinates, Z_{t_1} is drawn from
/// its marginal and, for consecutive s < t,
///   Z_t(i) = (s/t)^{mu_i} Z_s(i) + eps_i,
///   Cov(eps_i, eps_j) = delta^2 Gamma~_ij t (1 - (s/t)^m) / m.
/// Transition factors are precomputed so repeated draws are cheap.
class ExactSampler {
 public:
  ExactSampler(LimitParams params, std::span<const double> grid) : p_(std::move(params)), grid_(grid.begin(), grid.end()) {
    validate_grid(grid_);
    const std::size_t d = p_.dim();
    const double d2 = p_.delta * p_.delta;
    decay_.assign(grid_.size(), Vector(d, 0.0));
    factors_.reserve(grid_.size());
    for (std::size_t r = 0; r < grid_.size(); ++r) {
      const double t = grid_[r];
      Matrix cov(d, d);
      if (r == 0) {
        cov = eigen_kernel_matrix(p_, t, t);
      } else {
        const double log_ratio = std::log(grid_[r - 1] / t);
        for (std::size_t i = 0; i < d; ++i) {
          decay_[r][i] = std::exp(p_.mu[i] * log_ratio);
          for (std::size_t j = 0; j < d; ++j) {
            const double m = p_.mu[i] + p_.mu[j] + 1.0;
            cov(i, j) = d2 * p_.gamma_eig(i, j) * t * -std::expm1(m * log_ratio) / m;
          }
        }
      }
      try {
        factors_.push_back(cholesky(SymMatrix::symmetrize(cov)));
      } catch (const LinalgError& e) {
        throw DiffusionError(std::string("exact sampler: transition covariance is not PSD: ") + e.what());
      }
    }
  }

  const LimitParams& params() const noexcept { return p_; }
  const Vector& grid() const noexcept { return grid_; }

  /// Fills `eigen_out` (|grid| x d) with Z along the grid.
  void sample_eigen(CounterRng& rng, Matrix& eigen_out) const {
    const std::size_t d = p_.dim();
    Vector z(d, 0.0), w(d);
    for (std::size_t r = 0; r < grid_.size(); ++r) {
      for (std::size_t i = 0; i < d; ++i) w[i] = rng.normal();
      const Matrix& l = factors_[r];
      for (std::size_t i = 0; i < d; ++i) {
        double e = 0.0;
        for (std::size_t k = 0; k <= i; ++k) e += l(i, k) * w[k];
        z[i] = decay_[r][i] * z[i] + e;
      }
      std::copy(z.begin(), z.end(), eigen_out.row(r).begin());
    }
  }

  DiffusionPath sample(std::uint64_t seed) const {
    const std::size_t d = p_.dim();
    CounterRng rng(seed);
    Matrix z(grid_.size(), d);
    sample_eigen(rng, z);
    DiffusionPath path{grid_, Matrix(grid_.size(), d), seed};
    for (std::size_t r = 0; r < grid_.size(); ++r) {
      const Vector y = p_.q * z.row(r);
      std::copy(y.begin(), y.end(), path.values.row(r).begin());
    }
    return path;
  }

 private:
  LimitParams p_;
  Vector grid_;
  std::vector<Vector> decay_;
  std::vector<Matrix> factors_;
};

inline DiffusionPath sample_exact(const LimitParams& p, std::span<const double> grid, std::uint64_t seed) {
  return ExactSampler(p, grid).sample(seed);
}

/// Euler-Maruyama from (t_start, y_start) with `step_count` uniform sub-steps
/// between consecutive recording times (t_start counts as the first).
inline DiffusionPath sample_euler(const LimitParams& p, double t_start, std::span<const double> y_start,
                                  std::span<const double> grid, std::uint64_t step_count, std::uint64_t seed) {
  if (!(t_start > 0.0)) throw DiffusionError("sample_euler: t_start must be > 0");
  if (step_count == 0) throw DiffusionError("sample_euler: step_count must be >= 1");
  validate_grid(grid);
  if (!(grid.front() > t_start)) throw DiffusionError("sample_euler: grid must start after t_start");
  const std::size_t d = p.dim();
  if (y_start.size() != d) throw DiffusionError("sample_euler: y_start dimension mismatch");

  const Matrix noise = p.delta * sym_sqrt(p.gamma).matrix();
  const Matrix contraction = Matrix::identity(d) - p.delta * p.hessian.matrix();
  CounterRng rng(seed);
  DiffusionPath path{Vector(grid.begin(), grid.end()), Matrix(grid.size(), d), seed};
  Vector y(y_start.begin(), y_start.end()), w(d), next(d);
  double t0 = t_start;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double h = (grid[r] - t0) / static_cast<double>(step_count);
    const double sqrt_h = std::sqrt(h);
    for (std::uint64_t s = 0; s < step_count; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      for (std::size_t i = 0; i < d; ++i) w[i] = rng.normal();
      for (std::size_t i = 0; i < d; ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          a += contraction(i, k) * y[k];
          b += noise(i, k) * w[k];
        }
        next[i] = y[i] + a / t * h + b * sqrt_h;
      }
      y.swap(next);
    }
    std::copy(y.begin(), y.end(), path.values.row(r).begin());
    t0 = grid[r];
  }
  return path;
}

/// max over the grid of ||Y_t||.
inline double sup_norm_statistic(const DiffusionPath& path) {
  if (path.values.rows() == 0) throw DiffusionError("sup_norm_statistic: empty path");
  double m = 0.0;
  for (std::size_t r = 0; r < path.values.rows(); ++r) m = std::max(m, norm2(path.values.row(r)));
  return m;
}

}  // namespace sgdfclt
