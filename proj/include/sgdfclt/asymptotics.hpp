#pragma once

// Closed-form asymptotic quantities: the CLT covariance Sigma, the empirical
// risk minimizer covariance Delta and their comparison, the drift and diffusion
// coefficients, the transition moments a_n / b_n of the rescaled chain, and
// the supremum bounds for Y and for Brownian motion.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "sgdfclt/limit_params.hpp"
#include "sgdfclt/linalg.hpp"
#include "sgdfclt/models.hpp"

namespace sgdfclt {

/// Sigma = delta int_0^inf e^{t/delta} e^{-tH} Gamma e^{-tH} dt, evaluated in
/// the eigenbasis: Sigma~_ij = delta Gamma~_ij / (lambda_i + lambda_j - 1/delta).
inline SymMatrix sigma_limit(const LimitParams& p) {
  const std::size_t d = p.dim();
  Matrix s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      s(i, j) = p.delta * p.gamma_eig(i, j) / (p.lambda[i] + p.lambda[j] - 1.0 / p.delta);
  return congruence(p.q, SymMatrix(std::move(s)));
}

/// Delta = H^{-1} Gamma H^{-1}.
inline SymMatrix delta_erm(const SymMatrix& hessian, const SymMatrix& gamma) {
  if (hessian.dim() != gamma.dim()) throw std::invalid_argument("delta_erm: dimension mismatch");
  const auto e = eigh_symmetric(hessian);
  const double top = std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
  if (!(e.eigenvalues.front() > 1e-14 * top)) throw std::invalid_argument("delta_erm: Hessian is singular or indefinite");
  const SymMatrix inv = e.apply([](double x) { return 1.0 / x; });
  return SymMatrix::symmetrize(inv.matrix() * gamma.matrix() * inv.matrix());
}

struct CovarianceReport {
  SymMatrix sigma;
  SymMatrix delta;
  double min_eig_excess = 0.0;  // smallest eigenvalue of Sigma - Delta
  double op_norm_excess = 0.0;  // ||Sigma - Delta||_op
  double bound = 0.0;           // (delta lambda_d - 1)^2 / (2 delta lambda_d - 1) ||Delta||_op
  bool pass_psd = false;
  bool pass_bound = false;
};

inline CovarianceReport compare_variances(const LimitParams& p) {
  CovarianceReport r;
  r.sigma = sigma_limit(p);
  r.delta = delta_erm(p.hessian, p.gamma);
  const SymMatrix excess = r.sigma - r.delta;
  const auto e = eigh_symmetric(excess);
  r.min_eig_excess = e.eigenvalues.front();
  r.op_norm_excess = std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
  const double dl = p.delta * p.lambda.back();
  const double delta_op = operator_norm(r.delta);
  r.bound = (dl - 1.0) * (dl - 1.0) / (2.0 * dl - 1.0) * delta_op;
  r.pass_psd = r.min_eig_excess >= -1e-10 * delta_op;
  r.pass_bound = r.op_norm_excess <= r.bound * (1.0 + 1e-10);
  return r;
}

/// a(t, y) = t^{-1} (I - delta H) y.
inline Vector drift(const LimitParams& p, double t, std::span<const double> y) {
  if (!(t > 0.0)) throw std::invalid_argument("drift: t must be > 0");
  const Vector hy = p.hessian.matrix() * y;
  Vector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - p.delta * hy[i]) / t;
  return out;
}

/// b = delta^2 Gamma.
inline SymMatrix diffusion_matrix(const LimitParams& p) { return (p.delta * p.delta) * p.gamma; }

struct TransitionMoments {
  Vector a;
  SymMatrix b;
};

/// Rescaled first and second conditional moments of the increment of the
/// rescaled chain at step k = floor(n t), given Ytilde_{k-1} = y:
///   a_n = n y / (k-1) - sqrt(n) delta G(theta* + sqrt(n) y / (k-1))
///   b_n = n y y^T / (k-1)^2 + delta^2 E[g g^T] - sqrt(n) delta / (k-1) (y G^T + G y^T)
/// with g, G evaluated at the same shifted point. G and E[g g^T] are exact when
/// the model provides them, otherwise Monte Carlo with `mc_samples` draws.
inline TransitionMoments transition_moments(const ProblemModel& model, double delta, std::uint64_t n, double t,
                                            std::span<const double> y, std::size_t mc_samples = 0,
                                            std::uint64_t seed = 0) {
  const std::size_t d = model.dim;
  if (y.size() != d) throw std::invalid_argument("transition_moments: dimension mismatch");
  if (!(t > 0.0)) throw std::invalid_argument("transition_moments: t must be > 0");
  double nt = static_cast<double>(n) * t;
  if (std::abs(nt - std::round(nt)) <= 1e-12 * std::max(1.0, nt)) nt = std::round(nt);
  const double k = std::floor(nt);
  if (k < 2.0) throw std::invalid_argument("transition_moments: floor(n t) must be >= 2");

  const double nn = static_cast<double>(n);
  const double sqrt_n = std::sqrt(nn);
  const double km1 = k - 1.0;
  Vector theta(d);
  for (std::size_t i = 0; i < d; ++i) theta[i] = model.minimizer[i] + sqrt_n * y[i] / km1;

  const Vector g = mean_subgradient(model, theta, mc_samples, seed);
  const SymMatrix second = subgradient_second_moment(model, theta, mc_samples, derive_seed(seed, 1));

  Vector a(d);
  for (std::size_t i = 0; i < d; ++i) a[i] = nn * y[i] / km1 - sqrt_n * delta * g[i];

  Matrix b(d, d);
  const double cross = sqrt_n * delta / km1;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      b(i, j) = nn * y[i] * y[j] / (km1 * km1) + delta * delta * second(i, j) - cross * (y[i] * g[j] + g[i] * y[j]);
  return {std::move(a), SymMatrix::symmetrize(b)};
}

/// int_0^inf sqrt(log ceil(u)) u^{-3/2} du. The integrand is
/// sqrt(log(k+1)) u^{-3/2} on (k, k+1], integrated exactly cell by cell up to
/// 10^6; the tail uses int_K^inf sqrt(log u) u^{-3/2} du = 2 sqrt(2) Gamma(3/2, log(K)/2).
inline double dudley_entropy_integral() {
  static const double value = [] {
    constexpr std::uint64_t kCells = 1'000'000;
    double sum = 0.0;
    for (std::uint64_t k = kCells; k >= 1; --k) {
      const double kk = static_cast<double>(k);
      sum += std::sqrt(std::log(kk + 1.0)) * 2.0 * (1.0 / std::sqrt(kk) - 1.0 / std::sqrt(kk + 1.0));
    }
    const double x = 0.5 * std::log(static_cast<double>(kCells + 1));
    const double upper_gamma = std::sqrt(x) * std::exp(-x) + 0.5 * std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(x));
    return sum + 2.0 * std::numbers::sqrt2 * upper_gamma;
  }();
  return value;
}

/// C = sqrt(2 + 2 c^2) with c = 24 * dudley_entropy_integral().
inline double default_sup_constant() {
  const double c = 24.0 * dudley_entropy_integral();
  return std::sqrt(2.0 + 2.0 * c * c);
}

/// proof:     C delta ||Gamma^{1/2}||_F sqrt(T)
/// as_stated: C delta sqrt(||Gamma^{1/2}||_F T)
/// The two agree when ||Gamma^{1/2}||_F = 1.
enum class BoundForm { proof, as_stated };

inline std::string_view to_string(BoundForm f) { return f == BoundForm::proof ? "proof" : "as_stated"; }

inline double sup_bound(const LimitParams& p, double horizon, BoundForm form = BoundForm::proof,
                        double constant = default_sup_constant()) {
  if (!(horizon > 0.0)) throw std::invalid_argument("sup_bound: T must be > 0");
  const double fro = frobenius_norm(sym_sqrt(p.gamma));
  return form == BoundForm::proof ? constant * p.delta * fro * std::sqrt(horizon)
                                  : constant * p.delta * std::sqrt(fro * horizon);
}

struct SupBounds {
  double lower;
  double upper;
};

/// Bounds on E[sup_{0<=t<=T} ||Sigma^{1/2} B_t||]. as_stated:
/// sqrt(2/pi ||Sigma^{1/2}||_F T) and c sqrt(||Sigma^{1/2}||_F T); proof:
/// sqrt(2/pi) ||Sigma^{1/2}||_F sqrt(T) and c ||Sigma^{1/2}||_F sqrt(T).
inline SupBounds brownian_sup_bounds(const SymMatrix& cov, double horizon, BoundForm form = BoundForm::as_stated,
                                     double constant = default_sup_constant()) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("brownian_sup_bounds: T must be >= 0");
  const double fro = frobenius_norm(sym_sqrt(cov));
  const double two_over_pi = 2.0 / std::numbers::pi;
  if (form == BoundForm::as_stated)
    return {std::sqrt(two_over_pi * fro * horizon), constant * std::sqrt(fro * horizon)};
  return {std::sqrt(two_over_pi) * fro * std::sqrt(horizon), constant * fro * std::sqrt(horizon)};
}

}  // namespace sgdfclt
