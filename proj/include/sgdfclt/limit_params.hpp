#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "sgdfclt/linalg.hpp"
#include "sgdfclt/models.hpp"

namespace sgdfclt {

class LimitParamsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Spectral data of the limit diffusion dY = t^{-1}(I - delta H) Y dt + delta Gamma^{1/2} dB.
/// lambda ascending with eigenvectors as the columns of q; mu_i = delta lambda_i - 1 > 0;
/// gamma_eig = Q^T Gamma Q.
struct LimitParams {
  double delta;
  SymMatrix hessian;
  SymMatrix gamma;
  Vector lambda;
  Matrix q;
  Vector mu;
  SymMatrix gamma_eig;

  std::size_t dim() const noexcept { return lambda.size(); }
};

inline LimitParams make_limit_params(const SymMatrix& hessian, const SymMatrix& gamma, double delta) {
  if (hessian.dim() != gamma.dim()) throw LimitParamsError("Hessian and Gamma dimensions differ");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw LimitParamsError("delta must be > 0");
  auto eig = eigh_symmetric(hessian);
  if (!(delta * eig.eigenvalues.front() > 1.0))
    throw LimitParamsError("delta * lambda_1 must exceed 1 (got " + std::to_string(delta * eig.eigenvalues.front()) + ")");
  if (!is_psd(gamma)) throw LimitParamsError("Gamma must be positive semi-definite");
  Vector mu(eig.dim());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = delta * eig.eigenvalues[i] - 1.0;
  SymMatrix gamma_eig = congruence_transpose(eig.eigenvectors, gamma);
  return LimitParams{delta, hessian, gamma, std::move(eig.eigenvalues), std::move(eig.eigenvectors), std::move(mu),
                     std::move(gamma_eig)};
}

inline LimitParams make_limit_params(const ProblemModel& model, double delta) {
  return make_limit_params(model.hessian_at_min, model.noise_cov, delta);
}

}  // namespace sgdfclt
