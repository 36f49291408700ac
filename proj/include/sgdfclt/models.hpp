#pragma once

// Convex stochastic objectives Phi(theta) = E[phi(X, theta)] with their
// subgradient oracles g(x, theta) and ground-truth asymptotic quantities.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "sgdfclt/linalg.hpp"
#include "sgdfclt/rng.hpp"

namespace sgdfclt {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { quadratic_gaussian, laplace_median, geometric_median_gaussian, huber_location };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::quadratic_gaussian: return "quadratic_gaussian";
    case ModelKind::laplace_median: return "laplace_median";
    case ModelKind::geometric_median_gaussian: return "geometric_median_gaussian";
    case ModelKind::huber_location: return "huber_location";
  }
  return "unknown";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::geometric_median_gaussian,
                 ModelKind::huber_location})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ModelSpec {
  ModelKind kind = ModelKind::laplace_median;
  std::size_t dim = 2;
  // quadratic_gaussian only; empty means identity / zero / zero.
  std::optional<SymMatrix> curvature;
  std::optional<SymMatrix> noise_cov;
  std::optional<Vector> minimizer;
  double laplace_scale = 1.0;
  double huber_c = 1.345;
};

namespace detail {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// E[1 / ||X||] for X ~ N(0, I_d), d >= 2.
inline double mean_inverse_norm_gaussian(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return std::exp(std::lgamma(half - 0.5) - std::lgamma(half)) / std::numbers::sqrt2;
}

}  // namespace detail

struct QuadraticGaussianLaw {
  SymMatrix curvature;
  Vector minimizer;
  Matrix noise_factor;  // lower Cholesky factor of the noise covariance

  void sample(CounterRng& rng, std::span<double> x, std::span<double> scratch) const {
    const std::size_t d = x.size();
    for (std::size_t i = 0; i < d; ++i) scratch[i] = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += noise_factor(i, k) * scratch[k];
      x[i] = s;
    }
  }
  void mean(std::span<const double> theta, std::span<double> out) const {
    const std::size_t d = theta.size();
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += curvature(i, j) * (theta[j] - minimizer[j]);
      out[i] = s;
    }
  }
  void subgradient(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    mean(theta, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += x[i];
  }
};

struct LaplaceMedianLaw {
  double scale = 1.0;

  void sample(CounterRng& rng, std::span<double> x, std::span<double>) const {
    for (auto& v : x) v = rng.laplace(scale);
  }
  void mean(std::span<const double> theta, std::span<double> out) const {
    for (std::size_t i = 0; i < theta.size(); ++i)
      out[i] = detail::sign(theta[i]) * -std::expm1(-std::abs(theta[i]) / scale);
  }
  void subgradient(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = detail::sign(theta[i] - x[i]);
  }
};

struct GeometricMedianLaw {
  void sample(CounterRng& rng, std::span<double> x, std::span<double>) const {
    for (auto& v : x) v = rng.normal();
  }
  void subgradient(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = theta[i] - x[i];
      r2 += out[i] * out[i];
    }
    if (r2 == 0.0) {
      for (auto& v : out) v = 0.0;
      return;
    }
    const double inv = 1.0 / std::sqrt(r2);
    for (auto& v : out) v *= inv;
  }
};

struct HuberLocationLaw {
  double c = 1.345;

  double psi(double u) const { return std::abs(u) <= c ? u : c * detail::sign(u); }

  void sample(CounterRng& rng, std::span<double> x, std::span<double>) const {
    for (auto& v : x) v = rng.normal();
  }
  double mean_1d(double theta) const {
    using detail::normal_cdf, detail::normal_pdf;
    const double lo = -c - theta, hi = c - theta;
    const double inside = normal_cdf(hi) - normal_cdf(lo);
    const double mid = theta * inside + normal_pdf(lo) - normal_pdf(hi);
    return mid + c * (1.0 - normal_cdf(hi)) - c * normal_cdf(lo);
  }
  double second_moment_1d(double theta) const {
    using detail::normal_cdf, detail::normal_pdf;
    const double lo = -c - theta, hi = c - theta;
    const double inside = normal_cdf(hi) - normal_cdf(lo);
    const double sq_inside = theta * theta * inside + 2.0 * theta * (normal_pdf(lo) - normal_pdf(hi)) + inside +
                             lo * normal_pdf(lo) - hi * normal_pdf(hi);
    return sq_inside + c * c * (1.0 - inside);
  }
  void mean(std::span<const double> theta, std::span<double> out) const {
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = mean_1d(theta[i]);
  }
  void subgradient(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = psi(theta[i] - x[i]);
  }
};

using ModelLaw = std::variant<QuadraticGaussianLaw, LaplaceMedianLaw, GeometricMedianLaw, HuberLocationLaw>;

struct ProblemModel {
  ModelKind kind;
  std::string name;
  std::size_t dim;
  Vector minimizer;
  SymMatrix hessian_at_min;
  SymMatrix noise_cov;
  std::optional<double> growth_constant;
  double noise_bound;  // sigma^2 with E||g(X, theta) - G(theta)||^2 <= sigma^2 everywhere
  bool has_exact_G;
  bool has_exact_second_moment;
  ModelLaw law;
};

/// Tests of the geometric median model compare against these closed forms:
/// H* = (1 - 1/d) E[1/||X||] I and Gamma = I / d for standard normal data.
inline ProblemModel build_model(const ModelSpec& spec) {
  const std::size_t d = spec.dim;
  if (d == 0) throw ModelError("model dimension must be >= 1");
  const std::string name{to_string(spec.kind)};
  switch (spec.kind) {
    case ModelKind::quadratic_gaussian: {
      SymMatrix a = spec.curvature.value_or(SymMatrix::identity(d));
      SymMatrix gamma = spec.noise_cov.value_or(SymMatrix::identity(d));
      Vector star = spec.minimizer.value_or(Vector(d, 0.0));
      if (a.dim() != d || gamma.dim() != d || star.size() != d)
        throw ModelError("quadratic_gaussian: parameter dimensions do not match dim");
      const auto ea = eigh_symmetric(a);
      if (!(ea.eigenvalues.front() > 0.0)) throw ModelError("quadratic_gaussian: curvature must be positive definite");
      if (!is_psd(gamma)) throw ModelError("quadratic_gaussian: noise covariance must be PSD");
      Matrix factor = cholesky(gamma);
      const double op = std::max(std::abs(ea.eigenvalues.front()), std::abs(ea.eigenvalues.back()));
      return ProblemModel{spec.kind, name, d, star, a, gamma, op, gamma.trace(), true, true,
                          QuadraticGaussianLaw{a, star, std::move(factor)}};
    }
    case ModelKind::laplace_median: {
      const double b = spec.laplace_scale;
      if (!(b > 0.0) || !std::isfinite(b)) throw ModelError("laplace_median: scale must be > 0");
      return ProblemModel{spec.kind, name, d, Vector(d, 0.0), SymMatrix::scaled_identity(d, 1.0 / b),
                          SymMatrix::identity(d), 1.0 / b, static_cast<double>(d), true, true,
                          LaplaceMedianLaw{b}};
    }
    case ModelKind::geometric_median_gaussian: {
      if (d < 2) throw ModelError("geometric_median_gaussian requires dim >= 2 (use laplace_median or huber_location)");
      const double inv_norm = detail::mean_inverse_norm_gaussian(d);
      const double dd = static_cast<double>(d);
      return ProblemModel{spec.kind, name, d, Vector(d, 0.0), SymMatrix::scaled_identity(d, (1.0 - 1.0 / dd) * inv_norm),
                          SymMatrix::scaled_identity(d, 1.0 / dd), inv_norm, 1.0, false, false,
                          GeometricMedianLaw{}};
    }
    case ModelKind::huber_location: {
      const double c = spec.huber_c;
      if (!(c > 0.0) || !std::isfinite(c)) throw ModelError("huber_location: threshold c must be > 0");
      const double inside = 2.0 * detail::normal_cdf(c) - 1.0;
      const double gamma = inside - 2.0 * c * detail::normal_pdf(c) + 2.0 * c * c * (1.0 - detail::normal_cdf(c));
      return ProblemModel{spec.kind, name, d, Vector(d, 0.0), SymMatrix::scaled_identity(d, inside),
                          SymMatrix::scaled_identity(d, gamma), 1.0, static_cast<double>(d), true, true,
                          HuberLocationLaw{c}};
    }
  }
  throw ModelError("unknown model kind");
}

/// Draws X_1, ..., X_count (rows) from the stream keyed by `seed`. The SGD
/// engine consumes exactly this stream, so row k-1 is the sample used at step k.
inline Matrix sample_data(const ProblemModel& model, std::size_t count, std::uint64_t seed) {
  Matrix out(count, model.dim);
  CounterRng rng(seed);
  Vector scratch(model.dim);
  std::visit([&](const auto& law) {
    for (std::size_t k = 0; k < count; ++k) law.sample(rng, out.row(k), scratch);
  }, model.law);
  return out;
}

inline Vector subgradient(const ProblemModel& model, std::span<const double> x, std::span<const double> theta) {
  if (x.size() != model.dim || theta.size() != model.dim) throw ModelError("subgradient: dimension mismatch");
  Vector out(model.dim);
  std::visit([&](const auto& law) { law.subgradient(x, theta, out); }, model.law);
  return out;
}

/// Exact G(theta) = E[g(X, theta)]. Models without a closed form need
/// `mc_samples > 0` and fall back to a Monte Carlo average over the stream `seed`.
inline Vector mean_subgradient(const ProblemModel& model, std::span<const double> theta, std::size_t mc_samples = 0,
                               std::uint64_t seed = 0) {
  if (theta.size() != model.dim) throw ModelError("mean_subgradient: dimension mismatch");
  Vector out(model.dim, 0.0);
  if (model.has_exact_G) {
    std::visit([&](const auto& law) {
      if constexpr (requires { law.mean(theta, std::span<double>(out)); }) law.mean(theta, out);
    }, model.law);
    return out;
  }
  if (mc_samples == 0) throw ModelError(model.name + ": exact G unavailable; supply a Monte Carlo sample count");
  CounterRng rng(seed);
  Vector x(model.dim), g(model.dim), scratch(model.dim);
  std::visit([&](const auto& law) {
    for (std::size_t s = 0; s < mc_samples; ++s) {
      law.sample(rng, x, scratch);
      law.subgradient(x, theta, g);
      for (std::size_t i = 0; i < model.dim; ++i) out[i] += g[i];
    }
  }, model.law);
  for (auto& v : out) v /= static_cast<double>(mc_samples);
  return out;
}

/// E[g(X, theta) g(X, theta)^T]; exact where the model declares it, otherwise
/// Monte Carlo with `mc_samples` draws.
inline SymMatrix subgradient_second_moment(const ProblemModel& model, std::span<const double> theta,
                                           std::size_t mc_samples = 0, std::uint64_t seed = 0) {
  const std::size_t d = model.dim;
  if (theta.size() != d) throw ModelError("subgradient_second_moment: dimension mismatch");
  Matrix m(d, d);
  if (model.has_exact_second_moment) {
    const Vector g = mean_subgradient(model, theta);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) = g[i] * g[j];
    if (std::holds_alternative<QuadraticGaussianLaw>(model.law)) {
      m = m + model.noise_cov.matrix();
    } else if (std::holds_alternative<LaplaceMedianLaw>(model.law)) {
      for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    } else if (const auto* h = std::get_if<HuberLocationLaw>(&model.law)) {
      for (std::size_t i = 0; i < d; ++i) m(i, i) = h->second_moment_1d(theta[i]);
    }
    return SymMatrix::symmetrize(m);
  }
  if (mc_samples == 0) throw ModelError(model.name + ": exact second moment unavailable; supply a Monte Carlo sample count");
  CounterRng rng(seed);
  Vector x(d), g(d), scratch(d);
  std::visit([&](const auto& law) {
    for (std::size_t s = 0; s < mc_samples; ++s) {
      law.sample(rng, x, scratch);
      law.subgradient(x, theta, g);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) += g[i] * g[j];
    }
  }, model.law);
  return SymMatrix::symmetrize((1.0 / static_cast<double>(mc_samples)) * m);
}

}  // namespace sgdfclt
