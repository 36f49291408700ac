#pragma once

// Monte Carlo and deterministic checks tying SGD runs to the limit theory.
// Every check returns a VerificationReport whose pass flag is derived from
// its comparisons. Tolerances are SE multiples for random statistics and
// absolute/relative for deterministic ones.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdfclt/asymptotics.hpp"
#include "sgdfclt/limit_diffusion.hpp"
#include "sgdfclt/limit_params.hpp"
#include "sgdfclt/models.hpp"
#include "sgdfclt/parallel.hpp"
#include "sgdfclt/report.hpp"
#include "sgdfclt/rescaling.hpp"
#include "sgdfclt/sgd_engine.hpp"
#include "sgdfclt/stats.hpp"

namespace sgdfclt {

class CheckError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunOptions {
  Vector theta0;         // empty: minimizer + (1, ..., 1)
  unsigned threads = 0;  // 0: process default
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Vector start_point(const ProblemModel& model, const RunOptions& opts) {
  if (opts.theta0.empty()) {
    Vector t = model.minimizer;
    for (auto& v : t) v += 1.0;
    return t;
  }
  if (opts.theta0.size() != model.dim) throw CheckError("theta0 dimension does not match the model");
  return opts.theta0;
}

inline std::string label(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json to_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

inline Json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

inline VerificationReport divergence_report(VerificationReport r, const DivergenceError& e) {
  r.comparisons.clear();
  r.add("finite_iterates", 0.0, 1.0, 0.0, Rule::at_least);
  r.notes.push_back(e.what());
  r.diagnostics["divergence"] = Json{{"iteration", e.iteration()},
                                     {"replication", e.replication() ? Json(*e.replication()) : Json()},
                                     {"last_finite", to_json(e.last_finite())}};
  r.finalize();
  return r;
}

/// Deviations sqrt(n)(theta_n - theta*) of the final iterates, one row per replication.
inline Matrix scaled_errors(const Matrix& finals, std::span<const double> minimizer, double scale) {
  Matrix w(finals.rows(), finals.cols());
  for (std::size_t r = 0; r < finals.rows(); ++r)
    for (std::size_t i = 0; i < finals.cols(); ++i) w(r, i) = scale * (finals(r, i) - minimizer[i]);
  return w;
}

inline Vector error_norms(const Matrix& iterates, std::span<const double> minimizer) {
  Vector out(iterates.rows());
  for (std::size_t r = 0; r < iterates.rows(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < iterates.cols(); ++i) {
      const double e = iterates(r, i) - minimizer[i];
      s += e * e;
    }
    out[r] = std::sqrt(s);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CLT for the last iterate.

struct CltTolerance {
  double relative_opnorm = 0.10;
  double mean_se = 4.0;
};

inline VerificationReport clt_check(const ProblemModel& model, double delta, std::uint64_t n, std::size_t replications,
                                    std::uint64_t base_seed, const RunOptions& opts = {}, CltTolerance tol = {}) {
  detail::Stopwatch clock;
  VerificationReport r;
  r.check = "clt";
  r.model = model.name;
  r.parameters = Json{{"delta", delta}, {"n", n}, {"replications", replications}, {"base_seed", base_seed}};
  if (replications < 100) {
    r.add("replications", static_cast<double>(replications), 100.0, 0.0, Rule::at_least);
    r.notes.push_back("insufficient replications");
    r.finalize();
    r.wall_seconds = clock.seconds();
    return r;
  }
  const LimitParams params = make_limit_params(model, delta);
  const Vector theta0 = detail::start_point(model, opts);
  r.parameters["theta0"] = detail::to_json(theta0);
  ReplicationResult runs;
  try {
    runs = run_replications(model, StepSchedule::delta_over_n(delta), theta0, n, replications, base_seed, {}, opts.threads);
  } catch (const DivergenceError& e) {
    return detail::divergence_report(std::move(r), e);
  }

  const Matrix w = detail::scaled_errors(runs.finals, model.minimizer, std::sqrt(static_cast<double>(n)));
  const auto emp = estimate_cross_covariance(w, w);
  const SymMatrix sigma = sigma_limit(params);
  const SymMatrix emp_sym = SymMatrix::symmetrize(emp.cov);
  const double sigma_op = operator_norm(sigma);
  const double diff_op = operator_norm(emp_sym - sigma);
  if (sigma_op > 0.0) {
    r.add("relative_opnorm_error", diff_op / sigma_op, 0.0, tol.relative_opnorm, Rule::at_most);
  } else {
    r.add("opnorm_error", diff_op, 0.0, 1e-12, Rule::at_most);
  }
  for (std::size_t i = 0; i < model.dim; ++i) {
    const auto m = estimate_mean(w.column(i));
    r.add("mean[" + std::to_string(i) + "]", m.mean, 0.0, tol.mean_se, Rule::se_multiple, m.se);
  }
  r.diagnostics["empirical_cov"] = to_json(emp.cov);
  r.diagnostics["empirical_cov_se"] = to_json(emp.se);
  r.diagnostics["sigma"] = to_json(sigma);
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Finite-dimensional distributions of the rescaled path.

struct FddTolerance {
  double se_multiple = 5.0;
};

inline VerificationReport fdd_check(const ProblemModel& model, double delta, std::uint64_t n, std::size_t replications,
                                    std::span<const double> grid, std::uint64_t base_seed, const RunOptions& opts = {},
                                    FddTolerance tol = {}) {
  detail::Stopwatch clock;
  validate_grid(grid);
  if (grid.back() > 1.0) throw CheckError("fdd grid must lie in (0, 1]");
  if (static_cast<double>(n) * grid.front() < 100.0) throw CheckError("fdd grid needs n * min(grid) >= 100");
  if (replications < 2) throw CheckError("fdd check needs at least two replications");

  VerificationReport r;
  r.check = "fdd";
  r.model = model.name;
  r.parameters = Json{{"delta", delta}, {"n", n}, {"replications", replications}, {"base_seed", base_seed},
                      {"grid", Json(std::vector<double>(grid.begin(), grid.end()))}};
  const LimitParams params = make_limit_params(model, delta);
  const Vector theta0 = detail::start_point(model, opts);
  r.parameters["theta0"] = detail::to_json(theta0);

  std::vector<LatticeCell> cells;
  std::vector<std::uint64_t> record;
  for (double t : grid) {
    const auto c = lattice_cell(n, t);
    cells.push_back(c);
    record.push_back(c.k);
    if (c.upper_weight != 1.0) record.push_back(c.k - 1);
  }
  const std::uint64_t last = std::max_element(cells.begin(), cells.end(), [](auto a, auto b) { return a.k < b.k; })->k;
  ReplicationResult runs;
  try {
    runs = run_replications(model, StepSchedule::delta_over_n(delta), theta0, last, replications, base_seed, record,
                            opts.threads);
  } catch (const DivergenceError& e) {
    return detail::divergence_report(std::move(r), e);
  }
  auto snapshot = [&](std::uint64_t k) -> const Matrix& {
    const auto it = std::lower_bound(runs.record_at.begin(), runs.record_at.end(), k);
    return runs.snapshots[static_cast<std::size_t>(it - runs.record_at.begin())];
  };

  const std::size_t d = model.dim;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<Matrix> y_at(grid.size(), Matrix(replications, d));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto c = cells[g];
    const Matrix& up = snapshot(c.k);
    const double ku = static_cast<double>(c.k) * inv_sqrt_n;
    for (std::size_t rep = 0; rep < replications; ++rep)
      for (std::size_t i = 0; i < d; ++i) {
        double v = ku * (up(rep, i) - model.minimizer[i]);
        if (c.upper_weight != 1.0) {
          const Matrix& lo = snapshot(c.k - 1);
          const double kl = static_cast<double>(c.k - 1) * inv_sqrt_n;
          v = (1.0 - c.upper_weight) * kl * (lo(rep, i) - model.minimizer[i]) + c.upper_weight * v;
        }
        y_at[g](rep, i) = v;
      }
  }

  double worst = 0.0;
  Json entries = Json::array();
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = a; b < grid.size(); ++b) {
      const auto emp = estimate_cross_covariance(y_at[a], y_at[b]);
      const Matrix target = ambient_kernel_matrix(params, grid[a], grid[b]);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          if (a == b && j < i) continue;
          const std::string name = "cov(Y[" + detail::label(grid[a]) + "](" + std::to_string(i) + "), Y[" +
                                   detail::label(grid[b]) + "](" + std::to_string(j) + "))";
          r.add(name, emp.cov(i, j), target(i, j), tol.se_multiple, Rule::se_multiple, emp.se(i, j));
          worst = std::max(worst, r.comparisons.back().deviation_in_se());
        }
    }
  r.diagnostics["max_deviation_se"] = detail::finite_or_string(worst);
  r.diagnostics["comparisons"] = r.comparisons.size();
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Almost-sure convergence of the iterates.

inline VerificationReport consistency_check(const ProblemModel& model, const StepSchedule& schedule,
                                            std::vector<std::uint64_t> n_list, std::size_t replications,
                                            std::uint64_t base_seed, const RunOptions& opts = {}) {
  detail::Stopwatch clock;
  schedule.validate();
  if (n_list.size() < 2) throw CheckError("consistency check needs at least two horizons");
  std::sort(n_list.begin(), n_list.end());
  VerificationReport r;
  r.check = "consistency";
  r.model = model.name;
  const Vector theta0 = detail::start_point(model, opts);
  r.parameters = Json{{"schedule", schedule.kind == StepSchedule::Kind::delta_over_n ? "delta_over_n" : "power"},
                      {"delta", schedule.delta}, {"c", schedule.c}, {"alpha", schedule.alpha},
                      {"n_list", n_list}, {"replications", replications}, {"base_seed", base_seed},
                      {"theta0", detail::to_json(theta0)}};
  ReplicationResult runs;
  try {
    runs = run_replications(model, schedule, theta0, n_list.back(), replications, base_seed, n_list, opts.threads);
  } catch (const DivergenceError& e) {
    return detail::divergence_report(std::move(r), e);
  }
  Vector medians, p95;
  for (const auto& snap : runs.snapshots) {
    const Vector errs = detail::error_norms(snap, model.minimizer);
    medians.push_back(quantile(errs, 0.5));
    p95.push_back(quantile(errs, 0.95));
  }
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    const std::string tag = "[" + std::to_string(n_list[k]) + "] < [" + std::to_string(n_list[k - 1]) + "]";
    r.add("median" + tag, medians[k], medians[k - 1], 0.0, Rule::below_or_zero);
    r.add("p95" + tag, p95[k], p95[k - 1], 0.0, Rule::below_or_zero);
  }
  r.diagnostics["median"] = medians;
  r.diagnostics["p95"] = p95;
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Tightness of sqrt(n)(theta_n - theta*).

/// Threshold C = multiplier sqrt(tr Sigma) with the Chebyshev budget
/// P(sqrt(n)||theta_n - theta*|| > C) < 1 / multiplier^2. A multiplier <= 1
/// makes the budget vacuous and the check fails on its guard comparison.
inline VerificationReport tightness_check(const ProblemModel& model, double delta, std::vector<std::uint64_t> n_list,
                                          std::size_t replications, double c_multiplier, std::uint64_t base_seed,
                                          const RunOptions& opts = {}) {
  detail::Stopwatch clock;
  if (n_list.empty()) throw CheckError("tightness check needs at least one horizon");
  if (!(c_multiplier > 0.0)) throw CheckError("C multiplier must be > 0");
  std::sort(n_list.begin(), n_list.end());
  const LimitParams params = make_limit_params(model, delta);
  const double tr_sigma = sigma_limit(params).trace();
  const double threshold = c_multiplier * std::sqrt(tr_sigma);
  const double budget = 1.0 / (c_multiplier * c_multiplier);

  VerificationReport r;
  r.check = "tightness";
  r.model = model.name;
  const Vector theta0 = detail::start_point(model, opts);
  r.parameters = Json{{"delta", delta}, {"n_list", n_list}, {"replications", replications},
                      {"c_multiplier", c_multiplier}, {"base_seed", base_seed}, {"theta0", detail::to_json(theta0)}};
  r.add("chebyshev_budget_nonvacuous", budget, 1.0, 0.0, Rule::below);

  ReplicationResult runs;
  try {
    runs = run_replications(model, StepSchedule::delta_over_n(delta), theta0, n_list.back(), replications, base_seed,
                            n_list, opts.threads);
  } catch (const DivergenceError& e) {
    return detail::divergence_report(std::move(r), e);
  }
  Vector tails;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const Vector errs = detail::error_norms(runs.snapshots[k], model.minimizer);
    const double scale = std::sqrt(static_cast<double>(n_list[k]));
    std::size_t exceed = 0;
    for (double e : errs)
      if (scale * e > threshold) ++exceed;
    const double prob = static_cast<double>(exceed) / static_cast<double>(replications);
    tails.push_back(prob);
    r.add("tail[" + std::to_string(n_list[k]) + "]", prob, budget, 0.0, Rule::below);
  }
  r.diagnostics["threshold"] = threshold;
  r.diagnostics["trace_sigma"] = tr_sigma;
  r.diagnostics["tail_probabilities"] = tails;
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Convergence of the transition moments a_n, b_n to the drift and diffusion.

struct CoefficientTolerance {
  double drift = 0.02;
  double diffusion = 0.05;
  std::size_t mc_samples = 0;  // used only when the model lacks exact moments
  std::uint64_t seed = 0;
};

struct CoefficientErrors {
  double drift = 0.0;      // sup ||a_n - a||
  double diffusion = 0.0;  // sup ||b_n - delta^2 Gamma||_F
};

inline CoefficientErrors coefficient_errors(const ProblemModel& model, double delta, std::uint64_t n,
                                            std::span<const double> t_grid, const std::vector<Vector>& y_grid,
                                            std::size_t mc_samples = 0, std::uint64_t seed = 0) {
  const std::size_t d = model.dim;
  const Matrix contraction = Matrix::identity(d) - delta * model.hessian_at_min.matrix();
  const SymMatrix b_limit = (delta * delta) * model.noise_cov;
  CoefficientErrors out;
  std::uint64_t point = 0;
  for (double t : t_grid)
    for (const auto& y : y_grid) {
      const auto mom = transition_moments(model, delta, n, t, y, mc_samples, derive_seed(seed, point++));
      const Vector cy = contraction * y;
      double da = 0.0;
      for (std::size_t i = 0; i < d; ++i) da += (mom.a[i] - cy[i] / t) * (mom.a[i] - cy[i] / t);
      out.drift = std::max(out.drift, std::sqrt(da));
      out.diffusion = std::max(out.diffusion, frobenius_norm(mom.b - b_limit));
    }
  return out;
}

inline VerificationReport coefficient_convergence_check(const ProblemModel& model, double delta,
                                                        std::vector<std::uint64_t> n_list, std::span<const double> t_grid,
                                                        const std::vector<Vector>& y_grid, CoefficientTolerance tol = {}) {
  detail::Stopwatch clock;
  if (n_list.empty() || t_grid.empty() || y_grid.empty()) throw CheckError("coefficient check needs non-empty grids");
  std::sort(n_list.begin(), n_list.end());
  const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
  if (std::floor(static_cast<double>(n_list.front()) * t_min) < 2.0)
    throw CheckError("coefficient check needs floor(n * min(t_grid)) >= 2");
  for (const auto& y : y_grid)
    if (y.size() != model.dim) throw CheckError("y grid point dimension mismatch");

  VerificationReport r;
  r.check = "coefficients";
  r.model = model.name;
  Json ys = Json::array();
  for (const auto& y : y_grid) ys.push_back(detail::to_json(y));
  r.parameters = Json{{"delta", delta}, {"n_list", n_list},
                      {"t_grid", Json(std::vector<double>(t_grid.begin(), t_grid.end()))}, {"y_grid", ys},
                      {"mc_samples", tol.mc_samples}};
  Vector da, db;
  for (auto n : n_list) {
    const auto e = coefficient_errors(model, delta, n, t_grid, y_grid, tol.mc_samples, derive_seed(tol.seed, n));
    da.push_back(e.drift);
    db.push_back(e.diffusion);
  }
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    const std::string tag = "[" + std::to_string(n_list[k]) + "] < [" + std::to_string(n_list[k - 1]) + "]";
    r.add("sup_drift_error" + tag, da[k], da[k - 1], 0.0, Rule::below_or_zero);
    r.add("sup_diffusion_error" + tag, db[k], db[k - 1], 0.0, Rule::below_or_zero);
  }
  r.add("final_sup_drift_error", da.back(), tol.drift, 0.0, Rule::below_or_zero);
  r.add("final_sup_diffusion_error", db.back(), tol.diffusion, 0.0, Rule::below_or_zero);
  r.diagnostics["sup_drift_error"] = da;
  r.diagnostics["sup_diffusion_error"] = db;
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

/// n P(||Ytilde_k - y|| > radius | Ytilde_{k-1} = y) at k = floor(n t), by
/// Monte Carlo over one SGD step. The increment is y / (k-1) - delta g / sqrt(n)
/// with g drawn at theta* + sqrt(n) y / (k-1). Probabilities of order 1/n need
/// samples well beyond n, so this is expensive and not part of the default suite.
inline double exit_rate(const ProblemModel& model, double delta, std::uint64_t n, double t, std::span<const double> y,
                        double radius, std::size_t samples, std::uint64_t seed) {
  const std::size_t d = model.dim;
  double nt = static_cast<double>(n) * t;
  if (std::abs(nt - std::round(nt)) <= 1e-12 * std::max(1.0, nt)) nt = std::round(nt);
  const double km1 = std::floor(nt) - 1.0;
  if (km1 < 1.0) throw CheckError("exit rate needs floor(n t) >= 2");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  Vector theta(d);
  for (std::size_t i = 0; i < d; ++i) theta[i] = model.minimizer[i] + sqrt_n * y[i] / km1;
  CounterRng rng(seed);
  Vector x(d), g(d), scratch(d);
  std::size_t exits = 0;
  std::visit([&](const auto& law) {
    for (std::size_t s = 0; s < samples; ++s) {
      law.sample(rng, x, scratch);
      law.subgradient(x, theta, g);
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double inc = y[i] / km1 - delta * g[i] / sqrt_n;
        sq += inc * inc;
      }
      if (sq > radius * radius) ++exits;
    }
  }, model.law);
  return static_cast<double>(n) * static_cast<double>(exits) / static_cast<double>(samples);
}

struct ExitOptions {
  double radius = 0.5;
  double tolerance = 0.01;     // final sup of n P below this
  std::size_t samples = 0;     // per point; 0 means 10 n
  std::uint64_t seed = 0;
};

inline VerificationReport exit_probability_check(const ProblemModel& model, double delta,
                                                 std::vector<std::uint64_t> n_list, std::span<const double> t_grid,
                                                 const std::vector<Vector>& y_grid, ExitOptions opts = {}) {
  detail::Stopwatch clock;
  if (n_list.empty() || t_grid.empty() || y_grid.empty()) throw CheckError("exit check needs non-empty grids");
  if (!(opts.radius > 0.0)) throw CheckError("exit radius must be > 0");
  std::sort(n_list.begin(), n_list.end());
  for (const auto& y : y_grid)
    if (y.size() != model.dim) throw CheckError("y grid point dimension mismatch");

  VerificationReport r;
  r.check = "exit_probability";
  r.model = model.name;
  r.parameters = Json{{"delta", delta}, {"n_list", n_list},
                      {"t_grid", Json(std::vector<double>(t_grid.begin(), t_grid.end()))},
                      {"radius", opts.radius}, {"samples", opts.samples}, {"seed", opts.seed}};
  Vector sup_rate;
  for (auto n : n_list) {
    const std::size_t samples = opts.samples > 0 ? opts.samples : static_cast<std::size_t>(10 * n);
    Vector rates(t_grid.size() * y_grid.size());
    parallel_for(rates.size(), 0, [&](std::size_t p) {
      const double t = t_grid[p / y_grid.size()];
      rates[p] = exit_rate(model, delta, n, t, y_grid[p % y_grid.size()], opts.radius, samples,
                           derive_seed(derive_seed(opts.seed, n), p));
    });
    sup_rate.push_back(*std::max_element(rates.begin(), rates.end()));
  }
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    const std::string tag = "[" + std::to_string(n_list[k]) + "] < [" + std::to_string(n_list[k - 1]) + "]";
    r.add("sup_exit_rate" + tag, sup_rate[k], sup_rate[k - 1], 0.0, Rule::below_or_zero);
  }
  r.add("final_sup_exit_rate", sup_rate.back(), opts.tolerance, 0.0, Rule::below_or_zero);
  r.diagnostics["sup_exit_rate"] = sup_rate;
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Expected suprema.

/// Monte Carlo E[sup_{t in grid} ||Y_t||] over exact paths on t_k = k T / grid_size.
inline Estimate estimate_expected_sup(const LimitParams& params, double horizon, std::size_t grid_size,
                                      std::size_t paths, std::uint64_t seed, unsigned threads = 0) {
  Vector grid(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k)
    grid[k] = horizon * static_cast<double>(k + 1) / static_cast<double>(grid_size);
  const ExactSampler sampler(params, grid);
  Vector sups(paths);
  parallel_for(paths, threads, [&](std::size_t j) {
    CounterRng rng(derive_seed(seed, j));
    Matrix z(grid_size, params.dim());
    sampler.sample_eigen(rng, z);
    double m = 0.0;
    for (std::size_t r = 0; r < grid_size; ++r) m = std::max(m, norm2(z.row(r)));  // Q is orthogonal
    sups[j] = m;
  });
  return estimate_mean(sups);
}

/// Monte Carlo E[sup_{0<=t<=T} ||cov^{1/2} B_t||] with `steps` uniform steps.
/// In one dimension the maximum of |B| inside each step is drawn from the
/// Brownian-bridge extremes, which removes the grid bias; otherwise the grid
/// maximum is used (a downward-biased estimate).
inline Estimate estimate_brownian_sup(const SymMatrix& cov, double horizon, std::size_t steps, std::size_t paths,
                                      std::uint64_t seed, unsigned threads = 0) {
  if (steps == 0 || paths == 0) throw CheckError("Brownian estimate needs steps >= 1 and paths >= 1");
  const std::size_t d = cov.dim();
  const Matrix root = sym_sqrt(cov).matrix();
  const double h = horizon / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  Vector sups(paths);
  parallel_for(paths, threads, [&](std::size_t j) {
    CounterRng rng(derive_seed(seed, j));
    if (d == 1) {
      const double sigma = root(0, 0);
      const double var_h = sigma * sigma * h;
      double b = 0.0, best = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        const double next = b + sigma * sqrt_h * rng.normal();
        const double gap2 = (next - b) * (next - b);
        const double hi = 0.5 * (b + next + std::sqrt(gap2 - 2.0 * var_h * std::log(rng.uniform())));
        const double lo = 0.5 * (b + next - std::sqrt(gap2 - 2.0 * var_h * std::log(rng.uniform())));
        best = std::max({best, hi, -lo});
        b = next;
      }
      sups[j] = best;
      return;
    }
    Vector w(d, 0.0), z(d);
    double best = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal() * sqrt_h;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) w[i] += root(i, k) * z[k];
      best = std::max(best, norm2(w));
    }
    sups[j] = best;
  });
  return estimate_mean(sups);
}

struct SupBoundOptions {
  BoundForm form = BoundForm::proof;
  double constant = 0.0;           // 0: default_sup_constant()
  std::size_t brownian_paths = 0;  // 0: same as the diffusion path count
  unsigned threads = 0;
};

inline VerificationReport sup_bound_check(const LimitParams& params, double horizon, std::size_t grid_size,
                                          std::size_t paths, std::uint64_t base_seed, SupBoundOptions opts = {}) {
  detail::Stopwatch clock;
  if (grid_size < 100) throw CheckError("sup bound check needs grid_size >= 100");
  if (!(horizon > 0.0)) throw CheckError("sup bound check needs T > 0");
  if (paths < 2) throw CheckError("sup bound check needs at least two paths");
  const double constant = opts.constant > 0.0 ? opts.constant : default_sup_constant();

  VerificationReport r;
  r.check = "sup_bound";
  r.model = "limit_diffusion";
  r.parameters = Json{{"delta", params.delta}, {"T", horizon}, {"grid_size", grid_size}, {"paths", paths},
                      {"base_seed", base_seed}, {"form", std::string(to_string(opts.form))}, {"constant", constant}};

  const Estimate sup = estimate_expected_sup(params, horizon, grid_size, paths, derive_seed(base_seed, 0), opts.threads);
  const double bound = sup_bound(params, horizon, opts.form, constant);
  r.add("expected_sup_vs_bound", sup.mean, bound, 0.0, Rule::at_most, sup.se);

  const double fro = frobenius_norm(sym_sqrt(params.gamma));
  const double scale = params.delta * fro * std::sqrt(horizon);
  r.diagnostics["expected_sup"] = sup.mean;
  r.diagnostics["expected_sup_se"] = sup.se;
  r.diagnostics["bound"] = bound;
  r.diagnostics["implied_constant"] = scale > 0.0 ? Json(sup.mean / scale) : Json();

  // Brownian comparison for the same diffusion coefficient delta^2 Gamma.
  const SymMatrix diff = diffusion_matrix(params);
  const std::size_t bpaths = opts.brownian_paths > 0 ? opts.brownian_paths : paths;
  const Estimate bsup = estimate_brownian_sup(diff, horizon, grid_size, bpaths, derive_seed(base_seed, 1), opts.threads);
  const SupBounds bb = brownian_sup_bounds(diff, horizon, BoundForm::proof, constant);
  r.add("brownian_sup_vs_lower_bound", bsup.mean, bb.lower, 0.0, Rule::at_least, bsup.se);
  r.diagnostics["brownian_expected_sup"] = bsup.mean;
  r.diagnostics["brownian_expected_sup_se"] = bsup.se;
  r.diagnostics["brownian_lower_bound"] = bb.lower;
  r.diagnostics["brownian_upper_bound"] = bb.upper;
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Deterministic kernel inequalities on a uniform (s, t) grid over (0, T]^2.
//   E|Y_s(i) - Y_t(i)|^2 <= delta^2 |s - t| Gamma~_ii
//   s - 2 min(s,t)^{dl} max(s,t)^{1-dl} + t <= (2 dl - 1)|s - t|,  dl = delta lambda_i

inline VerificationReport kernel_inequality_check(const LimitParams& params, double horizon = 1.0,
                                                  std::size_t points = 100, double slack = 1e-12) {
  detail::Stopwatch clock;
  if (points == 0 || !(horizon > 0.0)) throw CheckError("kernel inequality check needs points >= 1 and T > 0");
  double worst_increment = -INFINITY, worst_concavity = -INFINITY;
  const double d2 = params.delta * params.delta;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    const double dl = params.delta * params.lambda[i];
    for (std::size_t a = 1; a <= points; ++a)
      for (std::size_t b = 1; b <= points; ++b) {
        const double s = horizon * static_cast<double>(a) / static_cast<double>(points);
        const double t = horizon * static_cast<double>(b) / static_cast<double>(points);
        const double gap = std::abs(s - t);
        const double inc = covariance_kernel(params, i, i, s, s) - 2.0 * covariance_kernel(params, i, i, s, t) +
                           covariance_kernel(params, i, i, t, t);
        worst_increment = std::max(worst_increment, inc - d2 * gap * params.gamma_eig(i, i));
        const double lo = std::min(s, t), hi = std::max(s, t);
        const double g = s - 2.0 * std::exp(dl * std::log(lo) + (1.0 - dl) * std::log(hi)) + t;
        worst_concavity = std::max(worst_concavity, g - (2.0 * dl - 1.0) * gap);
      }
  }
  VerificationReport r;
  r.check = "kernel_inequalities";
  r.model = "limit_diffusion";
  r.parameters = Json{{"delta", params.delta}, {"T", horizon}, {"points", points}, {"slack", slack}};
  r.add("max_increment_excess", worst_increment, 0.0, slack, Rule::at_most);
  r.add("max_concavity_excess", worst_concavity, 0.0, slack, Rule::at_most);
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Sigma versus Delta.

inline VerificationReport variance_check(const LimitParams& params) {
  detail::Stopwatch clock;
  const CovarianceReport cr = compare_variances(params);
  VerificationReport r;
  r.check = "variances";
  r.model = "limit_diffusion";
  r.parameters = Json{{"delta", params.delta}};
  const double delta_op = operator_norm(cr.delta);
  r.add("min_eig(sigma - delta)", cr.min_eig_excess, 0.0, 1e-10 * delta_op, Rule::at_least);
  r.add("opnorm(sigma - delta) vs bound", cr.op_norm_excess, cr.bound, 1e-10 * cr.bound, Rule::at_most);
  r.diagnostics["sigma"] = to_json(cr.sigma);
  r.diagnostics["delta"] = to_json(cr.delta);
  r.finalize();
  r.wall_seconds = clock.seconds();
  return r;
}

}  // namespace sgdfclt
