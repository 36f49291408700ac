#pragma once

// The SGD recursion theta_k = theta_{k-1} - t_k g(X_k, theta_{k-1}), k >= 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sgdfclt/linalg.hpp"
#include "sgdfclt/models.hpp"
#include "sgdfclt/parallel.hpp"
#include "sgdfclt/rng.hpp"

namespace sgdfclt {

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StepSchedule {
  enum class Kind { delta_over_n, power };

  Kind kind = Kind::delta_over_n;
  double delta = 1.0;  // t_k = delta / k
  double c = 1.0;      // t_k = c k^{-alpha}
  double alpha = 1.0;

  static StepSchedule delta_over_n(double delta) { return {Kind::delta_over_n, delta, 1.0, 1.0}; }
  static StepSchedule power(double c, double alpha) { return {Kind::power, 1.0, c, alpha}; }

  double step(std::uint64_t k) const {
    const double kk = static_cast<double>(k);
    return kind == Kind::delta_over_n ? delta / kk : c * std::pow(kk, -alpha);
  }

  /// Sum t_k = inf and sum t_k^2 < inf.
  void validate() const {
    if (kind == Kind::delta_over_n) {
      if (!(delta > 0.0) || !std::isfinite(delta)) throw ScheduleError("delta_over_n: delta must be > 0");
    } else {
      if (!(c > 0.0) || !std::isfinite(c)) throw ScheduleError("power schedule: c must be > 0");
      if (!(alpha > 0.5 && alpha <= 1.0)) throw ScheduleError("power schedule: alpha must lie in (1/2, 1]");
    }
  }

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

/// Smallest eigenvalue of the model's Hessian at the minimizer.
inline double smallest_curvature(const ProblemModel& model) {
  return eigh_symmetric(model.hessian_at_min).eigenvalues.front();
}

/// The diffusion limit needs t_k = delta / k with delta * lambda_1 > 1.
inline void validate_for_fclt(const StepSchedule& schedule, const ProblemModel& model) {
  schedule.validate();
  if (schedule.kind != StepSchedule::Kind::delta_over_n)
    throw ScheduleError("diffusion-limit experiments require the delta/n schedule");
  const double l1 = smallest_curvature(model);
  if (!(schedule.delta * l1 > 1.0))
    throw ScheduleError("delta * lambda_1 must exceed 1 (delta = " + std::to_string(schedule.delta) +
                        ", lambda_1 = " + std::to_string(l1) + ")");
}

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t iteration, Vector last_finite, std::optional<std::size_t> replication = std::nullopt)
      : std::runtime_error(describe(iteration, replication)),
        iteration_(iteration),
        last_finite_(std::move(last_finite)),
        replication_(replication) {}

  std::uint64_t iteration() const noexcept { return iteration_; }
  const Vector& last_finite() const noexcept { return last_finite_; }
  std::optional<std::size_t> replication() const noexcept { return replication_; }

  DivergenceError with_replication(std::size_t r) const { return {iteration_, last_finite_, r}; }

 private:
  static std::string describe(std::uint64_t it, std::optional<std::size_t> rep) {
    std::string s = "SGD diverged: non-finite iterate at k = " + std::to_string(it);
    if (rep) s += " (replication " + std::to_string(*rep) + ")";
    return s;
  }
  std::uint64_t iteration_;
  Vector last_finite_;
  std::optional<std::size_t> replication_;
};

struct Trajectory {
  std::string model;
  StepSchedule schedule;
  Vector theta0;
  std::uint64_t n_steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t stride = 1;
  std::vector<std::uint64_t> indices;
  std::vector<double> values;  // row-major, one row of dim() per recorded index

  std::size_t dim() const noexcept { return theta0.size(); }
  std::size_t size() const noexcept { return indices.size(); }
  std::span<const double> iterate(std::size_t row) const { return {values.data() + row * dim(), dim()}; }
  std::span<const double> final_iterate() const { return iterate(size() - 1); }
};

/// Runs the recursion and calls observer(k, theta_k) for k = 0..n_steps.
/// The k-th step consumes the k-th draw of the stream `seed`.
template <class Observer>
void run_sgd_observed(const ProblemModel& model, const StepSchedule& schedule, std::span<const double> theta0,
                      std::uint64_t n_steps, std::uint64_t seed, Observer&& observer) {
  schedule.validate();
  const std::size_t d = model.dim;
  if (theta0.size() != d) throw ScheduleError("theta0 dimension does not match the model");
  Vector theta(theta0.begin(), theta0.end());
  for (double v : theta)
    if (!std::isfinite(v)) throw DivergenceError(0, theta);
  observer(std::uint64_t{0}, std::span<const double>(theta));

  CounterRng rng(seed);
  Vector x(d), g(d), scratch(d), previous(d);
  std::visit([&](const auto& law) {
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
      law.sample(rng, x, scratch);
      law.subgradient(x, theta, g);
      const double step = schedule.step(k);
      bool finite = true;
      for (std::size_t i = 0; i < d; ++i) {
        previous[i] = theta[i];
        theta[i] -= step * g[i];
        finite = finite && std::isfinite(theta[i]);
      }
      if (!finite) throw DivergenceError(k, previous);
      observer(k, std::span<const double>(theta));
    }
  }, model.law);
}

/// Records every stride-th iterate plus the final one.
inline Trajectory run_sgd(const ProblemModel& model, const StepSchedule& schedule, std::span<const double> theta0,
                          std::uint64_t n_steps, std::uint64_t seed, std::uint64_t stride = 1) {
  if (stride == 0) throw ScheduleError("recording stride must be >= 1");
  Trajectory tr{model.name, schedule, Vector(theta0.begin(), theta0.end()), n_steps, seed, stride, {}, {}};
  const std::size_t rows = static_cast<std::size_t>(n_steps / stride + 2);
  tr.indices.reserve(rows);
  tr.values.reserve(rows * model.dim);
  run_sgd_observed(model, schedule, theta0, n_steps, seed, [&](std::uint64_t k, std::span<const double> th) {
    if (k % stride == 0 || k == n_steps) {
      tr.indices.push_back(k);
      tr.values.insert(tr.values.end(), th.begin(), th.end());
    }
  });
  return tr;
}

struct ReplicationResult {
  Matrix finals;                           // M x d
  std::vector<std::uint64_t> record_at;    // requested snapshot indices, ascending
  std::vector<Matrix> snapshots;           // snapshots[r] is M x d at record_at[r]
};

/// M independent runs; replication j uses derive_seed(base_seed, j).
inline ReplicationResult run_replications(const ProblemModel& model, const StepSchedule& schedule,
                                          std::span<const double> theta0, std::uint64_t n_steps, std::size_t replications,
                                          std::uint64_t base_seed, std::vector<std::uint64_t> record_at = {},
                                          unsigned threads = 0) {
  if (replications == 0) throw ScheduleError("replication count must be >= 1");
  std::sort(record_at.begin(), record_at.end());
  record_at.erase(std::unique(record_at.begin(), record_at.end()), record_at.end());
  if (!record_at.empty() && record_at.back() > n_steps)
    throw ScheduleError("snapshot index beyond n_steps");

  const std::size_t d = model.dim;
  ReplicationResult out{Matrix(replications, d), record_at, std::vector<Matrix>(record_at.size(), Matrix(replications, d))};
  parallel_for(replications, threads, [&](std::size_t j) {
    std::size_t next = 0;
    try {
      run_sgd_observed(model, schedule, theta0, n_steps, derive_seed(base_seed, j),
                       [&](std::uint64_t k, std::span<const double> th) {
                         while (next < out.record_at.size() && out.record_at[next] == k) {
                           std::copy(th.begin(), th.end(), out.snapshots[next].row(j).begin());
                           ++next;
                         }
                         if (k == n_steps) std::copy(th.begin(), th.end(), out.finals.row(j).begin());
                       });
    } catch (const DivergenceError& e) {
      throw e.with_replication(j);
    }
  });
  return out;
}

}  // namespace sgdfclt
