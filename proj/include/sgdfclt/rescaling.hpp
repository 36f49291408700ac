#pragma once

// Rescaled chain Ytilde_k^n = (k / sqrt(n)) (theta_k - theta*) and its
// piecewise-linear interpolation Y^n_t on (0, K/n].

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "sgdfclt/linalg.hpp"
#include "sgdfclt/sgd_engine.hpp"

namespace sgdfclt {

class RescalingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RescaledPath {
  std::uint64_t n = 1;
  Vector minimizer;
  std::vector<double> values;  // (K + 1) rows of dim()

  std::size_t dim() const noexcept { return minimizer.size(); }
  std::uint64_t last_index() const noexcept { return values.size() / dim() - 1; }
  std::span<const double> at(std::uint64_t k) const { return {values.data() + k * dim(), dim()}; }
  double horizon() const noexcept { return static_cast<double>(last_index()) / static_cast<double>(n); }
};

/// Lattice cell of t: k = ceil(n t) with (k-1)/n < t <= k/n, and the weight
/// w = n t - k + 1 in (0, 1] on the upper endpoint. n t within a relative
/// 1e-12 of an integer is snapped to it, so t = k/n lands on Ytilde_k.
struct LatticeCell {
  std::uint64_t k;
  double upper_weight;
};

inline LatticeCell lattice_cell(std::uint64_t n, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw RescalingError("interpolation time must be > 0");
  double nt = static_cast<double>(n) * t;
  const double r = std::round(nt);
  if (std::abs(nt - r) <= 1e-12 * std::max(1.0, r)) nt = r;
  const auto k = static_cast<std::uint64_t>(std::ceil(nt));
  return {k, nt - static_cast<double>(k) + 1.0};
}

/// (1 - w) lower + w upper, written as (k - nt) lower + (nt - k + 1) upper.
inline void interpolate_cell(std::span<const double> lower, std::span<const double> upper, double upper_weight,
                             std::span<double> out) {
  const double lw = 1.0 - upper_weight;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lw * lower[i] + upper_weight * upper[i];
}

inline RescaledPath rescale(const Trajectory& trajectory, std::uint64_t n, std::span<const double> minimizer) {
  if (n == 0) throw RescalingError("rescaling index n must be >= 1");
  if (minimizer.size() != trajectory.dim()) throw RescalingError("minimizer dimension mismatch");
  if (trajectory.stride != 1) throw RescalingError("rescaling needs a stride-1 trajectory");
  for (std::size_t r = 0; r < trajectory.size(); ++r)
    if (trajectory.indices[r] != r) throw RescalingError("trajectory indices are not contiguous from 0");

  RescaledPath path{n, Vector(minimizer.begin(), minimizer.end()), {}};
  const std::size_t d = trajectory.dim();
  path.values.resize(trajectory.size() * d);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const auto th = trajectory.iterate(k);
    const double pref = static_cast<double>(k) * inv_sqrt_n;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = pref * (th[i] - minimizer[i]);
      if (!std::isfinite(v)) throw RescalingError("non-finite rescaled value at k = " + std::to_string(k));
      path.values[k * d + i] = v;
    }
  }
  return path;
}

inline Vector evaluate(const RescaledPath& path, double t) {
  const auto cell = lattice_cell(path.n, t);
  if (cell.k > path.last_index())
    throw RescalingError("t = " + std::to_string(t) + " lies beyond the available data (K/n = " +
                         std::to_string(path.horizon()) + ")");
  Vector out(path.dim());
  if (cell.upper_weight == 1.0) {
    const auto up = path.at(cell.k);
    out.assign(up.begin(), up.end());
  } else {
    interpolate_cell(path.at(cell.k - 1), path.at(cell.k), cell.upper_weight, out);
  }
  return out;
}

/// Row i is evaluate(path, grid[i]); grid must be strictly increasing.
inline Matrix sample_on_grid(const RescaledPath& path, std::span<const double> grid) {
  Matrix out(grid.size(), path.dim());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    if (r > 0 && !(grid[r] > grid[r - 1])) throw RescalingError("grid must be strictly increasing");
    const Vector v = evaluate(path, grid[r]);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace sgdfclt
