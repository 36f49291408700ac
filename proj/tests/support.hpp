#pragma once

#include <cstdint>
#include <random>

#include "sgdfclt/linalg.hpp"

namespace testing_support {

using sgdfclt::Matrix;
using sgdfclt::SymMatrix;

inline SymMatrix random_symmetric(std::mt19937_64& gen, std::size_t d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = u(gen);
  return SymMatrix::symmetrize(m);
}

/// M^T M for M with uniform [-1, 1] entries.
inline SymMatrix random_psd(std::mt19937_64& gen, std::size_t d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = u(gen);
  return SymMatrix::symmetrize(m.transposed() * m);
}

/// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
inline Matrix random_orthogonal(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> z;
  Matrix q(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> v(d);
    for (auto& x : v) x = z(gen);
    for (std::size_t k = 0; k < j; ++k) {
      double p = 0.0;
      for (std::size_t i = 0; i < d; ++i) p += q(i, k) * v[i];
      for (std::size_t i = 0; i < d; ++i) v[i] -= p * q(i, k);
    }
    const double n = sgdfclt::norm2(v);
    for (std::size_t i = 0; i < d; ++i) q(i, j) = v[i] / n;
  }
  return q;
}

/// Q diag(eigs) Q^T with a random Q.
inline SymMatrix with_spectrum(std::mt19937_64& gen, const std::vector<double>& eigs) {
  const Matrix q = random_orthogonal(gen, eigs.size());
  return SymMatrix::symmetrize(q * Matrix::diagonal(eigs) * q.transposed());
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

}  // namespace testing_support
