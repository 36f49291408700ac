#pragma once

// Dense linear algebra for small symmetric problems (d <= 10 in practice).
// Row-major storage, no external dependencies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sgdfclt {

using Vector = std::vector<double>;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// General dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw LinalgError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t d) {
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw LinalgError("matrix product: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw LinalgError("matrix-vector product: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Matrix operator+(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw LinalgError("matrix sum: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += b(i, j);
  return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw LinalgError("matrix difference: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= b(i, j);
  return a;
}

inline Matrix operator*(double s, Matrix a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (auto& v : a.row(i)) v *= s;
  return a;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Dense symmetric matrix. Symmetry is checked on construction with the
/// tolerance |a_ij - a_ji| <= 1e-12 (1 + |a_ij|); the stored matrix is exactly
/// symmetrized.
class SymMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  SymMatrix() : m_(1, 1) {}
  explicit SymMatrix(std::size_t dim) : m_(dim, dim) {
    if (dim == 0) throw LinalgError("SymMatrix: dim must be >= 1");
  }
  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || !m_.square()) throw LinalgError("SymMatrix: square matrix with dim >= 1 required");
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = i + 1; j < dim(); ++j) {
        const double a = m_(i, j), b = m_(j, i);
        if (!(std::abs(a - b) <= kSymmetryTol * (1.0 + std::abs(a))))
          throw LinalgError("SymMatrix: input not symmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        const double avg = 0.5 * (a + b);
        m_(i, j) = avg;
        m_(j, i) = avg;
      }
  }
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) : SymMatrix(Matrix(rows)) {}

  /// Builds from an arbitrary square matrix by averaging with its transpose.
  static SymMatrix symmetrize(const Matrix& a) {
    if (!a.square()) throw LinalgError("symmetrize: square matrix required");
    Matrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return SymMatrix(std::move(s));
  }
  static SymMatrix identity(std::size_t d) { return SymMatrix(Matrix::identity(d)); }
  static SymMatrix scaled_identity(std::size_t d, double s) { return SymMatrix(s * Matrix::identity(d)); }
  static SymMatrix diagonal(std::span<const double> diag) { return SymMatrix(Matrix::diagonal(diag)); }
  static SymMatrix diagonal(std::initializer_list<double> diag) {
    return diagonal(std::span<const double>(diag.begin(), diag.size()));
  }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }
  double max_abs() const { return m_.max_abs(); }
  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
    return t;
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  Matrix m_;
};

inline SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.matrix() + b.matrix()); }
inline SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.matrix() - b.matrix()); }
inline SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.matrix()); }

/// Q^T A Q, symmetrized.
inline SymMatrix congruence_transpose(const Matrix& q, const SymMatrix& a) {
  return SymMatrix::symmetrize(q.transposed() * a.matrix() * q);
}
/// Q A Q^T, symmetrized.
inline SymMatrix congruence(const Matrix& q, const SymMatrix& a) {
  return SymMatrix::symmetrize(q * a.matrix() * q.transposed());
}

struct EigenDecomposition {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors; // columns are the eigenvectors

  std::size_t dim() const noexcept { return eigenvalues.size(); }

  /// Q f(diag) Q^T for a scalar map f applied to the eigenvalues.
  template <class F>
  SymMatrix apply(F&& f) const {
    const std::size_t d = dim();
    Matrix r(d, d);
    for (std::size_t k = 0; k < d; ++k) {
      const double fk = f(eigenvalues[k]);
      for (std::size_t i = 0; i < d; ++i) {
        const double qik = eigenvectors(i, k) * fk;
        for (std::size_t j = 0; j < d; ++j) r(i, j) += qik * eigenvectors(j, k);
      }
    }
    return SymMatrix::symmetrize(r);
  }
};

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}
inline double frobenius_norm(const SymMatrix& a) { return frobenius_norm(a.matrix()); }

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius mass
/// drops below 1e-14 ||A||_F; at most 100 sweeps.
inline EigenDecomposition eigh_symmetric(const SymMatrix& a) {
  constexpr int kMaxSweeps = 100;
  const std::size_t d = a.dim();
  if (!a.matrix().all_finite()) throw LinalgError("eigh_symmetric: non-finite entries");

  Matrix m = a.matrix();
  Matrix v = Matrix::identity(d);
  const double threshold = 1e-14 * frobenius_norm(m);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= threshold) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double app = m(p, p), aqq = m(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_norm() > threshold) throw LinalgError("eigh_symmetric: no convergence after 100 sweeps");

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });

  EigenDecomposition out{Vector(d), Matrix(d, d)};
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = m(order[k], order[k]);
    for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

/// Lower-triangular L with L L^T = A. Pivots in [-1e-12 s, 0) are clamped to
/// zero, s = max(1, ||A||_max); anything more negative means A is not PSD.
inline Matrix cholesky(const SymMatrix& a) {
  const std::size_t d = a.dim();
  const double clamp = 1e-12 * std::max(1.0, a.max_abs());
  Matrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!std::isfinite(pivot)) throw LinalgError("cholesky: non-finite pivot");
    if (pivot < -clamp) throw LinalgError("cholesky: matrix is not positive semi-definite");
    if (pivot <= 0.0) continue;  // column stays zero
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline double operator_norm(const SymMatrix& a) {
  const auto e = eigh_symmetric(a);
  return std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
}

inline double min_eigenvalue(const SymMatrix& a) { return eigh_symmetric(a).eigenvalues.front(); }

/// PSD square root. Eigenvalues >= -1e-10 ||A||_op are treated as zero.
inline SymMatrix sym_sqrt(const SymMatrix& a) {
  const auto e = eigh_symmetric(a);
  const double op = std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
  if (e.eigenvalues.front() < -1e-10 * op) throw LinalgError("sym_sqrt: matrix is not positive semi-definite");
  return e.apply([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

inline bool is_psd(const SymMatrix& a, double rel_tol = 1e-10) {
  const auto e = eigh_symmetric(a);
  const double op = std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
  return e.eigenvalues.front() >= -rel_tol * op;
}

}  // namespace sgdfclt
