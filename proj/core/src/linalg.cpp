#include "amckfac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace amckfac {

namespace {

void check_finite(const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw ContractViolation("matrix/vector entry is not finite");
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation("matrix dimensions must be positive");
  }
  if (!std::isfinite(fill)) {
    throw ContractViolation("matrix fill value is not finite");
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation("matrix dimensions must be positive");
  }
  if (data_.size() != rows * cols) {
    throw ContractViolation("matrix data length does not match rows*cols");
  }
  check_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                     std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw ContractViolation("block out of range");
  }
  Matrix out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
  return out;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& m) {
  if (r0 + m.rows() > rows_ || c0 + m.cols() > cols_) {
    throw ContractViolation("set_block out of range");
  }
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      (*this)(r0 + i, c0 + j) = m(i, j);
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Vector Matrix::column(std::size_t j) const {
  if (j >= cols_) throw ContractViolation("column index out of range");
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_column(std::size_t j, const Vector& v) {
  if (j >= cols_ || v.size() != rows_) {
    throw ContractViolation("set_column size mismatch");
  }
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul dimension mismatch");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation("matrix add dimension mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation("matrix sub dimension mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Vector mvm(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw ContractViolation("mvm dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double relative_error(const Vector& v, const Vector& v_star) {
  if (v.size() != v_star.size())
    throw ContractViolation("relative_error length mismatch");
  const double denom = norm2(v_star);
  if (denom == 0.0)
    throw ContractViolation("relative_error undefined for zero reference");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - v_star[i];
    s += d * d;
  }
  return std::sqrt(s) / denom;
}

Vector vectorize(const Matrix& m) {
  Vector v(m.size());
  std::size_t k = 0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v[k++] = m(i, j);
  return v;
}

Matrix unvectorize(const Vector& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols)
    throw ContractViolation("unvectorize size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[k++];
  return m;
}

double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double norm2(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm1(const Matrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::fabs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

double norm_fro(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

double norm_max(const Matrix& m) {
  double best = 0.0;
  for (double x : m.data()) best = std::max(best, std::fabs(x));
  return best;
}

double trace(const Matrix& m) {
  if (m.rows() != m.cols()) throw ContractViolation("trace of non-square");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

Matrix add_scaled_identity(const Matrix& m, double s) {
  if (m.rows() != m.cols())
    throw ContractViolation("add_scaled_identity on non-square");
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) out(i, i) += s;
  return out;
}

Matrix gauss_solve(Matrix a, Matrix b) {
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw ContractViolation("gauss_solve dimension mismatch");
  const std::size_t n = a.rows();
  const std::size_t k = b.cols();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::fabs(a(i, col)) > std::fabs(a(piv, col))) piv = i;
    if (std::fabs(a(piv, col)) < 1e-300)
      throw SingularMatrixError("singular matrix in gauss_solve");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      for (std::size_t j = 0; j < k; ++j) std::swap(b(piv, j), b(col, j));
    }
    const double d = a(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a(i, col) / d;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
      for (std::size_t j = 0; j < k; ++j) b(i, j) -= f * b(col, j);
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    const double d = a(col, col);
    for (std::size_t j = 0; j < k; ++j) {
      double s = b(col, j);
      for (std::size_t m2 = col + 1; m2 < n; ++m2) s -= a(col, m2) * b(m2, j);
      b(col, j) = s / d;
    }
  }
  return b;
}

Vector gauss_solve(Matrix a, Vector b) {
  const std::size_t n = b.size();
  Matrix rhs(n, 1, std::move(b));
  Matrix x = gauss_solve(std::move(a), std::move(rhs));
  return x.column(0);
}

Matrix invert(const Matrix& a) {
  return gauss_solve(a, Matrix::identity(a.rows()));
}

Matrix cholesky_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractViolation("cholesky of non-square");
  const std::size_t n = a.rows();
  Matrix l(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0)
          throw SingularMatrixError("matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

Matrix cholesky_solve(const Matrix& spd, const Matrix& b) {
  if (spd.rows() != b.rows())
    throw ContractViolation("cholesky_solve dimension mismatch");
  const Matrix l = cholesky_factor(spd);
  const std::size_t n = spd.rows();
  const std::size_t k = b.cols();
  Matrix x = b;
  for (std::size_t j = 0; j < k; ++j) {
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, j);
      for (std::size_t m2 = 0; m2 < i; ++m2) s -= l(i, m2) * x(m2, j);
      x(i, j) = s / l(i, i);
    }
    // backward: L^T x = y
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, j);
      for (std::size_t m2 = i + 1; m2 < n; ++m2) s -= l(m2, i) * x(m2, j);
      x(i, j) = s / l(i, i);
    }
  }
  return x;
}

Vector cholesky_solve(const Matrix& spd, const Vector& b) {
  Matrix rhs(b.size(), 1, b);
  return cholesky_solve(spd, rhs).column(0);
}

double condition_estimate(const Matrix& a) {
  try {
    return norm1(a) * norm1(invert(a));
  } catch (const SingularMatrixError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace amckfac
