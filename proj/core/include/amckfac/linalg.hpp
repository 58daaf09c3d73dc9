#pragma once

#include <cstddef>
#include <vector>

#include "amckfac/errors.hpp"

namespace amckfac {

using Vector = std::vector<double>;

// Dense row-major matrix. Entries are checked finite on construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr,
               std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& m);
  Matrix transposed() const;
  Vector column(std::size_t j) const;
  void set_column(std::size_t j, const Vector& v);

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// y = A x in the host's native double precision.
Vector mvm(const Matrix& a, const Vector& x);

// ||v - v*||_2 / ||v*||_2. Throws if ||v*|| = 0.
double relative_error(const Vector& v, const Vector& v_star);

// Column-stacking vec operator and its inverse.
Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, std::size_t rows, std::size_t cols);

double norm_inf(const Vector& v);
double norm2(const Vector& v);
double norm1(const Matrix& m);        // max column sum
double norm_fro(const Matrix& m);
double norm_max(const Matrix& m);     // max |entry|
double trace(const Matrix& m);

Matrix add_scaled_identity(const Matrix& m, double s);

// Gaussian elimination with partial pivoting; throws SingularMatrixError.
Vector gauss_solve(Matrix a, Vector b);
Matrix gauss_solve(Matrix a, Matrix b);
Matrix invert(const Matrix& a);

// Cholesky-based SPD solve; throws SingularMatrixError if not PD.
Matrix cholesky_factor(const Matrix& a);  // lower triangular L, A = L L^T
Matrix cholesky_solve(const Matrix& spd, const Matrix& b);
Vector cholesky_solve(const Matrix& spd, const Vector& b);

// 1-norm condition estimate via explicit inverse (small matrices only).
double condition_estimate(const Matrix& a);

}  // namespace amckfac
