#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "amckfac/linalg.hpp"

namespace testutil {

inline Eigen::MatrixXd to_eigen(const amckfac::Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline amckfac::Matrix from_eigen(const Eigen::MatrixXd& m) {
  amckfac::Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

// Random SPD matrix with the requested condition number: Q diag(lambda) Q^T
// with log-spaced eigenvalues in [1/cond, 1].
inline amckfac::Matrix random_spd(std::size_t n, double cond,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lambda(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    lambda(i) = std::pow(cond, -t);  // 1 down to 1/cond
  }
  Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose());
  return from_eigen(a);
}

inline amckfac::Matrix random_matrix(std::size_t r, std::size_t c,
                                     std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  amckfac::Matrix m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Brute-force Kronecker product, the independent oracle for vec identities.
inline amckfac::Matrix kron(const amckfac::Matrix& a,
                            const amckfac::Matrix& b) {
  amckfac::Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

}  // namespace testutil
