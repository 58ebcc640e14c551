#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace fisherflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

namespace linalg {

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

/// Eigen-decomposition of a real symmetric matrix. Eigenvalues ascending,
/// eigenvectors stored column-wise in the same order.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
  int sweeps = 0;
};

struct HermitianEigen {
  Vector values;
  CMatrix vectors;
  int sweeps = 0;
};

// Cyclic Jacobi. Converged once the off-diagonal Frobenius norm falls below
// tol * max(1, ||A||_F). Input is symmetrized first; asymmetry is not checked.
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = kJacobiTolerance,
                               int max_sweeps = kJacobiMaxSweeps);
HermitianEigen hermitian_eigen(const CMatrix& a, double tol = kJacobiTolerance,
                               int max_sweeps = kJacobiMaxSweeps);

/// Orthonormal (Helmert) basis of the zero-sum hyperplane of R^n, n >= 2,
/// as the columns of an n x (n-1) matrix.
Matrix zero_sum_basis(std::size_t n);

/// Orthonormal basis of the complement of `direction` (normalized
/// internally), as the columns of an n x (n-1) matrix.
Matrix orthogonal_complement(const Vector& direction);

template <typename Derived1, typename Derived2>
Eigen::Matrix<typename Derived1::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                           a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// 2-norm condition number via SVD; +inf for singular input.
double condition_number(const Matrix& a);

}  // namespace linalg
}  // namespace fisherflow
