#include "fisherflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fisherflow/errors.hpp"

namespace fisherflow::linalg {
namespace {

double magnitude(double x) { return std::abs(x); }
double magnitude(const Complex& z) { return std::abs(z); }
double conj_of(double x) { return x; }
Complex conj_of(const Complex& z) { return std::conj(z); }

template <typename Scalar>
double off_diagonal_norm(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += std::norm(a(i, j));
  return std::sqrt(sum);
}

// Shared cyclic Jacobi for real symmetric and complex Hermitian input. Each
// rotation first removes the phase of a(p,q) and then applies the classical
// real rotation, so the unitary is U = diag(.., w at q, ..) * G(c, s).
template <typename Scalar>
void jacobi(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& v, double tol,
            int max_sweeps, int& sweeps_done) {
  const Eigen::Index n = a.rows();
  v.setIdentity(n, n);
  const double scale = std::max(1.0, a.norm());
  sweeps_done = 0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol * scale) return;
    ++sweeps_done;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        const double r = magnitude(apq);
        if (r <= std::numeric_limits<double>::min()) continue;
        const Scalar w = conj_of(apq) / r;
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // A <- A U (columns p, q)
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * w * akq;
          a(k, q) = s * akp + c * w * akq;
        }
        // A <- U^dagger A (rows p, q)
        const Scalar wc = conj_of(w);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * wc * aqk;
          a(q, k) = s * apk + c * wc * aqk;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        a(p, p) = Scalar(std::real(a(p, p)));
        a(q, q) = Scalar(std::real(a(q, q)));
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * w * vkq;
          v(k, q) = s * vkp + c * w * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > tol * scale)
    fail(ErrorKind::IntegrationAccuracy, "Jacobi eigensolver did not converge");
}

template <typename Scalar, typename Result>
Result decompose(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
                 double tol, int max_sweeps) {
  if (input.rows() != input.cols())
    fail(ErrorKind::InvalidInput, "eigensolver requires a square matrix");
  const Eigen::Index n = input.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = 0.5 * (input + input.adjoint());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> v;
  Result out;
  jacobi(a, v, tol, max_sweeps, out.sweeps);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::real(a(x, x)) < std::real(a(y, y));
  });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = std::real(a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]));
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a, double tol, int max_sweeps) {
  return decompose<double, SymmetricEigen>(a, tol, max_sweeps);
}

HermitianEigen hermitian_eigen(const CMatrix& a, double tol, int max_sweeps) {
  return decompose<Complex, HermitianEigen>(a, tol, max_sweeps);
}

Matrix zero_sum_basis(std::size_t n) {
  if (n < 2) fail(ErrorKind::InvalidInput, "zero-sum basis needs dimension >= 2");
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix basis = Matrix::Zero(rows, rows - 1);
  for (Eigen::Index k = 1; k < rows; ++k) {
    const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
    for (Eigen::Index i = 0; i < k; ++i) basis(i, k - 1) = 1.0 / norm;
    basis(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return basis;
}

Matrix orthogonal_complement(const Vector& direction) {
  const Eigen::Index n = direction.size();
  const double norm = direction.norm();
  if (n < 2 || norm == 0.0)
    fail(ErrorKind::InvalidInput, "orthogonal complement needs a nonzero vector of size >= 2");
  // Householder reflection mapping e_0 onto the unit direction; its remaining
  // columns span the complement.
  Vector u = direction / norm;
  Vector h = u;
  h(0) += (u(0) >= 0.0 ? 1.0 : -1.0);
  const Matrix reflector = Matrix::Identity(n, n) - 2.0 * h * h.transpose() / h.squaredNorm();
  return reflector.rightCols(n - 1);
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

}  // namespace fisherflow::linalg
