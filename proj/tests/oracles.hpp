// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the formulas under test.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Mat expm(const Mat& a) { return a.exp(); }

inline Vec dirichlet(std::mt19937_64& rng, int n, double floor = 0.0) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng) + floor;
  return v / v.sum();
}

inline Vec zero_sum(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  v.array() -= v.mean();
  return scale * v;
}

// Off-diagonal rates uniform in [lo, hi], diagonal completes zero column sums.
inline Mat random_generator(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat r = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) r(i, j) = u(rng);
  for (int j = 0; j < n; ++j) r(j, j) = -(r.col(j).sum() - r(j, j));
  return r;
}

inline double fisher_sq(const Vec& p, const Vec& d) {
  return 0.5 * (d.array().square() / p.array()).sum();
}

// d/dt of 1/2 sum d^2/p along the exact flow exp(tR), central difference.
inline double fisher_rate_fd(const Vec& p, const Vec& d, const Mat& r, double h = 1e-5) {
  const Mat fwd = expm(h * r);
  const Mat bwd = expm(-h * r);
  return (fisher_sq(fwd * p, fwd * d) - fisher_sq(bwd * p, bwd * d)) / (2.0 * h);
}

// Largest eigenvalue of a symmetric matrix via Eigen's solver.
inline double lambda_max(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  return es.eigenvalues().maxCoeff();
}

// Matrix of d -> d/dt <d,d>_p in full coordinates: the flow moves p along Rp
// and d along Rd, so the form is 1/2 [ (R^T P + P R) - diag(Rp) P^2 ] with
// P = diag(1/p). Restricted to the zero-sum plane through `basis`.
inline Mat contraction_matrix(const Vec& p, const Mat& r, const Mat& basis) {
  const Vec inv = p.cwiseInverse();
  const Mat pm = inv.asDiagonal();
  const Vec pdot = r * p;
  Mat full = r.transpose() * pm + pm * r;
  full -= Mat((pdot.array() * inv.array().square()).matrix().asDiagonal());
  full *= 0.5;
  return basis.transpose() * full * basis;
}

inline Mat helmert(int n) {
  Mat b = Mat::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) b(i, k - 1) = 1.0 / norm;
    b(k, k - 1) = -k / norm;
  }
  return b;
}

// ---- quantum helpers ----

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Cx = std::complex<double>;

inline CMat random_complex(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = Cx(g(rng), g(rng));
  return m;
}

// Full-rank density matrix: G G^dagger + floor Id, normalized.
inline CMat random_density(std::mt19937_64& rng, int d, double floor = 1e-2) {
  const CMat g = random_complex(rng, d, d);
  CMat rho = g * g.adjoint() + floor * CMat::Identity(d, d);
  return rho / rho.trace();
}

inline CMat random_traceless(std::mt19937_64& rng, int d, double scale = 1e-2) {
  const CMat g = random_complex(rng, d, d);
  CMat h = 0.5 * (g + g.adjoint());
  h -= h.trace() / double(d) * CMat::Identity(d, d);
  return scale * h / h.norm();
}

// Kraus operators of a random CPTP map from a random isometry d -> d*k.
inline std::vector<CMat> random_kraus(std::mt19937_64& rng, int d, int k) {
  const CMat g = random_complex(rng, d * k, d);
  Eigen::HouseholderQR<CMat> qr(g);
  const CMat iso = qr.householderQ() * CMat::Identity(d * k, d);
  std::vector<CMat> out;
  for (int a = 0; a < k; ++a) out.push_back(iso.block(a * d, 0, d, d));
  return out;
}

inline CMat apply_kraus(const std::vector<CMat>& kraus, const CMat& rho) {
  CMat out = CMat::Zero(rho.rows(), rho.cols());
  for (const auto& k : kraus) out += k * rho * k.adjoint();
  return out;
}

// f as written in the three standard families; kernel 1/(y f(x/y)).
inline double monotone_f(int kind, double x) {
  if (kind == 0) return 0.5 * (1.0 + x);
  if (kind == 1) return x == 1.0 ? 1.0 : (x - 1.0) / std::log(x);
  const double h = 0.5 * (1.0 + std::sqrt(x));
  return h * h;
}

inline double petz(const CMat& rho, const CMat& a, const CMat& b, int kind) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho);
  const CMat& u = es.eigenvectors();
  const Vec& lam = es.eigenvalues();
  const CMat at = u.adjoint() * a * u;
  const CMat bt = u.adjoint() * b * u;
  double sum = 0.0;
  for (int i = 0; i < rho.rows(); ++i)
    for (int j = 0; j < rho.rows(); ++j)
      sum += (std::conj(at(i, j)) * bt(i, j)).real() / (lam(j) * monotone_f(kind, lam(i) / lam(j)));
  return 0.5 * sum;
}

// Direct action of sum a_{i<-j} (|i><j| rho |j><i| - 1/2 {|j><j|, rho}).
inline CMat lindblad_apply(const Mat& rates, const CMat& rho) {
  const int d = int(rho.rows());
  CMat out = CMat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double a = rates(i, j);
      out(i, i) += a * rho(j, j);
      out.row(j) -= 0.5 * a * rho.row(j);
      out.col(j) -= 0.5 * a * rho.col(j);
    }
  return out;
}

inline double min_eig(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  return es.eigenvalues().minCoeff();
}

}  // namespace oracle
