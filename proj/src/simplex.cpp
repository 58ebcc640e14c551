#include "fisherflow/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

constexpr double kNegativeProbability = -1e-12;
constexpr double kZeroSumTolerance = 1e-12;

Vector from_list(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    fail(ErrorKind::InvalidInput, std::string(what) + " must be square and non-empty");
}

std::size_t checked_product(std::size_t a, std::size_t b, std::size_t max_dim) {
  if (a != 0 && b > max_dim / a)
    fail(ErrorKind::Resource, "tensor dimension exceeds " + std::to_string(max_dim));
  const std::size_t n = a * b;
  if (n > max_dim) fail(ErrorKind::Resource, "tensor dimension exceeds " + std::to_string(max_dim));
  return n;
}

}  // namespace

ProbVec::ProbVec(const Vector& entries) : entries_(entries) {
  if (entries_.size() < 1) fail(ErrorKind::InvalidInput, "probability vector is empty");
  require_finite(entries_, "probability vector");
  if (entries_.minCoeff() < kNegativeProbability)
    fail(ErrorKind::InvalidInput, "probability vector has a negative entry");
  entries_ = entries_.cwiseMax(0.0);
  const double total = entries_.sum();
  if (!(total > 0.0)) fail(ErrorKind::InvalidInput, "probability vector sums to zero");
  entries_ /= total;
}

ProbVec::ProbVec(std::initializer_list<double> entries) : ProbVec(from_list(entries)) {}

ProbVec ProbVec::uniform(std::size_t n) {
  return ProbVec(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

ProbVec ProbVec::basis(std::size_t n, std::size_t k) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return ProbVec(v);
}

bool ProbVec::interior(double p_min) const { return entries_.minCoeff() >= p_min; }

TangentVec::TangentVec(const Vector& entries) : entries_(entries) {
  require_finite(entries_, "tangent vector");
  const double scale = std::max(1.0, entries_.lpNorm<1>());
  if (std::abs(entries_.sum()) > kZeroSumTolerance * scale)
    fail(ErrorKind::InvalidInput, "tangent vector does not sum to zero");
}

TangentVec::TangentVec(std::initializer_list<double> entries) : TangentVec(from_list(entries)) {}

TangentVec TangentVec::between(const ProbVec& from, const ProbVec& to) {
  if (from.size() != to.size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  return project(to.vec() - from.vec());
}

TangentVec TangentVec::project(const Vector& v) {
  require_finite(v, "tangent vector");
  Vector out = v.array() - v.mean();
  return TangentVec(out);
}

ValidationReport validate_stochastic(const Matrix& t, double tol) {
  require_square(t, "stochastic matrix");
  if (t.rows() < 2) fail(ErrorKind::InvalidInput, "stochastic matrix needs N >= 2");
  ValidationReport report;
  if (!t.allFinite()) {
    report.passed = false;
    report.max_column_deviation = std::numeric_limits<double>::infinity();
    return report;
  }
  report.column_deviation.resize(static_cast<std::size_t>(t.cols()));
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    const double dev = t.col(j).sum() - 1.0;
    report.column_deviation[static_cast<std::size_t>(j)] = dev;
    report.max_column_deviation = std::max(report.max_column_deviation, std::abs(dev));
  }
  report.most_negative_entry = std::min(0.0, t.minCoeff());
  report.passed = report.max_column_deviation <= tol && report.most_negative_entry >= -tol;
  return report;
}

StochasticMatrix::StochasticMatrix(const Matrix& entries, double tol) : entries_(entries) {
  const ValidationReport report = validate_stochastic(entries_, tol);
  if (!report.passed)
    fail(ErrorKind::InvalidInput,
         "not column-stochastic: column deviation " + std::to_string(report.max_column_deviation) +
             ", most negative entry " + std::to_string(report.most_negative_entry));
  if (report.most_negative_entry < kNegativeProbability)
    fail(ErrorKind::InvalidInput, "stochastic matrix has a negative entry");
  entries_ = entries_.cwiseMax(0.0);
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return StochasticMatrix(Matrix::Identity(k, k));
}

ProbVec StochasticMatrix::apply(const ProbVec& p) const {
  if (p.size() != size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  return ProbVec(Vector(entries_ * p.vec()));
}

TangentVec StochasticMatrix::apply(const TangentVec& d) const {
  if (d.size() != size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  return TangentVec::project(entries_ * d.vec());
}

RateMatrix::RateMatrix(const Matrix& entries) : entries_(entries) {
  require_square(entries_, "rate matrix");
  require_finite(entries_, "rate matrix");
  const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    if (std::abs(entries_.col(j).sum()) > 1e-9 * scale)
      fail(ErrorKind::InvalidGenerator,
           "rate matrix column " + std::to_string(j) + " does not sum to zero");
  }
}

RateMatrix RateMatrix::zero(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return RateMatrix(Matrix::Zero(k, k));
}

RateMatrix RateMatrix::from_rates(std::size_t n, const RateMap& rates) {
  const auto k = static_cast<Eigen::Index>(n);
  Matrix m = Matrix::Zero(k, k);
  for (const auto& [key, value] : rates) {
    const auto [to, from] = key;
    if (to >= n || from >= n || to == from)
      fail(ErrorKind::InvalidInput, "rate index out of range or diagonal");
    m(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = value;
  }
  for (Eigen::Index j = 0; j < k; ++j) m(j, j) = -(m.col(j).sum() - m(j, j));
  return RateMatrix(m);
}

double RateMatrix::rate(std::size_t to, std::size_t from) const {
  if (to == from || to >= size() || from >= size())
    fail(ErrorKind::InvalidInput, "rate index out of range or diagonal");
  return entries_(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
}

double RateMatrix::norm_inf() const {
  return entries_.size() == 0 ? 0.0 : entries_.cwiseAbs().rowwise().sum().maxCoeff();
}

RateMap rates_of(const RateMatrix& r) {
  RateMap out;
  for (std::size_t j = 0; j < r.size(); ++j)
    for (std::size_t i = 0; i < r.size(); ++i)
      if (i != j) out[{i, j}] = r.rate(i, j);
  return out;
}

MarkovianCheck is_markovian_generator(const RateMatrix& r, double rate_tol) {
  MarkovianCheck check;
  for (std::size_t j = 0; j < r.size(); ++j)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i == j) continue;
      const double a = r.rate(i, j);
      if (a < -rate_tol) check.offending.push_back({i, j, a});
    }
  check.markovian = check.offending.empty();
  return check;
}

std::size_t ExtendedSpace::total_dimension(std::size_t max_dim) const {
  if (base_dim < 1 || copies < 1) fail(ErrorKind::InvalidInput, "extended space needs N >= 1, n >= 1");
  std::size_t total = 1;
  for (std::size_t k = 0; k < copies; ++k) total = checked_product(total, base_dim, max_dim);
  return checked_product(total, std::max<std::size_t>(ancilla, 1), max_dim);
}

ProbVec tensor_state(const ProbVec& p, const ProbVec& q, std::size_t max_dim) {
  checked_product(p.size(), q.size(), max_dim);
  return ProbVec(Vector(linalg::kron(p.vec(), q.vec())));
}

StochasticMatrix tensor_map(const StochasticMatrix& t, const StochasticMatrix& s,
                            std::size_t max_dim) {
  checked_product(t.size(), s.size(), max_dim);
  return StochasticMatrix(linalg::kron(t.mat(), s.mat()));
}

TangentVec tensor_tangent(const TangentVec& d, const ProbVec& q) {
  return TangentVec(Vector(linalg::kron(d.vec(), q.vec())));
}

TangentVec tensor_tangent(const ProbVec& p, const TangentVec& d) {
  return TangentVec(Vector(linalg::kron(p.vec(), d.vec())));
}

ProbVec extended_state(const ExtendedSpace& space, const ProbVec& pi, const ProbVec& w) {
  if (pi.size() != space.base_dim) fail(ErrorKind::InvalidInput, "base state dimension mismatch");
  if (space.ancilla > 0 && w.size() != space.ancilla)
    fail(ErrorKind::InvalidInput, "ancilla state dimension mismatch");
  space.total_dimension();
  Vector out = pi.vec();
  for (std::size_t k = 1; k < space.copies; ++k) out = linalg::kron(out, pi.vec());
  if (space.ancilla > 0) out = linalg::kron(out, w.vec());
  return ProbVec(out);
}

RateMatrix extended_generator(const ExtendedSpace& space, const RateMatrix& r) {
  if (r.size() != space.base_dim) fail(ErrorKind::InvalidInput, "generator dimension mismatch");
  const std::size_t total = space.total_dimension();
  const auto n = static_cast<Eigen::Index>(space.base_dim);
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (std::size_t l = 0; l < space.copies; ++l) {
    Matrix term = Matrix::Identity(1, 1);
    for (std::size_t k = 0; k < space.copies; ++k)
      term = linalg::kron(term, k == l ? r.mat() : Matrix(Matrix::Identity(n, n)));
    if (space.ancilla > 0) {
      const auto m = static_cast<Eigen::Index>(space.ancilla);
      term = linalg::kron(term, Matrix(Matrix::Identity(m, m)));
    }
    sum += term;
  }
  return RateMatrix(sum);
}

StochasticMatrix embed_extra_state(const StochasticMatrix& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Matrix out = Matrix::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n) = t.mat();
  out(n, n) = 1.0;
  return StochasticMatrix(out);
}

RateMatrix embed_extra_state(const RateMatrix& r) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Matrix out = Matrix::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n) = r.mat();
  return RateMatrix(out);
}

}  // namespace fisherflow
