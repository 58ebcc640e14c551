#include "fisherflow/distances.hpp"

#include <algorithm>
#include <cmath>

#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

void require_same(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorKind::InvalidInput, "dimension mismatch");
}

void require_interior(const ProbVec& p) {
  if (!p.interior()) fail(ErrorKind::SingularBase, "Fisher metric is singular at a boundary point");
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double trace_distance(const ProbVec& p, const ProbVec& q) {
  require_same(p.size(), q.size());
  return (p.vec() - q.vec()).lpNorm<1>();
}

double trace_norm(const TangentVec& d) { return d.vec().lpNorm<1>(); }

double fisher_inner(const TangentVec& a, const TangentVec& b, const ProbVec& p) {
  require_same(a.size(), p.size());
  require_same(b.size(), p.size());
  require_interior(p);
  return 0.5 * (a.vec().array() * b.vec().array() / p.vec().array()).sum();
}

double fisher_local_sq(const ProbVec& p, const TangentVec& d) { return fisher_inner(d, d, p); }

double bhattacharyya(const ProbVec& p, const ProbVec& q) {
  require_same(p.size(), q.size());
  const double gap = (p.vec().cwiseSqrt() - q.vec().cwiseSqrt()).norm();
  return 2.0 * std::sqrt(2.0) * std::asin(std::clamp(gap / 2.0, 0.0, 1.0));
}

double bhattacharyya_rate(const ProbVec& p, const ProbVec& q, const Vector& p_dot,
                          const Vector& q_dot) {
  require_same(p.size(), q.size());
  require_same(p.size(), static_cast<std::size_t>(p_dot.size()));
  require_same(p.size(), static_cast<std::size_t>(q_dot.size()));
  require_interior(p);
  require_interior(q);
  const Vector sp = p.vec().cwiseSqrt();
  const Vector sq = q.vec().cwiseSqrt();
  const Vector gap = sp - sq;
  const double u = gap.norm();
  if (u == 0.0) return 0.0;
  // d/dt |sqrt p - sqrt q|^2 without forming differences of O(1) terms
  const double u2_dot = gap.dot(Vector(p_dot.cwiseQuotient(sp) - q_dot.cwiseQuotient(sq)));
  const double u_dot = u2_dot / (2.0 * u);
  return std::sqrt(2.0) * u_dot / std::sqrt(1.0 - 0.25 * u * u);
}

double hellinger(const ProbVec& p, const ProbVec& q) {
  require_same(p.size(), q.size());
  return std::sqrt(2.0) * (p.vec().cwiseSqrt() - q.vec().cwiseSqrt()).norm();
}

double fisher_flow(const ProbVec& p, const TangentVec& d, std::size_t i, std::size_t j) {
  require_same(d.size(), p.size());
  if (i == j || i >= p.size() || j >= p.size())
    fail(ErrorKind::InvalidInput, "flow indices must be distinct and in range");
  require_interior(p);
  const double gap = d[i] / p[i] - d[j] / p[j];
  return 0.5 * gap * gap * p[j];
}

double fisher_rate(const ProbVec& p, const TangentVec& d, const RateMatrix& r) {
  require_same(d.size(), p.size());
  require_same(r.size(), p.size());
  require_interior(p);
  const std::size_t n = p.size();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = d[j] / p[j];
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const double a = r.mat()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (a == 0.0) continue;
      const double gap = d[i] / p[i] - xj;
      total -= a * 0.5 * gap * gap * p[j];
    }
  }
  return total;
}

double fisher_sq_derivative(const Vector& q, const Vector& x, const Vector& q_dot,
                            const Vector& x_dot) {
  if (q.size() != x.size() || q.size() != q_dot.size() || q.size() != x_dot.size())
    fail(ErrorKind::InvalidInput, "dimension mismatch");
  if (q.minCoeff() < kDefaultPMin)
    fail(ErrorKind::SingularBase, "Fisher metric is singular at a boundary point");
  const auto ratio = x.array() / q.array();
  return (ratio * x_dot.array() - 0.5 * ratio * ratio * q_dot.array()).sum();
}

TraceRate trace_rate(const TangentVec& d, const RateMatrix& r) {
  require_same(d.size(), r.size());
  const Vector velocity = r.mat() * d.vec();
  TraceRate out;
  for (Eigen::Index k = 0; k < velocity.size(); ++k) {
    const double s = sign(d.vec()(k));
    out.value += s * velocity(k);
    if (s == 0.0) {
      out.non_smooth = true;
      out.right_derivative += std::abs(velocity(k));
    } else {
      out.right_derivative += s * velocity(k);
    }
  }
  return out;
}

ContractionForm::ContractionForm(const ProbVec& p, const RateMatrix& r)
    : base_(p), generator_(r) {
  require_same(p.size(), r.size());
  require_interior(p);
  const std::size_t n = p.size();
  if (n < 2) fail(ErrorKind::InvalidInput, "contraction form needs N >= 2");
  basis_ = linalg::zero_sum_basis(n);
  const Eigen::Index k = basis_.cols();
  auto q = [&](const Vector& v) { return fisher_rate(p, TangentVec::project(v), r); };
  matrix_.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    matrix_(a, a) = q(basis_.col(a));
    for (Eigen::Index b = 0; b < a; ++b) {
      const double value =
          0.25 * (q(basis_.col(a) + basis_.col(b)) - q(basis_.col(a) - basis_.col(b)));
      matrix_(a, b) = value;
      matrix_(b, a) = value;
    }
  }
  const linalg::SymmetricEigen eig = linalg::symmetric_eigen(matrix_);
  eigenvalues_ = eig.values;
  eigenvectors_ = eig.vectors;
}

TangentVec ContractionForm::direction(Eigen::Index k) const {
  return TangentVec::project(basis_ * eigenvectors_.col(k));
}

TangentVec ContractionForm::max_direction() const { return direction(eigenvalues_.size() - 1); }

double ContractionForm::evaluate(const TangentVec& d) const {
  require_same(d.size(), base_.size());
  const Vector c = basis_.transpose() * d.vec();
  return c.dot(matrix_ * c);
}

ParamFisher param_fisher_information(const std::function<ProbVec(double)>& curve, double theta0,
                                     double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "step must be positive");
  const ProbVec lo = curve(theta0 - h);
  const ProbVec mid = curve(theta0);
  const ProbVec hi = curve(theta0 + h);
  require_same(lo.size(), mid.size());
  require_same(hi.size(), mid.size());
  if (!lo.interior() || !mid.interior() || !hi.interior())
    fail(ErrorKind::SingularBase, "curve leaves the interior of the simplex");
  const Vector derivative = (hi.vec() - lo.vec()) / (2.0 * h);
  ParamFisher out;
  out.derivative_form = (derivative.array().square() / mid.vec().array()).sum();
  const double db = bhattacharyya(lo, hi);
  out.distance_limit = 2.0 * db * db / (4.0 * h * h);
  return out;
}

}  // namespace fisherflow
