#pragma once

#include <cstddef>
#include <functional>

#include "fisherflow/simplex.hpp"

namespace fisherflow {

double trace_distance(const ProbVec& p, const ProbVec& q);
double trace_norm(const TangentVec& d);

// <a, b>_p = 1/2 sum a_i b_i / p_i. All Fisher quantities throw SingularBase
// when p has an entry below kDefaultPMin.
double fisher_inner(const TangentVec& a, const TangentVec& b, const ProbVec& p);
double fisher_local_sq(const ProbVec& p, const TangentVec& d);

// sqrt(2) * arccos(sum sqrt(p_i q_i)), evaluated as 2 sqrt(2) asin(|sqrt p - sqrt q| / 2)
// which is accurate for nearby states.
double bhattacharyya(const ProbVec& p, const ProbVec& q);
double hellinger(const ProbVec& p, const ProbVec& q);

// d/dt bhattacharyya(p, q) for velocities p_dot, q_dot. Zero when p == q.
double bhattacharyya_rate(const ProbVec& p, const ProbVec& q, const Vector& p_dot,
                          const Vector& q_dot);

// I_{i<-j} = 1/2 (d_i/p_i - d_j/p_j)^2 p_j, zero-based indices.
double fisher_flow(const ProbVec& p, const TangentVec& d, std::size_t i, std::size_t j);

// d/dt <d, d>_p along p' = R p, d' = R d; equals -sum a_{i<-j} I_{i<-j}.
double fisher_rate(const ProbVec& p, const TangentVec& d, const RateMatrix& r);

// d/dt of 1/2 sum x_i^2 / q_i for arbitrary velocities; no zero-sum requirement.
double fisher_sq_derivative(const Vector& q, const Vector& x, const Vector& q_dot,
                            const Vector& x_dot);

struct TraceRate {
  double value = 0.0;             // closed formula with sign(0) = 0
  double right_derivative = 0.0;  // one-sided d+/dt sum |d_k|
  bool non_smooth = false;        // some d_k == 0
};

// d/dt sum |d_i| along d' = R d. Independent of the base point.
TraceRate trace_rate(const TangentVec& d, const RateMatrix& r);

// Quadratic form d -> fisher_rate(p, d, R) restricted to the zero-sum
// hyperplane, written in the orthonormal basis zero_sum_basis(N).
class ContractionForm {
 public:
  ContractionForm(const ProbVec& p, const RateMatrix& r);

  const ProbVec& base() const noexcept { return base_; }
  const RateMatrix& generator() const noexcept { return generator_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  const Matrix& basis() const noexcept { return basis_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  double lambda_max() const noexcept { return eigenvalues_(eigenvalues_.size() - 1); }
  // Unit Euclidean-norm zero-sum direction in the original coordinates.
  TangentVec max_direction() const;
  TangentVec direction(Eigen::Index k) const;
  double evaluate(const TangentVec& d) const;

 private:
  ProbVec base_;
  RateMatrix generator_;
  Matrix basis_;
  Matrix matrix_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

struct ParamFisher {
  double derivative_form = 0.0;  // sum (dp_i/dtheta)^2 / p_i by central differences
  double distance_limit = 0.0;   // 2 D_B(p(theta-h), p(theta+h))^2 / (2h)^2
};

ParamFisher param_fisher_information(const std::function<ProbVec(double)>& curve, double theta0,
                                     double h);

}  // namespace fisherflow
