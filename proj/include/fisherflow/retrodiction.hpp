#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisherflow/distances.hpp"
#include "fisherflow/propagation.hpp"

namespace fisherflow {

// T^_ij = pi_i T_ji / (T pi)_j. Throws UndefinedPosterior if (T pi)_j == 0.
StochasticMatrix bayes_inverse(const StochasticMatrix& t, const ProbVec& pi);
// Same formula without the stochasticity check on T.
Matrix bayes_matrix(const Matrix& t, const ProbVec& pi);

struct RetrodictionInvariants {
  double max_column_deviation = 0.0;  // of every T^_t
  double most_negative_entry = 0.0;
  double prior_recovery = 0.0;        // max |A_t pi - pi|
  double self_adjointness = 0.0;      // max asymmetry of D A D^{-1}, D = diag(1/sqrt(2 pi))
};

// Caches T_t, T^_t and A_t = T^_t T_t on a uniform grid over [0, t_end].
class RetrodictionContext {
 public:
  RetrodictionContext(const ProbVec& prior, Dynamics dyn, double t_end, std::size_t steps);

  const ProbVec& prior() const noexcept { return prior_; }
  const Dynamics& dynamics() const noexcept { return dyn_; }
  const std::vector<double>& times() const noexcept { return traj_.times; }
  const Trajectory& trajectory() const noexcept { return traj_; }
  const Matrix& propagator(std::size_t k) const { return traj_.propagators.at(k); }
  const Matrix& bayes(std::size_t k) const { return bayes_.at(k); }
  const Matrix& recovery(std::size_t k) const { return recovery_.at(k); }
  const RetrodictionInvariants& invariants() const noexcept { return invariants_; }

  // Off-grid evaluation: exact for closed forms, otherwise RK4 from the
  // nearest grid point at or below t.
  Matrix propagator_at(double t) const;
  Matrix recovery_at(double t) const;

 private:
  ProbVec prior_;
  Dynamics dyn_;
  Trajectory traj_;
  std::vector<Matrix> bayes_;
  std::vector<Matrix> recovery_;
  RetrodictionInvariants invariants_;
};

// Matrix A = T^ T for a given propagator and prior.
Matrix recovery_map(const Matrix& t, const ProbVec& prior);

enum class RetroMetricBase { Prior, InitialState };

struct RetroDistance {
  double value = 0.0;
  bool large_perturbation = false;  // <d, d>_pi > 0.01
  GridIndex at;
};

// <d - A_t d, d - A_t d> with d = p0 - pi, in the metric at pi (default) or at p0.
RetroDistance retrodiction_distance_sq(const ProbVec& p0, const RetrodictionContext& ctx, double t,
                                       RetroMetricBase base = RetroMetricBase::Prior);

struct AdjointCheck {
  double max_deviation = 0.0;       // |<d, A d>_pi - <T d, T d>_{T pi}|
  double self_adjointness = 0.0;
  bool contraction_bound = true;    // <T d, T d>_{T pi} <= <d, d>_pi in every trial
};

AdjointCheck adjoint_identity_check(const RetrodictionContext& ctx, double t, std::size_t trials,
                                    std::uint64_t seed = 0);

// Eigenvalues of A_t (self-adjoint in the prior metric, hence real), ascending.
Vector recovery_spectrum(const RetrodictionContext& ctx, std::size_t k);

enum class Verdict { Consistent, Inconsistent, Inconclusive };
std::string_view to_string(Verdict v) noexcept;

struct EigenDirectionRate {
  double eigenvalue = 0.0;   // of B on the zero-sum space
  double retro_rate = 0.0;   // finite-difference d/dt of the retrodiction distance along it
  bool negative = false;
};

struct Theorem4Report {
  double t = 0.0;
  Vector b_eigenvalues;            // B = -dA/dt on the zero-sum space, ascending
  double lambda_max_at_image = 0.0;  // contraction form at T_t pi
  double richardson_estimate = 0.0;
  std::vector<EigenDirectionRate> negative_directions;
  Verdict verdict = Verdict::Inconclusive;
  bool consistent = true;          // false only on a definite disagreement
};

// Compares the sign of B with the contraction form at T_t pi. Values within
// `band` of zero make the verdict inconclusive. Throws IntegrationAccuracy when
// derivatives with steps h and 2h differ by more than richardson_tol.
Theorem4Report theorem4_check(const RetrodictionContext& ctx, double t, double h = 1e-4,
                              double band = 1e-8, double richardson_tol = 1e-5);

}  // namespace fisherflow
