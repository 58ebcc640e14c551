#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <cstddef>
#include <vector>

#include "fisherflow/distances.hpp"

namespace fisherflow {

inline constexpr std::size_t kMaxQuantumDimension = 16;

// Hermitian, PSD (eigenvalues >= -1e-10), unit trace.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(const CMatrix& entries);

  static DensityMatrix from_diagonal(const ProbVec& p);
  static DensityMatrix maximally_mixed(std::size_t d);
  static DensityMatrix pure(const CVector& psi);

  const CMatrix& mat() const noexcept { return entries_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }

 private:
  CMatrix entries_;
};

// Hermitian and traceless.
class HermitianPerturbation {
 public:
  HermitianPerturbation() = default;
  explicit HermitianPerturbation(const CMatrix& entries);

  static HermitianPerturbation from_diagonal(const TangentVec& d);

  const CMatrix& mat() const noexcept { return entries_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }

 private:
  CMatrix entries_;
};

struct PerturbationSplit {
  CMatrix diagonal;  // diagonal in the given basis
  CMatrix coherent;  // zero diagonal in the given basis
};

// Splits X relative to the orthonormal columns of `basis`.
PerturbationSplit split_in_basis(const CMatrix& x, const CMatrix& basis);

// Column-stacking vectorization: vec(X)_{i + d j} = X_ij, vec(A X B) = (B^T (x) A) vec(X).
CVector vec(const CMatrix& x);
CMatrix unvec(const CVector& v, std::size_t d);

class QuantumChannel {
 public:
  QuantumChannel() = default;
  // Throws InvalidInput unless trace preserving within `tol`.
  explicit QuantumChannel(const CMatrix& superoperator, double tol = 1e-10);

  static QuantumChannel identity(std::size_t d);
  static QuantumChannel from_kraus(const std::vector<CMatrix>& kraus);
  // rho -> (1 - p) rho + p Id/d.
  static QuantumChannel depolarizing(std::size_t d, double p);

  const CMatrix& superoperator() const noexcept { return super_; }
  std::size_t dim() const noexcept { return dim_; }
  CMatrix apply(const CMatrix& rho) const;
  // Phi (x) Id_m on system (x) reference, system index leftmost.
  QuantumChannel extend_with_identity(std::size_t m) const;
  QuantumChannel then(const QuantumChannel& next) const;  // next o this

 private:
  CMatrix super_;
  std::size_t dim_ = 0;
};

// Trace-annihilating superoperator generating dynamics d rho/dt = L[rho].
class QuantumGenerator {
 public:
  QuantumGenerator() = default;
  explicit QuantumGenerator(const CMatrix& superoperator, double tol = 1e-10);

  const CMatrix& superoperator() const noexcept { return super_; }
  std::size_t dim() const noexcept { return dim_; }
  CMatrix apply(const CMatrix& rho) const;
  QuantumChannel first_order_map(double dt) const;   // Id + dt L
  QuantumChannel exponential_map(double dt) const;   // exp(dt L)
  QuantumGenerator extend_with_identity(std::size_t m) const;  // L (x) Id_m
  // R_kl = <e_k| L[|e_l><e_l|] |e_k> in the orthonormal columns of `basis`.
  RateMatrix classical_rates(const CMatrix& basis) const;

 private:
  CMatrix super_;
  std::size_t dim_ = 0;
};

// L[rho] = sum a_{i<-j} (E_ij rho E_ji - 1/2 {E_jj, rho}).
QuantumGenerator semiclassical_lindbladian(const RateMatrix& rates);
QuantumGenerator semiclassical_lindbladian(const RateMap& rates, std::size_t d);

// C = (1/d) sum_{jl} Phi[E_jl] (x) E_jl, system first.
CMatrix choi(const QuantumChannel& ch);

struct CPCheck {
  double min_eigenvalue = 0.0;
  CVector min_eigenvector;
  bool cp = false;
};

// Throws ChannelRepresentation if the Choi matrix is not Hermitian within 1e-10.
CPCheck cp_check(const QuantumChannel& ch, double tol = 1e-10);

// Maximally entangled vector (1/sqrt d) sum_j |j>|j>.
CVector max_entangled(std::size_t d);

enum class MonotoneFunctionKind { SLD, KMB, WY };
inline constexpr std::array<MonotoneFunctionKind, 3> kMonotoneKinds{MonotoneFunctionKind::SLD, MonotoneFunctionKind::KMB,
                                                            MonotoneFunctionKind::WY};
std::string_view to_string(MonotoneFunctionKind f) noexcept;

double monotone_function(MonotoneFunctionKind f, double x);
// 1 / (y f(x / y)), evaluated stably for x close to y.
double metric_kernel(MonotoneFunctionKind f, double x, double y);
// max deviation of f(1) = 1 and x f(1/x) = f(x) over a log grid.
double standardness_defect(MonotoneFunctionKind f);

// K^f_rho(A, B) = 1/2 Tr(A^dagger J_{f,rho}^{-1}[B]); real part. Throws
// SingularBase when rho has an eigenvalue below 1e-10.
double petz_metric(const CMatrix& rho, const CMatrix& a, const CMatrix& b, MonotoneFunctionKind f);
double petz_metric(const DensityMatrix& rho, const HermitianPerturbation& a,
                   const HermitianPerturbation& b, MonotoneFunctionKind f);

struct DecompositionCheck {
  double cross_term = 0.0;         // |K(d_diag, d_coh)|
  double additivity_defect = 0.0;  // |K(d, d) - K(d_diag, d_diag) - K(d_coh, d_coh)|
};

DecompositionCheck diag_decomposition_check(const DensityMatrix& rho, const HermitianPerturbation& d,
                                            MonotoneFunctionKind f);

struct ReductionRate {
  double quantum_rate = 0.0;    // central difference of K^f along rho + tau L[rho]
  double classical_rate = 0.0;  // fisher_rate on the common eigenbasis
  double deviation = 0.0;
};

// Requires [rho, d] = 0 (InvalidPrecondition otherwise).
ReductionRate commuting_reduction_rate_check(const DensityMatrix& rho, const HermitianPerturbation& d,
                                             const QuantumGenerator& l, MonotoneFunctionKind f,
                                             double h = 1e-6);

struct SpecialPointReport {
  CMatrix base;                 // |d| / Tr|d|
  double trace_norm = 0.0;      // Tr|d|
  double expected = 0.0;        // 1/2 (Tr|d|)^2
  std::array<double, 3> values{};  // K^f per kind on the support of d
  double max_defect = 0.0;
  bool full_rank = true;
};

SpecialPointReport special_point_check(const HermitianPerturbation& d);

struct QuantumWitnessReport {
  CMatrix rho;                  // on system (x) reference
  CMatrix perturbation;
  CVector psi;                  // maximally entangled vector
  CVector v_perp;
  double choi_min_eigenvalue = 0.0;
  double classical_rate = 0.0;  // a_{v_perp <- psi} of (Phi - Id) (x) Id, per step
  double rate = 0.0;            // d/dt K^f via the diagonal reduction
  double leading_coefficient = 0.0;  // rate p_v^2 / (1/2 eps^2 p_psi), tends to -classical_rate
  std::array<double, 3> fd_rates{};  // finite-difference oracle per kind
  double mix = 0.0;
  double eps = 0.0;
};

// Dilation-witness construction for a channel close to the identity that is not CP.
// Rates are per channel step (generator Phi - Id). Throws NotApplicable for CP input.
QuantumWitnessReport quantum_thm1_witness(const QuantumChannel& intermediate, double mix = 1e-6,
                                          double eps = 1e-3);

// Dephasing D(eps2) o filter F(eps1) towards pi, with pi diagonal.
QuantumChannel dephased_filter(const ProbVec& pi, double eps1, double eps2);

struct QuantumNoGoReport {
  bool generator_cp = true;        // exp(dt L) passes cp_check
  double choi_min_eigenvalue = 0.0;
  double lambda_max_diagonal = 0.0;  // classical contraction form at pi
  double max_sampled_rate = 0.0;     // max over samples of d/dt K^f / eps1^2 on the image
  double max_coherence_ratio = 0.0;  // |coherent part of T[x]| / (eps1 |x|), at most eps2
  bool no_dilation = false;
};

// Non-CP semiclassical generator whose Fisher contraction on the image of
// D o F is negative: the quantum no-go instance at one copy.
QuantumNoGoReport quantum_nogo_check(const ProbVec& pi, const RateMatrix& rates, double eps1,
                                     double eps2, std::size_t samples, std::uint64_t seed,
                                     MonotoneFunctionKind f = MonotoneFunctionKind::SLD);

}  // namespace fisherflow
