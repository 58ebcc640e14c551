#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fisherflow/distances.hpp"

namespace fisherflow {

enum class WitnessMethod { Thm1Ladder, FormSpectral, Filter, TraceAncilla };

std::string_view to_string(WitnessMethod m) noexcept;

struct WitnessReport {
  bool found = false;
  WitnessMethod method = WitnessMethod::Thm1Ladder;
  ProbVec base;
  TangentVec direction;
  RateMatrix generator;       // the generator the rate refers to (extended if applicable)
  double rate_value = 0.0;    // d/dt of the squared distance, see reevaluate()
  double epsilon_used = 0.0;
  std::uint64_t seed = 0;
  std::optional<Rate> offender;  // original indices
};

// Recomputes rate_value from (base, direction, generator, epsilon_used).
double reevaluate(const WitnessReport& report);

// Most negative off-diagonal rate, if any is below -rate_tol.
std::optional<Rate> worst_rate(const RateMatrix& r, double rate_tol = 1e-9);

std::vector<double> default_epsilon_ladder();

// Places most of the mass on the source state of the worst rate and perturbs
// along e_to - e_from with magnitude eps^2; the first eps with a positive
// Fisher rate wins. Falls back to maximizing the contraction form over
// `fallback_samples` seeded interior points. Markovian R -> found = false.
WitnessReport dilation_direction_search(const RateMatrix& r,
                                        const std::vector<double>& eps_ladder = default_epsilon_ladder(),
                                        std::uint64_t seed = 0, std::size_t fallback_samples = 1000,
                                        double rate_tol = 1e-9);

struct NoGoReport {
  bool condition_met = false;   // single negative rate with a_{j<-i} pi_i > |a_{i<-j}| pi_j
  std::string condition_detail;
  bool nonmarkovian = false;
  double lambda_max = 0.0;      // on the full zero-sum space at pi^{(x)n} (x) w
  double lambda_max_active = 0.0;  // excluding the ancilla-only directions pi^{(x)n} (x) dw
  double margin = 0.0;          // 1e-6 * ||R||_inf
  bool no_dilation = false;     // lambda_max <= -margin
  std::size_t dimension = 0;
};

NoGoReport no_go_verify(const ProbVec& pi, const RateMatrix& r, std::size_t copies,
                        std::size_t ancilla, const ProbVec& w);

struct SpecialPoint {
  ProbVec base;
  bool interior = false;
};

// p_i = |d_i| / sum |d_j|; there D^2_Fish(p, p + d) = 1/2 |d|_1^2.
SpecialPoint special_base_point(const TangentVec& d);

// eps Id + (1 - eps) pi 1^T.
StochasticMatrix filter_map(const ProbVec& pi, double eps);

struct FilterRate {
  double value = 0.0;
  ProbVec filter_base;
  TangentVec direction;   // after boundary regularization
  bool regularized = false;
};

// Replaces zero entries of d by +-floor * max|d| (sign of (R d)_k) and
// restores the zero sum on the largest entry.
TangentVec regularize_direction(const TangentVec& d, const RateMatrix& r, double floor,
                                bool* changed = nullptr);

// d/dt sum_i (eps d_i)^2 / F[p]_i with F = filter_map(special_base_point(d), eps),
// p and d evolving under R and the filter frozen. Uses the Fisher-information
// normalization sum x^2 / q (twice the local squared distance), so that
// value / eps^2 -> d/dt |d|_1^2 as eps -> 0.
FilterRate filter_witness_rate(const ProbVec& p, const TangentVec& d, const RateMatrix& r,
                               double eps, double floor = 1e-6);
FilterRate filter_witness_rate(const TangentVec& d, const RateMatrix& r, double eps,
                               double floor = 1e-6);  // p = filter base

struct SpecialPointRate {
  double frozen = 0.0;    // base held fixed
  double unfrozen = 0.0;  // base follows |d(t)| / |d(t)|_1
};

// d/dt 1/2 sum d^2 / p at the special point of d, with and without the base moving.
SpecialPointRate special_point_rate(const TangentVec& d, const RateMatrix& r);

enum class AncillaMode { AncillaM2, ExtraState };

// Trace-distance witness on R (x) Id_2 (d = e_from (x) (1/2, -1/2)) or on R (+) 0
// (d = e_from - e_extra). rate_value is the right derivative of |d|_1.
WitnessReport trace_ancilla_witness(const RateMatrix& r, AncillaMode mode, double rate_tol = 1e-9);

// Fisher witness through the filter on R (x) Id_2, built from the ancilla trace witness.
WitnessReport filter_ancilla_witness(const RateMatrix& r, double eps, double rate_tol = 1e-9);

}  // namespace fisherflow
