#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fisherflow/simplex.hpp"

namespace fisherflow {

// Evolutions of the form T(t) = (1 - s(t)) Id + s(t) m(t) 1^T.
struct MixingFamily {
  std::function<double(double)> s;
  std::function<double(double)> s_dot;
  std::function<Vector(double)> m;
  std::function<Vector(double)> m_dot;
};

using GeneratorFunction = std::function<Matrix(double)>;

enum class DynamicsKind { Generator, Mixing, ContractionToPrior, CaseStudy };

std::string_view to_string(DynamicsKind kind) noexcept;

class Dynamics {
 public:
  // R(t) must return a matrix with zero column sums.
  static Dynamics generator_driven(std::size_t n, GeneratorFunction r, double horizon);
  static Dynamics constant(const RateMatrix& r, double horizon);
  // Validated on `samples` points of [0, horizon]: 0 <= s <= 1, s(0) = 0,
  // ds/dt >= 0 and m(t) a probability vector.
  static Dynamics mixing(std::size_t n, MixingFamily family, double horizon,
                         std::size_t samples = 1001);
  // s(t) = (1 - eps)(1 - e^{-t}), m = pi: relaxes towards eps Id + (1 - eps) pi 1^T.
  static Dynamics contraction_to_prior(const ProbVec& pi, double eps, double horizon);
  // Three-level example with a periodically moving attractor:
  // s = 1 - e^{-t}, m(t) = [(1 + cos 10t) v1 + (1 - cos 10t) v2] / 2.
  static Dynamics case_study(double horizon);

  DynamicsKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return n_; }
  double horizon() const noexcept { return horizon_; }
  bool closed_form() const noexcept { return kind_ != DynamicsKind::Generator; }
  const MixingFamily* mixing_family() const noexcept;

  // T^{(t,0)}; closed-form families only.
  Matrix propagator(double t) const;
  // T^{(t,s)} for closed-form families: exact; for generator-driven: RK4 from s.
  Matrix intermediate(double s, double t, std::size_t steps = 0) const;
  // R(t): exact for every kind. Throws Domain if 1 - s(t) < 1e-12.
  Matrix generator_matrix(double t) const;

 private:
  DynamicsKind kind_ = DynamicsKind::Generator;
  std::size_t n_ = 0;
  double horizon_ = 0.0;
  GeneratorFunction generator_;
  MixingFamily family_;
};

namespace case_study {
Vector v1();
Vector v2();
Vector attractor(double t);
Vector attractor_rate(double t);
}  // namespace case_study

std::vector<double> linspace(double t0, double t1, std::size_t points);

struct GridIndex {
  std::size_t index = 0;
  double time = 0.0;
  bool snapped = false;  // requested time was off the grid
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> propagators;  // T^{(t_k, t_0)}
  double richardson_estimate = 0.0;
  double max_column_drift = 0.0;    // removed by re-projection during RK4
  double most_negative_entry = 0.0;

  GridIndex nearest_index(double t) const;
  std::vector<ProbVec> states(const ProbVec& p0) const;
};

// Fixed-step RK4 for dT/dt = R(t) T with a Richardson check against half steps
// (throws IntegrationAccuracy above `richardson_tol`). Closed forms are exact.
Trajectory propagate(const Dynamics& dyn, double t0, double t1, std::size_t steps,
                     double richardson_tol = 1e-6);

struct IntermediateMap {
  Matrix map;
  ValidationReport report;
  double condition = 0.0;
  GridIndex s;
  GridIndex t;
};

// T^{(t,0)} (T^{(s,0)})^{-1} on the trajectory grid; off-grid times snap to
// the nearest grid point. Throws NearSingular when cond(T^{(s,0)}) > max_condition.
IntermediateMap intermediate_map(const Trajectory& traj, double s, double t,
                                 double max_condition = 1e12);

RateMatrix generator_of(const Dynamics& dyn, double t);
// (T^{(t+h,t)} - T^{(t-h,t)}) / 2h, one-sided at t < h.
RateMatrix generator_from_propagators(const Dynamics& dyn, double t, double h = 1e-6);

struct ScanPoint {
  double t = 0.0;
  double min_rate = 0.0;
  std::vector<Rate> negative;
};

struct ScanFailure {
  double t = 0.0;
  std::string message;
};

struct ScanWindow {
  double begin = 0.0;
  double end = 0.0;
  std::size_t first = 0;  // grid indices, inclusive
  std::size_t last = 0;
};

struct ScanResult {
  std::vector<ScanPoint> points;       // every grid point that was evaluated
  std::vector<ScanFailure> failures;
  std::vector<ScanWindow> windows;     // maximal runs of violating grid points
  bool refined_consistent = true;      // same window count on a grid twice as fine
  bool markovian() const { return windows.empty() && failures.empty(); }
};

ScanResult divisibility_scan(const Dynamics& dyn, const std::vector<double>& grid,
                             double rate_tol = 1e-9, bool finite_difference = false,
                             bool refine = true);

// max_k | |p(t_k) - q(t_k)|_1 - (1 - s(t_k)) |p0 - q0|_1 |; mixing families only.
double trace_scaling_check(const Dynamics& dyn, const ProbVec& p0, const ProbVec& q0,
                           const std::vector<double>& grid);

}  // namespace fisherflow
