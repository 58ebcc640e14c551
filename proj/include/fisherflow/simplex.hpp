#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "fisherflow/linalg.hpp"

namespace fisherflow {

inline constexpr double kDefaultPMin = 1e-12;
inline constexpr std::size_t kMaxTotalDimension = 4096;

// Point of the probability simplex. Construction rejects entries below
// -1e-12, clamps the rest to >= 0 and renormalizes.
class ProbVec {
 public:
  ProbVec() = default;
  explicit ProbVec(const Vector& entries);
  ProbVec(std::initializer_list<double> entries);

  static ProbVec uniform(std::size_t n);
  static ProbVec basis(std::size_t n, std::size_t k);

  const Vector& vec() const noexcept { return entries_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.size()); }
  double operator[](std::size_t i) const { return entries_(static_cast<Eigen::Index>(i)); }
  bool interior(double p_min = kDefaultPMin) const;

 private:
  Vector entries_;
};

// Zero-sum perturbation vector.
class TangentVec {
 public:
  TangentVec() = default;
  explicit TangentVec(const Vector& entries);
  TangentVec(std::initializer_list<double> entries);

  static TangentVec between(const ProbVec& from, const ProbVec& to);
  // Removes the mean; for directions that are only approximately zero-sum.
  static TangentVec project(const Vector& v);

  const Vector& vec() const noexcept { return entries_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.size()); }
  double operator[](std::size_t i) const { return entries_(static_cast<Eigen::Index>(i)); }

 private:
  Vector entries_;
};

struct ValidationReport {
  std::vector<double> column_deviation;  // column sum minus one
  double max_column_deviation = 0.0;
  double most_negative_entry = 0.0;      // min(0, smallest entry)
  bool passed = false;
};

// Convention: T(i, j) = P(i | j), columns sum to one, T acts on column vectors.
ValidationReport validate_stochastic(const Matrix& t, double tol = 1e-9);

class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  // Throws InvalidInput unless validate_stochastic passes; never renormalizes.
  explicit StochasticMatrix(const Matrix& entries, double tol = 1e-9);

  static StochasticMatrix identity(std::size_t n);

  const Matrix& mat() const noexcept { return entries_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  ProbVec apply(const ProbVec& p) const;
  TangentVec apply(const TangentVec& d) const;

 private:
  Matrix entries_;
};

// Key (to, from), zero-based: rate a_{to<-from}.
using RateMap = std::map<std::pair<std::size_t, std::size_t>, double>;

struct Rate {
  std::size_t to = 0;
  std::size_t from = 0;
  double value = 0.0;
};

class RateMatrix {
 public:
  RateMatrix() = default;
  // Throws InvalidGenerator if a column sum exceeds 1e-9 * max(1, max|R|).
  explicit RateMatrix(const Matrix& entries);

  static RateMatrix zero(std::size_t n);
  // Diagonal is filled in so that columns sum to zero.
  static RateMatrix from_rates(std::size_t n, const RateMap& rates);

  const Matrix& mat() const noexcept { return entries_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  double rate(std::size_t to, std::size_t from) const;
  double norm_inf() const;

 private:
  Matrix entries_;
};

RateMap rates_of(const RateMatrix& r);

struct MarkovianCheck {
  bool markovian = true;
  std::vector<Rate> offending;  // rates below -rate_tol
};

MarkovianCheck is_markovian_generator(const RateMatrix& r, double rate_tol = 1e-9);

// n copies of an N-level system plus an M-level ancilla (M = 0: none).
struct ExtendedSpace {
  std::size_t base_dim = 2;
  std::size_t copies = 1;
  std::size_t ancilla = 0;

  // Throws Resource if the dimension exceeds `max_dim`.
  std::size_t total_dimension(std::size_t max_dim = kMaxTotalDimension) const;
};

// Kronecker products; index (i, a) flattens to i * dim(second) + a.
ProbVec tensor_state(const ProbVec& p, const ProbVec& q,
                     std::size_t max_dim = kMaxTotalDimension);
StochasticMatrix tensor_map(const StochasticMatrix& t, const StochasticMatrix& s,
                            std::size_t max_dim = kMaxTotalDimension);
TangentVec tensor_tangent(const TangentVec& d, const ProbVec& q);
TangentVec tensor_tangent(const ProbVec& p, const TangentVec& d);

// pi^{(x)n} (x) w; `w` ignored when space.ancilla == 0.
ProbVec extended_state(const ExtendedSpace& space, const ProbVec& pi, const ProbVec& w);

// Sum over copies of Id (x) .. (x) R (x) .. (x) Id, tensored with Id on the ancilla.
RateMatrix extended_generator(const ExtendedSpace& space, const RateMatrix& r);

// T (+) 1 and R (+) 0: an extra state that does not interact.
StochasticMatrix embed_extra_state(const StochasticMatrix& t);
RateMatrix embed_extra_state(const RateMatrix& r);

}  // namespace fisherflow
