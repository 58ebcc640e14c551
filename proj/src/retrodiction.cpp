#include "fisherflow/retrodiction.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

// <x, y> in the metric at p: 1/2 sum x y / p.
double inner(const Vector& x, const Vector& y, const Vector& p) {
  return 0.5 * (x.array() * y.array() / p.array()).sum();
}

double asymmetry_in_metric(const Matrix& a, const Vector& prior) {
  const Vector d = (2.0 * prior).cwiseSqrt().cwiseInverse();
  const Matrix s = d.asDiagonal() * a * d.cwiseInverse().asDiagonal();
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

// Symmetric representative of an operator that is self-adjoint in the prior
// metric, restricted to the zero-sum space. Returns eigen-decomposition with
// eigenvectors mapped back to original coordinates.
struct ZeroSumSpectrum {
  Vector values;
  Matrix vectors;  // columns, zero-sum, original coordinates
};

ZeroSumSpectrum zero_sum_spectrum(const Matrix& op, const Vector& prior) {
  const Vector g_half = (2.0 * prior).cwiseSqrt().cwiseInverse();  // G^{1/2}
  const Matrix sym_full = g_half.asDiagonal() * op * g_half.cwiseInverse().asDiagonal();
  const Matrix sym = 0.5 * (sym_full + sym_full.transpose());
  const Matrix c = linalg::orthogonal_complement(g_half.cwiseInverse());
  const auto eig = linalg::symmetric_eigen(Matrix(c.transpose() * sym * c));
  ZeroSumSpectrum out;
  out.values = eig.values;
  out.vectors = g_half.cwiseInverse().asDiagonal() * c * eig.vectors;
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    out.vectors.col(k).array() -= out.vectors.col(k).mean();
    out.vectors.col(k).normalize();
  }
  return out;
}

}  // namespace

Matrix bayes_matrix(const Matrix& t, const ProbVec& pi) {
  const Vector image = t * pi.vec();
  if (image.minCoeff() <= 0.0)
    fail(ErrorKind::UndefinedPosterior, "posterior undefined: the image of the prior has a zero entry");
  return pi.vec().asDiagonal() * t.transpose() * image.cwiseInverse().asDiagonal();
}

StochasticMatrix bayes_inverse(const StochasticMatrix& t, const ProbVec& pi) {
  if (t.size() != pi.size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  return StochasticMatrix(bayes_matrix(t.mat(), pi));
}

Matrix recovery_map(const Matrix& t, const ProbVec& prior) { return bayes_matrix(t, prior) * t; }

RetrodictionContext::RetrodictionContext(const ProbVec& prior, Dynamics dyn, double t_end,
                                         std::size_t steps)
    : prior_(prior), dyn_(std::move(dyn)) {
  if (prior_.size() != dyn_.dimension()) fail(ErrorKind::InvalidInput, "prior dimension mismatch");
  if (!prior_.interior()) fail(ErrorKind::SingularBase, "prior must be interior");
  traj_ = propagate(dyn_, 0.0, t_end, steps);
  bayes_.reserve(traj_.propagators.size());
  recovery_.reserve(traj_.propagators.size());
  for (const Matrix& t : traj_.propagators) {
    Matrix hat = bayes_matrix(t, prior_);
    const ValidationReport rep = validate_stochastic(hat);
    invariants_.max_column_deviation = std::max(invariants_.max_column_deviation, rep.max_column_deviation);
    invariants_.most_negative_entry = std::min(invariants_.most_negative_entry, rep.most_negative_entry);
    Matrix a = hat * t;
    invariants_.prior_recovery =
        std::max(invariants_.prior_recovery, (a * prior_.vec() - prior_.vec()).cwiseAbs().maxCoeff());
    invariants_.self_adjointness = std::max(invariants_.self_adjointness, asymmetry_in_metric(a, prior_.vec()));
    bayes_.push_back(std::move(hat));
    recovery_.push_back(std::move(a));
  }
}

Matrix RetrodictionContext::propagator_at(double t) const {
  if (dyn_.closed_form()) return dyn_.propagator(t);
  std::size_t k = traj_.nearest_index(t).index;
  if (traj_.times[k] > t && k > 0) --k;
  return dyn_.intermediate(traj_.times[k], t) * traj_.propagators[k];
}

Matrix RetrodictionContext::recovery_at(double t) const { return recovery_map(propagator_at(t), prior_); }

RetroDistance retrodiction_distance_sq(const ProbVec& p0, const RetrodictionContext& ctx, double t,
                                       RetroMetricBase base) {
  if (p0.size() != ctx.prior().size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  RetroDistance out;
  out.at = ctx.trajectory().nearest_index(t);
  const Vector d = p0.vec() - ctx.prior().vec();
  const Vector& metric = base == RetroMetricBase::Prior ? ctx.prior().vec() : p0.vec();
  if (metric.minCoeff() < kDefaultPMin) fail(ErrorKind::SingularBase, "metric base is on the boundary");
  const Vector gap = d - ctx.recovery(out.at.index) * d;
  out.value = inner(gap, gap, metric);
  out.large_perturbation = inner(d, d, ctx.prior().vec()) > 0.01;
  return out;
}

AdjointCheck adjoint_identity_check(const RetrodictionContext& ctx, double t, std::size_t trials,
                                    std::uint64_t seed) {
  const std::size_t k = ctx.trajectory().nearest_index(t).index;
  const Matrix& tm = ctx.propagator(k);
  const Matrix& a = ctx.recovery(k);
  const Vector& pi = ctx.prior().vec();
  const Vector image = tm * pi;
  AdjointCheck out;
  out.self_adjointness = asymmetry_in_metric(a, pi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Vector d(pi.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = g(rng);
    d.array() -= d.mean();
    const double lhs = inner(d, a * d, pi);
    const Vector td = tm * d;
    const double rhs = inner(td, td, image);
    out.max_deviation = std::max(out.max_deviation, std::abs(lhs - rhs));
    if (rhs > inner(d, d, pi) * (1.0 + 1e-12)) out.contraction_bound = false;
  }
  return out;
}

Vector recovery_spectrum(const RetrodictionContext& ctx, std::size_t k) {
  const Vector g_half = (2.0 * ctx.prior().vec()).cwiseSqrt().cwiseInverse();
  const Matrix sym_full = g_half.asDiagonal() * ctx.recovery(k) * g_half.cwiseInverse().asDiagonal();
  return linalg::symmetric_eigen(Matrix(0.5 * (sym_full + sym_full.transpose()))).values;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Inconsistent: return "inconsistent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

Theorem4Report theorem4_check(const RetrodictionContext& ctx, double t, double h, double band,
                              double richardson_tol) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "step must be positive");
  if (t - 2.0 * h < 0.0) fail(ErrorKind::InvalidInput, "time too close to the start of the grid");
  const Vector& pi = ctx.prior().vec();
  const Matrix b1 = -(ctx.recovery_at(t + h) - ctx.recovery_at(t - h)) / (2.0 * h);
  const Matrix b2 = -(ctx.recovery_at(t + 2.0 * h) - ctx.recovery_at(t - 2.0 * h)) / (4.0 * h);

  Theorem4Report out;
  out.t = t;
  out.richardson_estimate = (b1 - b2).cwiseAbs().maxCoeff() / 3.0;
  if (out.richardson_estimate > richardson_tol)
    fail(ErrorKind::IntegrationAccuracy,
         "derivative of the recovery map is not resolved at t = " + std::to_string(t));

  const ZeroSumSpectrum spec = zero_sum_spectrum(b1, pi);
  out.b_eigenvalues = spec.values;
  const Matrix tm = ctx.propagator_at(t);
  const ProbVec image(Vector(tm * pi));
  out.lambda_max_at_image = ContractionForm(image, generator_of(ctx.dynamics(), t)).lambda_max();

  auto retro = [&](const Vector& d, double time) {
    const Vector gap = d - ctx.recovery_at(time) * d;
    return inner(gap, gap, pi);
  };
  bool directions_agree = true;
  for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
    if (spec.values(k) >= -band) continue;
    const Vector d = spec.vectors.col(k);
    EigenDirectionRate rate;
    rate.eigenvalue = spec.values(k);
    rate.retro_rate = (retro(d, t + h) - retro(d, t - h)) / (2.0 * h);
    rate.negative = rate.retro_rate < 0.0;
    if (rate.retro_rate > band) directions_agree = false;
    out.negative_directions.push_back(rate);
  }

  const double b_min = spec.values.size() > 0 ? spec.values(0) : 0.0;
  if (std::abs(b_min) < band || std::abs(out.lambda_max_at_image) < band) {
    out.verdict = directions_agree ? Verdict::Inconclusive : Verdict::Inconsistent;
  } else {
    const bool agree = (b_min < 0.0) == (out.lambda_max_at_image > 0.0);
    out.verdict = agree && directions_agree ? Verdict::Consistent : Verdict::Inconsistent;
  }
  out.consistent = out.verdict != Verdict::Inconsistent;
  return out;
}

}  // namespace fisherflow
