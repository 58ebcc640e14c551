#include "fisherflow/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "fisherflow/distances.hpp"
#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

constexpr double kSaturation = 1e-12;

Matrix identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return Matrix::Identity(k, k);
}

// Removes column-sum drift; returns the largest drift removed.
double reproject_columns(Matrix& t) {
  double drift = 0.0;
  const double n = static_cast<double>(t.rows());
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    const double dev = t.col(j).sum() - 1.0;
    drift = std::max(drift, std::abs(dev));
    t.col(j).array() -= dev / n;
  }
  return drift;
}

Matrix rk4_step(const GeneratorFunction& r, double t, const Matrix& x, double h) {
  const Matrix rm = r(t + 0.5 * h);
  const Matrix k1 = r(t) * x;
  const Matrix k2 = rm * (x + 0.5 * h * k1);
  const Matrix k3 = rm * (x + 0.5 * h * k2);
  const Matrix k4 = r(t + h) * (x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates from `from` to `to` in `steps` equal steps; returns the largest drift.
double integrate(const GeneratorFunction& r, double from, double to, std::size_t steps,
                 Matrix& x) {
  const double h = (to - from) / static_cast<double>(steps);
  double drift = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = rk4_step(r, from + static_cast<double>(k) * h, x, h);
    drift = std::max(drift, reproject_columns(x));
  }
  return drift;
}

bool is_mixing(DynamicsKind kind) { return kind != DynamicsKind::Generator; }

}  // namespace

std::string_view to_string(DynamicsKind kind) noexcept {
  switch (kind) {
    case DynamicsKind::Generator: return "generator";
    case DynamicsKind::Mixing: return "mixing";
    case DynamicsKind::ContractionToPrior: return "contraction-to-prior";
    case DynamicsKind::CaseStudy: return "case-study";
  }
  return "unknown";
}

namespace case_study {
Vector v1() { return Vector::Constant(3, 1.0 / 3.0); }
Vector v2() { return Vector::Unit(3, 0); }
Vector attractor(double t) {
  const double c = std::cos(10.0 * t);
  return 0.5 * ((1.0 + c) * v1() + (1.0 - c) * v2());
}
Vector attractor_rate(double t) { return 5.0 * std::sin(10.0 * t) * (v2() - v1()); }
}  // namespace case_study

Dynamics Dynamics::generator_driven(std::size_t n, GeneratorFunction r, double horizon) {
  if (n < 2) fail(ErrorKind::InvalidInput, "dynamics needs N >= 2");
  if (!(horizon > 0.0)) fail(ErrorKind::InvalidInput, "horizon must be positive");
  if (!r) fail(ErrorKind::InvalidInput, "missing generator function");
  Dynamics d;
  d.kind_ = DynamicsKind::Generator;
  d.n_ = n;
  d.horizon_ = horizon;
  d.generator_ = std::move(r);
  return d;
}

Dynamics Dynamics::constant(const RateMatrix& r, double horizon) {
  const Matrix m = r.mat();
  return generator_driven(r.size(), [m](double) { return m; }, horizon);
}

Dynamics Dynamics::mixing(std::size_t n, MixingFamily family, double horizon,
                          std::size_t samples) {
  if (n < 2) fail(ErrorKind::InvalidInput, "dynamics needs N >= 2");
  if (!(horizon > 0.0)) fail(ErrorKind::InvalidInput, "horizon must be positive");
  if (!family.s || !family.s_dot || !family.m || !family.m_dot)
    fail(ErrorKind::InvalidInput, "mixing family is incomplete");
  if (std::abs(family.s(0.0)) > kSaturation) fail(ErrorKind::InvalidInput, "mixing needs s(0) = 0");
  for (double t : linspace(0.0, horizon, std::max<std::size_t>(samples, 2))) {
    const double s = family.s(t);
    const double s_dot = family.s_dot(t);
    if (!std::isfinite(s) || s < -kSaturation || s > 1.0 + kSaturation)
      fail(ErrorKind::InvalidInput, "mixing parameter leaves [0, 1] at t = " + std::to_string(t));
    if (!std::isfinite(s_dot) || s_dot < -kSaturation)
      fail(ErrorKind::InvalidInput, "mixing parameter decreases at t = " + std::to_string(t));
    const Vector m = family.m(t);
    const Vector m_dot = family.m_dot(t);
    if (static_cast<std::size_t>(m.size()) != n || static_cast<std::size_t>(m_dot.size()) != n)
      fail(ErrorKind::InvalidInput, "mixing state has the wrong dimension");
    if (!m.allFinite() || !m_dot.allFinite() || m.minCoeff() < -kSaturation ||
        std::abs(m.sum() - 1.0) > 1e-9 || std::abs(m_dot.sum()) > 1e-9)
      fail(ErrorKind::InvalidInput, "mixing state is not a probability vector at t = " +
                                        std::to_string(t));
  }
  Dynamics d;
  d.kind_ = DynamicsKind::Mixing;
  d.n_ = n;
  d.horizon_ = horizon;
  d.family_ = std::move(family);
  return d;
}

Dynamics Dynamics::contraction_to_prior(const ProbVec& pi, double eps, double horizon) {
  if (!(eps > 0.0 && eps <= 1.0)) fail(ErrorKind::InvalidInput, "eps must lie in (0, 1]");
  const Vector target = pi.vec();
  const auto n = target.size();
  MixingFamily f;
  f.s = [eps](double t) { return (1.0 - eps) * -std::expm1(-t); };
  f.s_dot = [eps](double t) { return (1.0 - eps) * std::exp(-t); };
  f.m = [target](double) { return target; };
  f.m_dot = [n](double) { return Vector(Vector::Zero(n)); };
  Dynamics d = mixing(pi.size(), std::move(f), horizon);
  d.kind_ = DynamicsKind::ContractionToPrior;
  return d;
}

Dynamics Dynamics::case_study(double horizon) {
  MixingFamily f;
  f.s = [](double t) { return -std::expm1(-t); };
  f.s_dot = [](double t) { return std::exp(-t); };
  f.m = case_study::attractor;
  f.m_dot = case_study::attractor_rate;
  Dynamics d = mixing(3, std::move(f), horizon);
  d.kind_ = DynamicsKind::CaseStudy;
  return d;
}

const MixingFamily* Dynamics::mixing_family() const noexcept {
  return is_mixing(kind_) ? &family_ : nullptr;
}

Matrix Dynamics::propagator(double t) const {
  if (!is_mixing(kind_)) fail(ErrorKind::InvalidInput, "no closed-form propagator");
  const double s = family_.s(t);
  return (1.0 - s) * identity(n_) + s * family_.m(t) * Vector::Ones(static_cast<Eigen::Index>(n_)).transpose();
}

Matrix Dynamics::intermediate(double s, double t, std::size_t steps) const {
  if (is_mixing(kind_)) {
    // Sherman-Morrison: T(s)^{-1} = (Id - sigma_s m_s 1^T) / (1 - sigma_s).
    const double ss = family_.s(s);
    const double st = family_.s(t);
    if (1.0 - ss < kSaturation)
      fail(ErrorKind::Domain, "mixing parameter saturates at s = " + std::to_string(s));
    const Vector column = (st * (1.0 - ss) * family_.m(t) - (1.0 - st) * ss * family_.m(s)) / (1.0 - ss);
    return ((1.0 - st) / (1.0 - ss)) * identity(n_) +
           column * Vector::Ones(static_cast<Eigen::Index>(n_)).transpose();
  }
  if (steps == 0)
    steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(t - s) / 1e-3)));
  Matrix x = identity(n_);
  if (t != s) integrate(generator_, s, t, steps, x);
  return x;
}

Matrix Dynamics::generator_matrix(double t) const {
  if (!is_mixing(kind_)) {
    Matrix r = generator_(t);
    if (static_cast<std::size_t>(r.rows()) != n_ || r.rows() != r.cols())
      fail(ErrorKind::InvalidGenerator, "generator has the wrong dimension");
    return r;
  }
  const double s = family_.s(t);
  if (1.0 - s < kSaturation)
    fail(ErrorKind::Domain, "mixing parameter saturates at t = " + std::to_string(t));
  const double k = family_.s_dot(t) / (1.0 - s);
  const Vector column = k * family_.m(t) + s * family_.m_dot(t);
  return -k * identity(n_) + column * Vector::Ones(static_cast<Eigen::Index>(n_)).transpose();
}

std::vector<double> linspace(double t0, double t1, std::size_t points) {
  if (points < 2) fail(ErrorKind::InvalidInput, "grid needs at least two points");
  std::vector<double> out(points);
  const double h = (t1 - t0) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) out[k] = t0 + static_cast<double>(k) * h;
  out.back() = t1;
  return out;
}

GridIndex Trajectory::nearest_index(double t) const {
  if (times.empty()) fail(ErrorKind::InvalidInput, "empty trajectory");
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  if (k == times.size()) {
    k = times.size() - 1;
  } else if (k > 0 && std::abs(times[k - 1] - t) <= std::abs(times[k] - t)) {
    --k;
  }
  GridIndex out{k, times[k], false};
  out.snapped = std::abs(times[k] - t) > 1e-12 * std::max(1.0, std::abs(t));
  return out;
}

std::vector<ProbVec> Trajectory::states(const ProbVec& p0) const {
  std::vector<ProbVec> out;
  out.reserve(propagators.size());
  for (const Matrix& t : propagators) out.emplace_back(Vector(t * p0.vec()));
  return out;
}

Trajectory propagate(const Dynamics& dyn, double t0, double t1, std::size_t steps,
                     double richardson_tol) {
  if (!(t1 > t0)) fail(ErrorKind::InvalidInput, "propagation needs t1 > t0");
  if (steps < 1) fail(ErrorKind::InvalidInput, "propagation needs at least one step");
  Trajectory traj;
  traj.times = linspace(t0, t1, steps + 1);
  const std::size_t n = dyn.dimension();
  if (dyn.closed_form()) {
    for (double t : traj.times) traj.propagators.push_back(dyn.intermediate(t0, t));
  } else {
    const GeneratorFunction r = [&dyn](double t) { return dyn.generator_matrix(t); };
    Matrix coarse = identity(n);
    Matrix fine = identity(n);
    traj.propagators.push_back(fine);
    for (std::size_t k = 0; k < steps; ++k) {
      const double a = traj.times[k];
      const double b = traj.times[k + 1];
      integrate(r, a, b, 1, coarse);
      traj.max_column_drift = std::max(traj.max_column_drift, integrate(r, a, b, 2, fine));
      traj.richardson_estimate =
          std::max(traj.richardson_estimate, (fine - coarse).cwiseAbs().maxCoeff() / 15.0);
      traj.propagators.push_back(fine);
    }
    if (traj.richardson_estimate > richardson_tol)
      fail(ErrorKind::IntegrationAccuracy,
           "RK4 step-size check failed (estimate " + std::to_string(traj.richardson_estimate) +
               "); increase the number of steps");
  }
  for (const Matrix& t : traj.propagators)
    traj.most_negative_entry = std::min(traj.most_negative_entry, t.minCoeff());
  return traj;
}

IntermediateMap intermediate_map(const Trajectory& traj, double s, double t,
                                 double max_condition) {
  if (t < s) fail(ErrorKind::InvalidInput, "intermediate map needs t >= s");
  IntermediateMap out;
  out.s = traj.nearest_index(s);
  out.t = traj.nearest_index(t);
  const Matrix& ts = traj.propagators[out.s.index];
  const Matrix& tt = traj.propagators[out.t.index];
  out.condition = linalg::condition_number(ts);
  if (!(out.condition <= max_condition))
    fail(ErrorKind::NearSingular,
         "propagator at s = " + std::to_string(out.s.time) + " is numerically singular");
  // X T_s = T_t  <=>  T_s^T X^T = T_t^T
  out.map = ts.transpose().partialPivLu().solve(tt.transpose()).transpose();
  out.report = validate_stochastic(out.map);
  return out;
}

RateMatrix generator_of(const Dynamics& dyn, double t) {
  return RateMatrix(dyn.generator_matrix(t));
}

RateMatrix generator_from_propagators(const Dynamics& dyn, double t, double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "step must be positive");
  const Matrix forward = dyn.intermediate(t, t + h, 1);
  Matrix r;
  if (t - h < 0.0) {
    r = (forward - identity(dyn.dimension())) / h;
  } else {
    r = (forward - dyn.intermediate(t, t - h, 1)) / (2.0 * h);
  }
  // Finite differences leave O(h^2) column sums; remove them before validation.
  for (Eigen::Index j = 0; j < r.cols(); ++j) r.col(j).array() -= r.col(j).mean();
  return RateMatrix(r);
}

namespace {

ScanResult scan_once(const Dynamics& dyn, const std::vector<double>& grid, double rate_tol,
                     bool finite_difference) {
  ScanResult out;
  bool open = false;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    try {
      const RateMatrix r = finite_difference ? generator_from_propagators(dyn, t) : generator_of(dyn, t);
      ScanPoint point{t, 0.0, is_markovian_generator(r, rate_tol).offending};
      bool first = true;
      for (const auto& [key, a] : rates_of(r)) {
        if (first || a < point.min_rate) point.min_rate = a;
        first = false;
      }
      const bool violating = !point.negative.empty();
      out.points.push_back(std::move(point));
      if (violating) {
        if (!open) out.windows.push_back({t, t, k, k});
        out.windows.back().end = t;
        out.windows.back().last = k;
      }
      open = violating;
    } catch (const Error& e) {
      out.failures.push_back({t, e.what()});
      open = false;
    }
  }
  return out;
}

}  // namespace

ScanResult divisibility_scan(const Dynamics& dyn, const std::vector<double>& grid,
                             double rate_tol, bool finite_difference, bool refine) {
  ScanResult out = scan_once(dyn, grid, rate_tol, finite_difference);
  if (refine && grid.size() >= 2) {
    std::vector<double> fine;
    fine.reserve(2 * grid.size());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      fine.push_back(grid[k]);
      fine.push_back(0.5 * (grid[k] + grid[k + 1]));
    }
    fine.push_back(grid.back());
    const ScanResult finer = scan_once(dyn, fine, rate_tol, finite_difference);
    out.refined_consistent = finer.windows.size() == out.windows.size();
  }
  return out;
}

double trace_scaling_check(const Dynamics& dyn, const ProbVec& p0, const ProbVec& q0,
                           const std::vector<double>& grid) {
  const MixingFamily* family = dyn.mixing_family();
  if (family == nullptr) fail(ErrorKind::InvalidInput, "trace scaling needs a mixing family");
  const double initial = trace_distance(p0, q0);
  double worst = 0.0;
  for (double t : grid) {
    const Matrix tm = dyn.propagator(t);
    const double now = (tm * (p0.vec() - q0.vec())).lpNorm<1>();
    worst = std::max(worst, std::abs(now - (1.0 - family->s(t)) * initial));
  }
  return worst;
}

}  // namespace fisherflow
