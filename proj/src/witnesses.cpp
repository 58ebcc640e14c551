#include "fisherflow/witnesses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

Vector dirichlet(std::mt19937_64& rng, Eigen::Index n) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng) + 1e-9;
  return v / v.sum();
}

// Largest eigenvalue of the form restricted to the complement of `null_vectors`
// (columns, original coordinates) inside the zero-sum space.
double restricted_lambda_max(const ContractionForm& form, const Matrix& null_vectors) {
  if (null_vectors.cols() == 0) return form.lambda_max();
  const Matrix coords = form.basis().transpose() * null_vectors;
  Eigen::JacobiSVD<Matrix> svd(coords, Eigen::ComputeFullU);
  const Eigen::Index rank = svd.rank();
  const Matrix complement = svd.matrixU().rightCols(coords.rows() - rank);
  if (complement.cols() == 0) return 0.0;
  const Matrix restricted = complement.transpose() * form.matrix() * complement;
  const auto eig = linalg::symmetric_eigen(restricted);
  return eig.values(eig.values.size() - 1);
}

}  // namespace

std::string_view to_string(WitnessMethod m) noexcept {
  switch (m) {
    case WitnessMethod::Thm1Ladder: return "thm1-ladder";
    case WitnessMethod::FormSpectral: return "form-spectral";
    case WitnessMethod::Filter: return "filter";
    case WitnessMethod::TraceAncilla: return "trace-ancilla";
  }
  return "unknown";
}

double reevaluate(const WitnessReport& report) {
  switch (report.method) {
    case WitnessMethod::Thm1Ladder:
    case WitnessMethod::FormSpectral:
      return fisher_rate(report.base, report.direction, report.generator);
    case WitnessMethod::Filter:
      return filter_witness_rate(report.base, report.direction, report.generator,
                                 report.epsilon_used).value;
    case WitnessMethod::TraceAncilla:
      return trace_rate(report.direction, report.generator).right_derivative;
  }
  return 0.0;
}

std::optional<Rate> worst_rate(const RateMatrix& r, double rate_tol) {
  const MarkovianCheck check = is_markovian_generator(r, rate_tol);
  if (check.markovian) return std::nullopt;
  return *std::min_element(check.offending.begin(), check.offending.end(),
                           [](const Rate& a, const Rate& b) { return a.value < b.value; });
}

std::vector<double> default_epsilon_ladder() {
  std::vector<double> out;
  for (double eps = 0.1; eps >= 1e-6; eps *= 0.5) out.push_back(eps);
  return out;
}

WitnessReport dilation_direction_search(const RateMatrix& r, const std::vector<double>& eps_ladder,
                                        std::uint64_t seed, std::size_t fallback_samples,
                                        double rate_tol) {
  WitnessReport report;
  report.generator = r;
  report.seed = seed;
  report.offender = worst_rate(r, rate_tol);
  if (!report.offender) return report;

  const std::size_t n = r.size();
  const auto to = static_cast<Eigen::Index>(report.offender->to);
  const auto from = static_cast<Eigen::Index>(report.offender->from);
  for (double eps : eps_ladder) {
    if (!(eps > 0.0) || 1.0 - static_cast<double>(n - 1) * eps <= eps) continue;
    Vector p = Vector::Constant(static_cast<Eigen::Index>(n), eps);
    p(from) = 1.0 - static_cast<double>(n - 1) * eps;
    Vector d = Vector::Zero(static_cast<Eigen::Index>(n));
    d(to) = eps * eps;
    d(from) = -eps * eps;
    const ProbVec base(p);
    const TangentVec dir(d);
    const double rate = fisher_rate(base, dir, r);
    if (rate > 0.0) {
      report.found = true;
      report.method = WitnessMethod::Thm1Ladder;
      report.base = base;
      report.direction = dir;
      report.rate_value = rate;
      report.epsilon_used = eps;
      return report;
    }
  }

  std::mt19937_64 rng(seed);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fallback_samples; ++k) {
    const ProbVec base(dirichlet(rng, static_cast<Eigen::Index>(n)));
    if (!base.interior()) continue;
    const ContractionForm form(base, r);
    if (form.lambda_max() > best) {
      best = form.lambda_max();
      report.base = base;
      report.direction = form.max_direction();
    }
  }
  if (best > 0.0) {
    report.rate_value = fisher_rate(report.base, report.direction, r);
    if (report.rate_value > 0.0) {
      report.found = true;
      report.method = WitnessMethod::FormSpectral;
      return report;
    }
  }
  fail(ErrorKind::WitnessNotFound,
       "no dilation direction found for a rate of " + std::to_string(report.offender->value));
}

NoGoReport no_go_verify(const ProbVec& pi, const RateMatrix& r, std::size_t copies,
                        std::size_t ancilla, const ProbVec& w) {
  if (pi.size() != r.size()) fail(ErrorKind::InvalidInput, "prior and generator dimensions differ");
  if (!pi.interior()) fail(ErrorKind::SingularBase, "prior must be interior");
  NoGoReport out;
  const MarkovianCheck check = is_markovian_generator(r);
  out.nonmarkovian = !check.markovian;
  std::ostringstream detail;
  if (check.offending.size() != 1) {
    detail << "expected exactly one negative rate, found " << check.offending.size();
  } else {
    const Rate& bad = check.offending.front();
    const double back = r.rate(bad.from, bad.to) * pi[bad.to];
    const double forward = std::abs(bad.value) * pi[bad.from];
    out.condition_met = back > forward;
    detail << "a_{" << bad.from << "<-" << bad.to << "} pi_" << bad.to << " = " << back
           << (out.condition_met ? " > " : " <= ") << "|a_{" << bad.to << "<-" << bad.from
           << "}| pi_" << bad.from << " = " << forward;
  }
  out.condition_detail = detail.str();

  const ExtendedSpace space{r.size(), copies, ancilla};
  out.dimension = space.total_dimension();
  const ProbVec base = extended_state(space, pi, ancilla > 0 ? w : ProbVec{1.0});
  const RateMatrix extended = extended_generator(space, r);
  const ContractionForm form(base, extended);
  out.lambda_max = form.lambda_max();
  out.margin = 1e-6 * r.norm_inf();
  out.no_dilation = out.lambda_max <= -out.margin;

  Matrix null_vectors(static_cast<Eigen::Index>(out.dimension), 0);
  if (ancilla >= 2) {
    Vector system = pi.vec();
    for (std::size_t k = 1; k < copies; ++k) system = linalg::kron(system, pi.vec());
    const Matrix h = linalg::zero_sum_basis(ancilla);
    null_vectors.resize(static_cast<Eigen::Index>(out.dimension), h.cols());
    for (Eigen::Index k = 0; k < h.cols(); ++k)
      null_vectors.col(k) = linalg::kron(system, Vector(h.col(k)));
  }
  out.lambda_max_active = restricted_lambda_max(form, null_vectors);
  return out;
}

SpecialPoint special_base_point(const TangentVec& d) {
  const double total = d.vec().lpNorm<1>();
  if (!(total > 0.0)) fail(ErrorKind::InvalidInput, "special point needs a nonzero perturbation");
  SpecialPoint out;
  out.base = ProbVec(Vector(d.vec().cwiseAbs() / total));
  out.interior = out.base.interior();
  return out;
}

StochasticMatrix filter_map(const ProbVec& pi, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) fail(ErrorKind::InvalidInput, "filter strength must lie in (0, 1]");
  const auto n = static_cast<Eigen::Index>(pi.size());
  return StochasticMatrix(eps * Matrix::Identity(n, n) + (1.0 - eps) * pi.vec() * Vector::Ones(n).transpose());
}

TangentVec regularize_direction(const TangentVec& d, const RateMatrix& r, double floor,
                                bool* changed) {
  if (d.size() != r.size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  const Vector& v = d.vec();
  const double scale = v.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) fail(ErrorKind::InvalidInput, "zero perturbation");
  const Vector velocity = r.mat() * v;
  Vector out = v;
  bool any = false;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (out(k) != 0.0) continue;
    out(k) = (velocity(k) < 0.0 ? -1.0 : 1.0) * floor * scale;
    any = true;
  }
  if (any) {
    Eigen::Index largest = 0;
    out.cwiseAbs().maxCoeff(&largest);
    out(largest) -= out.sum();
  }
  if (changed != nullptr) *changed = any;
  return TangentVec(out);
}

FilterRate filter_witness_rate(const ProbVec& p, const TangentVec& d, const RateMatrix& r,
                               double eps, double floor) {
  if (p.size() != d.size() || d.size() != r.size()) fail(ErrorKind::InvalidInput, "dimension mismatch");
  FilterRate out;
  out.direction = regularize_direction(d, r, floor, &out.regularized);
  out.filter_base = special_base_point(out.direction).base;
  const StochasticMatrix f = filter_map(out.filter_base, eps);
  const Vector q = f.mat() * p.vec();
  const Vector x = eps * out.direction.vec();
  const Vector q_dot = eps * (r.mat() * p.vec());
  const Vector x_dot = eps * (r.mat() * out.direction.vec());
  out.value = 2.0 * fisher_sq_derivative(q, x, q_dot, x_dot);
  return out;
}

FilterRate filter_witness_rate(const TangentVec& d, const RateMatrix& r, double eps, double floor) {
  bool changed = false;
  const TangentVec reg = regularize_direction(d, r, floor, &changed);
  FilterRate out = filter_witness_rate(special_base_point(reg).base, reg, r, eps, floor);
  out.regularized = changed;
  return out;
}

SpecialPointRate special_point_rate(const TangentVec& d, const RateMatrix& r) {
  const SpecialPoint sp = special_base_point(d);
  if (!sp.interior) fail(ErrorKind::SingularBase, "special point of d is on the boundary");
  const Vector& v = d.vec();
  const Vector& p = sp.base.vec();
  const Vector v_dot = r.mat() * v;
  const double total = v.lpNorm<1>();
  double total_dot = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) total_dot += sign(v(k)) * v_dot(k);
  Vector p_dot(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k)
    p_dot(k) = sign(v(k)) * v_dot(k) / total - std::abs(v(k)) * total_dot / (total * total);
  SpecialPointRate out;
  out.frozen = fisher_sq_derivative(p, v, Vector::Zero(v.size()), v_dot);
  out.unfrozen = fisher_sq_derivative(p, v, p_dot, v_dot);
  return out;
}

WitnessReport trace_ancilla_witness(const RateMatrix& r, AncillaMode mode, double rate_tol) {
  WitnessReport report;
  report.method = WitnessMethod::TraceAncilla;
  report.offender = worst_rate(r, rate_tol);
  const std::size_t n = r.size();
  const std::size_t source = report.offender ? report.offender->from : 0;
  Vector d;
  if (mode == AncillaMode::AncillaM2) {
    report.generator = extended_generator({n, 1, 2}, r);
    Vector anc(2);
    anc << 0.5, -0.5;
    d = linalg::kron(Vector(Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(source))), anc);
    report.base = ProbVec::uniform(2 * n);
  } else {
    report.generator = embed_extra_state(r);
    d = Vector::Zero(static_cast<Eigen::Index>(n + 1));
    d(static_cast<Eigen::Index>(source)) = 1.0;
    d(static_cast<Eigen::Index>(n)) = -1.0;
    report.base = ProbVec::uniform(n + 1);
  }
  report.direction = TangentVec(d);
  if (!report.offender) return report;
  report.rate_value = trace_rate(report.direction, report.generator).right_derivative;
  report.found = report.rate_value > 0.0;
  return report;
}

WitnessReport filter_ancilla_witness(const RateMatrix& r, double eps, double rate_tol) {
  const WitnessReport trace = trace_ancilla_witness(r, AncillaMode::AncillaM2, rate_tol);
  WitnessReport report;
  report.method = WitnessMethod::Filter;
  report.offender = trace.offender;
  report.generator = trace.generator;
  report.epsilon_used = eps;
  if (!trace.found) return report;
  const FilterRate rate = filter_witness_rate(trace.direction, trace.generator, eps);
  report.base = rate.filter_base;
  report.direction = rate.direction;
  report.rate_value = rate.value;
  report.found = rate.value > 0.0;
  return report;
}

}  // namespace fisherflow
