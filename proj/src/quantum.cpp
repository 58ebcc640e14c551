#include "fisherflow/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "fisherflow/errors.hpp"

namespace fisherflow {
namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kFullRank = 1e-10;

double hermitian_defect(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

void check_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    fail(ErrorKind::InvalidInput, std::string(what) + " must be a non-empty square matrix");
  if (static_cast<std::size_t>(m.rows()) > kMaxQuantumDimension)
    fail(ErrorKind::Resource, std::string(what) + " exceeds the maximum dimension 16");
  if (!m.allFinite()) fail(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

CMatrix unit(std::size_t d, std::size_t i, std::size_t j) {
  CMatrix e = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return e;
}

// Superoperator of a linear map given by its action on matrix units.
CMatrix superoperator_of(std::size_t d, const std::function<CMatrix(const CMatrix&)>& action) {
  const auto n = static_cast<Eigen::Index>(d * d);
  CMatrix s(n, n);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i)
      s.col(static_cast<Eigen::Index>(i + d * j)) = vec(action(unit(d, i, j)));
  return s;
}

std::size_t dimension_of_superoperator(const CMatrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0)
    fail(ErrorKind::InvalidInput, "superoperator must be a non-empty square matrix");
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(s.rows()))));
  if (static_cast<Eigen::Index>(d * d) != s.rows())
    fail(ErrorKind::InvalidInput, "superoperator size is not a perfect square");
  if (d > kMaxQuantumDimension) fail(ErrorKind::Resource, "operator dimension exceeds 16");
  if (!s.allFinite()) fail(ErrorKind::InvalidInput, "superoperator has non-finite entries");
  return d;
}

// max_c |sum_i S(ii, c) - target(c)|, target = delta_ab for trace preservation
// or 0 for a generator.
double trace_defect(const CMatrix& s, std::size_t d, double diagonal_target) {
  double worst = 0.0;
  for (std::size_t b = 0; b < d; ++b)
    for (std::size_t a = 0; a < d; ++a) {
      Complex tr = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        tr += s(static_cast<Eigen::Index>(i + d * i), static_cast<Eigen::Index>(a + d * b));
      const double target = a == b ? diagonal_target : 0.0;
      worst = std::max(worst, std::abs(tr - target));
    }
  return worst;
}

CMatrix extend_superoperator(const CMatrix& s, std::size_t d, std::size_t m) {
  if (m == 0) fail(ErrorKind::InvalidInput, "reference dimension must be positive");
  if (d * m > kMaxQuantumDimension) fail(ErrorKind::Resource, "extended dimension exceeds 16");
  const std::size_t big = d * m;
  return superoperator_of(big, [&](const CMatrix& e) {
    // e is a matrix unit E_{(i,a),(j,b)} = E_ij (x) E_ab.
    Eigen::Index r = 0, c = 0;
    e.cwiseAbs().maxCoeff(&r, &c);
    const auto i = static_cast<std::size_t>(r) / m, a = static_cast<std::size_t>(r) % m;
    const auto j = static_cast<std::size_t>(c) / m, b = static_cast<std::size_t>(c) % m;
    const CMatrix image = unvec(s * vec(unit(d, i, j)), d);
    return CMatrix(linalg::kron(image, unit(m, a, b)));
  });
}

}  // namespace

DensityMatrix::DensityMatrix(const CMatrix& entries) : entries_(entries) {
  check_square(entries, "density matrix");
  if (hermitian_defect(entries) > kHermitianTol)
    fail(ErrorKind::InvalidInput, "density matrix is not Hermitian");
  if (std::abs(entries.trace() - Complex(1.0)) > kTraceTol)
    fail(ErrorKind::InvalidInput, "density matrix does not have unit trace");
  const auto eig = linalg::hermitian_eigen(entries);
  if (eig.values(0) < -kPsdTol) {
    std::ostringstream msg;
    msg << "density matrix has negative eigenvalue " << eig.values(0);
    fail(ErrorKind::InvalidInput, msg.str());
  }
  entries_ = 0.5 * (entries + entries.adjoint());
}

DensityMatrix DensityMatrix::from_diagonal(const ProbVec& p) {
  return DensityMatrix(CMatrix(p.vec().cast<Complex>().asDiagonal()));
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return DensityMatrix(CMatrix::Identity(n, n) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) fail(ErrorKind::InvalidInput, "pure state needs a nonzero vector");
  const CVector u = psi / norm;
  return DensityMatrix(CMatrix(u * u.adjoint()));
}

HermitianPerturbation::HermitianPerturbation(const CMatrix& entries) : entries_(entries) {
  check_square(entries, "perturbation");
  if (hermitian_defect(entries) > kHermitianTol)
    fail(ErrorKind::InvalidInput, "perturbation is not Hermitian");
  if (std::abs(entries.trace()) > kTraceTol)
    fail(ErrorKind::InvalidInput, "perturbation is not traceless");
  entries_ = 0.5 * (entries + entries.adjoint());
}

HermitianPerturbation HermitianPerturbation::from_diagonal(const TangentVec& d) {
  return HermitianPerturbation(CMatrix(d.vec().cast<Complex>().asDiagonal()));
}

PerturbationSplit split_in_basis(const CMatrix& x, const CMatrix& basis) {
  const CMatrix in_basis = basis.adjoint() * x * basis;
  const CMatrix diag = CMatrix(in_basis.diagonal().asDiagonal());
  PerturbationSplit out;
  out.diagonal = basis * diag * basis.adjoint();
  out.coherent = basis * (in_basis - diag) * basis.adjoint();
  return out;
}

CVector vec(const CMatrix& x) { return Eigen::Map<const CVector>(x.data(), x.size()); }

CMatrix unvec(const CVector& v, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  if (v.size() != n * n) fail(ErrorKind::InvalidInput, "unvec size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), n, n);
}

QuantumChannel::QuantumChannel(const CMatrix& superoperator, double tol)
    : super_(superoperator), dim_(dimension_of_superoperator(superoperator)) {
  const double defect = trace_defect(super_, dim_, 1.0);
  if (defect > tol) {
    std::ostringstream msg;
    msg << "channel is not trace preserving (defect " << defect << ")";
    fail(ErrorKind::InvalidInput, msg.str());
  }
}

QuantumChannel QuantumChannel::identity(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d * d);
  return QuantumChannel(CMatrix::Identity(n, n));
}

QuantumChannel QuantumChannel::from_kraus(const std::vector<CMatrix>& kraus) {
  if (kraus.empty()) fail(ErrorKind::InvalidInput, "Kraus list is empty");
  const Eigen::Index d = kraus.front().rows();
  CMatrix s = CMatrix::Zero(d * d, d * d);
  for (const auto& k : kraus) {
    if (k.rows() != d || k.cols() != d)
      fail(ErrorKind::InvalidInput, "Kraus operators must share one square shape");
    s += linalg::kron(k.conjugate(), k);
  }
  return QuantumChannel(s);
}

QuantumChannel QuantumChannel::depolarizing(std::size_t d, double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidInput, "depolarizing weight outside [0, 1]");
  const auto n = static_cast<Eigen::Index>(d);
  const CVector id = vec(CMatrix::Identity(n, n));
  return QuantumChannel((1.0 - p) * CMatrix::Identity(n * n, n * n) +
                        (p / static_cast<double>(d)) * id * id.transpose());
}

CMatrix QuantumChannel::apply(const CMatrix& rho) const {
  if (static_cast<std::size_t>(rho.rows()) != dim_ || rho.cols() != rho.rows())
    fail(ErrorKind::InvalidInput, "operator dimension does not match the channel");
  return unvec(super_ * vec(rho), dim_);
}

QuantumChannel QuantumChannel::extend_with_identity(std::size_t m) const {
  return QuantumChannel(extend_superoperator(super_, dim_, m));
}

QuantumChannel QuantumChannel::then(const QuantumChannel& next) const {
  if (next.dim_ != dim_) fail(ErrorKind::InvalidInput, "channel dimensions differ");
  return QuantumChannel(CMatrix(next.super_ * super_));
}

QuantumGenerator::QuantumGenerator(const CMatrix& superoperator, double tol)
    : super_(superoperator), dim_(dimension_of_superoperator(superoperator)) {
  const double scale = std::max(1.0, super_.cwiseAbs().maxCoeff());
  if (trace_defect(super_, dim_, 0.0) > tol * scale)
    fail(ErrorKind::InvalidGenerator, "generator does not annihilate the trace");
}

CMatrix QuantumGenerator::apply(const CMatrix& rho) const {
  if (static_cast<std::size_t>(rho.rows()) != dim_ || rho.cols() != rho.rows())
    fail(ErrorKind::InvalidInput, "operator dimension does not match the generator");
  return unvec(super_ * vec(rho), dim_);
}

QuantumChannel QuantumGenerator::first_order_map(double dt) const {
  const auto n = super_.rows();
  return QuantumChannel(CMatrix(CMatrix::Identity(n, n) + dt * super_));
}

QuantumChannel QuantumGenerator::exponential_map(double dt) const {
  const CMatrix scaled = dt * super_;
  return QuantumChannel(CMatrix(scaled.exp()));
}

QuantumGenerator QuantumGenerator::extend_with_identity(std::size_t m) const {
  return QuantumGenerator(extend_superoperator(super_, dim_, m));
}

RateMatrix QuantumGenerator::classical_rates(const CMatrix& basis) const {
  const auto n = static_cast<Eigen::Index>(dim_);
  if (basis.rows() != n || basis.cols() != n)
    fail(ErrorKind::InvalidInput, "basis dimension does not match the generator");
  Matrix r(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const CMatrix image = apply(basis.col(l) * basis.col(l).adjoint());
    const CMatrix in_basis = basis.adjoint() * image * basis;
    for (Eigen::Index k = 0; k < n; ++k) r(k, l) = in_basis(k, k).real();
  }
  // Remove the rounding residue of the column sums.
  for (Eigen::Index l = 0; l < n; ++l) r(l, l) -= r.col(l).sum();
  return RateMatrix(r);
}

QuantumGenerator semiclassical_lindbladian(const RateMatrix& rates) {
  const std::size_t d = rates.size();
  if (d > kMaxQuantumDimension) fail(ErrorKind::Resource, "operator dimension exceeds 16");
  const Matrix& r = rates.mat();
  return QuantumGenerator(superoperator_of(d, [&](const CMatrix& rho) {
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) {
        if (i == j) continue;
        const double a = r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (a == 0.0) continue;
        const CMatrix jump = unit(d, i, j);
        const CMatrix proj = unit(d, j, j);
        out += a * (jump * rho * jump.adjoint() - 0.5 * (proj * rho + rho * proj));
      }
    return out;
  }));
}

QuantumGenerator semiclassical_lindbladian(const RateMap& rates, std::size_t d) {
  for (const auto& [key, value] : rates)
    if (key.first >= d || key.second >= d || key.first == key.second)
      fail(ErrorKind::InvalidInput, "rate index out of range or on the diagonal");
  return semiclassical_lindbladian(RateMatrix::from_rates(d, rates));
}

CMatrix choi(const QuantumChannel& ch) {
  const std::size_t d = ch.dim();
  const auto n = static_cast<Eigen::Index>(d * d);
  CMatrix c = CMatrix::Zero(n, n);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t l = 0; l < d; ++l) {
      const CMatrix e = unit(d, j, l);
      c += linalg::kron(ch.apply(e), e);
    }
  return c / static_cast<double>(d);
}

CPCheck cp_check(const QuantumChannel& ch, double tol) {
  const CMatrix c = choi(ch);
  const double defect = hermitian_defect(c);
  if (defect > 1e-10) {
    std::ostringstream msg;
    msg << "Choi matrix is not Hermitian (defect " << defect << ")";
    fail(ErrorKind::ChannelRepresentation, msg.str());
  }
  const auto eig = linalg::hermitian_eigen(c);
  CPCheck out;
  out.min_eigenvalue = eig.values(0);
  out.min_eigenvector = eig.vectors.col(0);
  out.cp = out.min_eigenvalue >= -tol;
  return out;
}

CVector max_entangled(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  CVector psi = CVector::Zero(n * n);
  for (Eigen::Index j = 0; j < n; ++j) psi(j * n + j) = 1.0 / std::sqrt(static_cast<double>(d));
  return psi;
}

std::string_view to_string(MonotoneFunctionKind f) noexcept {
  switch (f) {
    case MonotoneFunctionKind::SLD: return "SLD";
    case MonotoneFunctionKind::KMB: return "KMB";
    case MonotoneFunctionKind::WY: return "WY";
  }
  return "unknown";
}

double monotone_function(MonotoneFunctionKind f, double x) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "monotone function needs x > 0");
  switch (f) {
    case MonotoneFunctionKind::SLD: return 0.5 * (1.0 + x);
    case MonotoneFunctionKind::KMB: {
      const double r = x - 1.0;
      if (std::abs(r) < 1e-8) return 1.0 + r / 2.0 - r * r / 12.0;
      return r / std::log(x);
    }
    case MonotoneFunctionKind::WY: {
      const double h = 0.5 * (1.0 + std::sqrt(x));
      return h * h;
    }
  }
  return 0.0;
}

double metric_kernel(MonotoneFunctionKind f, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) fail(ErrorKind::SingularBase, "metric kernel needs positive arguments");
  switch (f) {
    case MonotoneFunctionKind::SLD: return 2.0 / (x + y);
    case MonotoneFunctionKind::KMB: {
      const double r = (x - y) / y;
      if (std::abs(r) < 1e-8) return (1.0 - r / 2.0 + r * r / 3.0) / y;
      return std::log1p(r) / (r * y);
    }
    case MonotoneFunctionKind::WY: {
      const double s = std::sqrt(x) + std::sqrt(y);
      return 4.0 / (s * s);
    }
  }
  return 0.0;
}

double standardness_defect(MonotoneFunctionKind f) {
  double worst = std::abs(monotone_function(f, 1.0) - 1.0);
  for (int k = -40; k <= 40; ++k) {
    const double x = std::pow(10.0, k / 10.0);
    const double lhs = x * monotone_function(f, 1.0 / x);
    worst = std::max(worst, std::abs(lhs - monotone_function(f, x)) / monotone_function(f, x));
  }
  return worst;
}

double petz_metric(const CMatrix& rho, const CMatrix& a, const CMatrix& b, MonotoneFunctionKind f) {
  if (rho.rows() != a.rows() || rho.rows() != b.rows() || a.cols() != a.rows() ||
      b.cols() != b.rows() || rho.cols() != rho.rows())
    fail(ErrorKind::InvalidInput, "metric arguments have mismatched dimensions");
  const auto eig = linalg::hermitian_eigen(rho);
  if (eig.values(0) < kFullRank) {
    std::ostringstream msg;
    msg << "state is rank deficient (smallest eigenvalue " << eig.values(0) << ")";
    fail(ErrorKind::SingularBase, msg.str());
  }
  const CMatrix& u = eig.vectors;
  const CMatrix at = u.adjoint() * a * u;
  const CMatrix bt = u.adjoint() * b * u;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < rho.cols(); ++j)
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
      sum += (std::conj(at(i, j)) * bt(i, j)).real() * metric_kernel(f, eig.values(i), eig.values(j));
  return 0.5 * sum;
}

double petz_metric(const DensityMatrix& rho, const HermitianPerturbation& a,
                   const HermitianPerturbation& b, MonotoneFunctionKind f) {
  return petz_metric(rho.mat(), a.mat(), b.mat(), f);
}

DecompositionCheck diag_decomposition_check(const DensityMatrix& rho, const HermitianPerturbation& d,
                                            MonotoneFunctionKind f) {
  const auto eig = linalg::hermitian_eigen(rho.mat());
  if (eig.values(0) < kFullRank) fail(ErrorKind::SingularBase, "state is rank deficient");
  const PerturbationSplit split = split_in_basis(d.mat(), eig.vectors);
  DecompositionCheck out;
  out.cross_term = std::abs(petz_metric(rho.mat(), split.diagonal, split.coherent, f));
  const double whole = petz_metric(rho.mat(), d.mat(), d.mat(), f);
  const double diag = petz_metric(rho.mat(), split.diagonal, split.diagonal, f);
  const double coh = petz_metric(rho.mat(), split.coherent, split.coherent, f);
  out.additivity_defect = std::abs(whole - diag - coh);
  return out;
}

ReductionRate commuting_reduction_rate_check(const DensityMatrix& rho, const HermitianPerturbation& d,
                                             const QuantumGenerator& l, MonotoneFunctionKind f,
                                             double h) {
  const CMatrix& r = rho.mat();
  const CMatrix& x = d.mat();
  if (l.dim() != rho.dim() || d.dim() != rho.dim())
    fail(ErrorKind::InvalidInput, "state, perturbation and generator dimensions differ");
  const double scale = std::max(1.0, std::max(r.cwiseAbs().maxCoeff(), x.cwiseAbs().maxCoeff()));
  if ((r * x - x * r).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::InvalidPrecondition, "state and perturbation do not commute");
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "finite-difference step must be positive");

  ReductionRate out;
  const CMatrix dr = l.apply(r);
  const CMatrix dx = l.apply(x);
  const double plus = petz_metric(CMatrix(r + h * dr), CMatrix(x + h * dx), CMatrix(x + h * dx), f);
  const double minus = petz_metric(CMatrix(r - h * dr), CMatrix(x - h * dx), CMatrix(x - h * dx), f);
  out.quantum_rate = (plus - minus) / (2.0 * h);

  // A generic combination of two commuting Hermitian matrices has their
  // common eigenbasis.
  const auto eig = linalg::hermitian_eigen(CMatrix(r + 0.5772156649 * x));
  const CMatrix& u = eig.vectors;
  const CMatrix rt = u.adjoint() * r * u;
  const CMatrix xt = u.adjoint() * x * u;
  const ProbVec p(Vector(rt.diagonal().real()));
  const TangentVec dv = TangentVec::project(Vector(xt.diagonal().real()));
  out.classical_rate = fisher_rate(p, dv, l.classical_rates(u));
  out.deviation = std::abs(out.quantum_rate - out.classical_rate);
  return out;
}

SpecialPointReport special_point_check(const HermitianPerturbation& d) {
  const auto eig = linalg::hermitian_eigen(d.mat());
  const double largest = eig.values.cwiseAbs().maxCoeff();
  if (largest == 0.0) fail(ErrorKind::InvalidInput, "special point needs a nonzero perturbation");

  SpecialPointReport out;
  out.trace_norm = eig.values.cwiseAbs().sum();
  out.expected = 0.5 * out.trace_norm * out.trace_norm;
  const CMatrix& u = eig.vectors;
  out.base = u * eig.values.cwiseAbs().cast<Complex>().asDiagonal() * u.adjoint() / out.trace_norm;

  std::vector<Eigen::Index> support;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (std::abs(eig.values(k)) > 1e-14 * largest) support.push_back(k);
  out.full_rank = support.size() == static_cast<std::size_t>(eig.values.size());

  CMatrix base = out.base;
  CMatrix pert = d.mat();
  if (!out.full_rank) {
    CMatrix v(u.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = u.col(support[k]);
    base = v.adjoint() * out.base * v;
    pert = v.adjoint() * d.mat() * v;
  }
  for (std::size_t k = 0; k < kMonotoneKinds.size(); ++k) {
    out.values[k] = petz_metric(base, pert, pert, kMonotoneKinds[k]);
    out.max_defect = std::max(out.max_defect, std::abs(out.values[k] - out.expected));
  }
  return out;
}

QuantumWitnessReport quantum_thm1_witness(const QuantumChannel& intermediate, double mix, double eps) {
  if (!(mix > 0.0 && mix < 1.0)) fail(ErrorKind::InvalidInput, "mix-in weight must lie in (0, 1)");
  if (!(eps > 0.0 && eps < 0.5)) fail(ErrorKind::InvalidInput, "perturbation size must lie in (0, 0.5)");
  const std::size_t d = intermediate.dim();
  if (d * d > kMaxQuantumDimension)
    fail(ErrorKind::Resource, "system (x) reference exceeds dimension 16");

  const CPCheck check = cp_check(intermediate);
  if (check.cp) fail(ErrorKind::NotApplicable, "channel is completely positive; no witness applies");

  QuantumWitnessReport out;
  out.mix = mix;
  out.eps = eps;
  out.choi_min_eigenvalue = check.min_eigenvalue;
  out.psi = max_entangled(d);
  CVector v_perp = check.min_eigenvector - out.psi * out.psi.dot(check.min_eigenvector);
  if (v_perp.norm() < 1e-12)
    fail(ErrorKind::WitnessNotFound, "negative Choi eigenvector has no component orthogonal to psi+");
  out.v_perp = v_perp / v_perp.norm();

  const auto big = static_cast<Eigen::Index>(d * d);
  CMatrix seed(big, big + 2);
  seed.col(0) = out.psi;
  seed.col(1) = out.v_perp;
  seed.rightCols(big) = CMatrix::Identity(big, big);
  Eigen::HouseholderQR<CMatrix> qr(seed);
  CMatrix basis = qr.householderQ() * CMatrix::Identity(big, big);
  basis.col(0) = out.psi;
  basis.col(1) = out.v_perp;

  const CMatrix p_psi = out.psi * out.psi.adjoint();
  const CMatrix p_v = out.v_perp * out.v_perp.adjoint();
  const double floor = mix / static_cast<double>(big);
  out.rho = (1.0 - mix) * p_psi + floor * CMatrix::Identity(big, big);
  out.perturbation = eps * (p_v - p_psi);

  const QuantumChannel extended = intermediate.extend_with_identity(d);
  const QuantumGenerator step(CMatrix(extended.superoperator() - CMatrix::Identity(big * big, big * big)));
  const RateMatrix rates = step.classical_rates(basis);
  out.classical_rate = rates.rate(1, 0);

  Vector p = Vector::Constant(big, floor);
  p(0) += 1.0 - mix;
  Vector dv = Vector::Zero(big);
  dv(0) = -eps;
  dv(1) = eps;
  out.rate = fisher_rate(ProbVec(p), TangentVec(dv), rates);
  out.leading_coefficient = out.rate * floor * floor / (0.5 * eps * eps * p(0));

  // Independent check: central differences of the metric along
  // rho + tau G[rho], delta + tau G[delta].
  const CMatrix g_rho = step.apply(out.rho);
  const CMatrix g_delta = step.apply(out.perturbation);
  const double speed = std::max(g_rho.cwiseAbs().maxCoeff(), 1e-300);
  const double tau = 1e-3 * floor / speed;
  for (std::size_t k = 0; k < kMonotoneKinds.size(); ++k) {
    const auto f = kMonotoneKinds[k];
    const CMatrix xp = out.perturbation + tau * g_delta;
    const CMatrix xm = out.perturbation - tau * g_delta;
    const double plus = petz_metric(CMatrix(out.rho + tau * g_rho), xp, xp, f);
    const double minus = petz_metric(CMatrix(out.rho - tau * g_rho), xm, xm, f);
    out.fd_rates[k] = (plus - minus) / (2.0 * tau);
  }
  return out;
}

QuantumChannel dephased_filter(const ProbVec& pi, double eps1, double eps2) {
  if (!(eps1 >= 0.0 && eps1 <= 1.0) || !(eps2 >= 0.0 && eps2 <= 1.0))
    fail(ErrorKind::InvalidInput, "filter and dephasing weights must lie in [0, 1]");
  const std::size_t d = pi.size();
  const CMatrix pi_mat = pi.vec().cast<Complex>().asDiagonal();
  return QuantumChannel(superoperator_of(d, [&](const CMatrix& rho) {
    const CMatrix filtered = (1.0 - eps1) * rho.trace() * pi_mat + eps1 * rho;
    const CMatrix dephased = CMatrix(filtered.diagonal().asDiagonal());
    return CMatrix((1.0 - eps2) * dephased + eps2 * filtered);
  }));
}

QuantumNoGoReport quantum_nogo_check(const ProbVec& pi, const RateMatrix& rates, double eps1,
                                     double eps2, std::size_t samples, std::uint64_t seed,
                                     MonotoneFunctionKind f) {
  const std::size_t d = pi.size();
  if (rates.size() != d) fail(ErrorKind::InvalidInput, "rates and prior dimensions differ");
  QuantumNoGoReport out;

  const QuantumGenerator l = semiclassical_lindbladian(rates);
  const CPCheck cp = cp_check(l.exponential_map(1e-3));
  out.generator_cp = cp.cp;
  out.choi_min_eigenvalue = cp.min_eigenvalue;
  out.lambda_max_diagonal = ContractionForm(pi, rates).lambda_max();

  const QuantumChannel t = dephased_filter(pi, eps1, eps2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(d);
  auto random_hermitian = [&] {
    CMatrix g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = Complex(normal(rng), normal(rng));
    return CMatrix(0.5 * (g + g.adjoint()));
  };
  out.max_sampled_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    CMatrix a = random_hermitian();
    CMatrix rho0 = a * a.adjoint() + 1e-3 * CMatrix::Identity(n, n);
    rho0 /= rho0.trace();
    CMatrix x = random_hermitian();
    x -= x.trace() / static_cast<double>(d) * CMatrix::Identity(n, n);
    x *= 0.1 / x.cwiseAbs().maxCoeff();

    const CMatrix rho = t.apply(rho0);
    const CMatrix delta = t.apply(x);
    const CMatrix diag = CMatrix(delta.diagonal().asDiagonal());
    out.max_coherence_ratio = std::max(out.max_coherence_ratio, (delta - diag).norm() / (eps1 * x.norm()));

    const CMatrix g_rho = l.apply(rho);
    const CMatrix g_delta = l.apply(delta);
    const double h = 1e-7;
    const CMatrix xp = delta + h * g_delta;
    const CMatrix xm = delta - h * g_delta;
    const double rate = (petz_metric(CMatrix(rho + h * g_rho), xp, xp, f) -
                         petz_metric(CMatrix(rho - h * g_rho), xm, xm, f)) /
                        (2.0 * h);
    out.max_sampled_rate = std::max(out.max_sampled_rate, rate / (eps1 * eps1));
  }
  if (samples == 0) out.max_sampled_rate = 0.0;
  out.no_dilation = !out.generator_cp && out.lambda_max_diagonal < 0.0 &&
                    (samples == 0 || out.max_sampled_rate < 0.0);
  return out;
}

}  // namespace fisherflow
