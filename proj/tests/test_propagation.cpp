#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fisherflow/distances.hpp"
#include "fisherflow/errors.hpp"
#include "fisherflow/propagation.hpp"
#include "oracles.hpp"

using namespace fisherflow;

namespace {
Matrix relaxation() {
  Matrix r(2, 2);
  r << -1, 1, 1, -1;
  return r;
}
}  // namespace

TEST_CASE("constant generator matches the matrix exponential") {
  const Dynamics dyn = Dynamics::constant(RateMatrix(relaxation()), 1.0);
  const Trajectory traj = propagate(dyn, 0.0, 1.0, 100);
  const Matrix& t1 = traj.propagators.back();
  const double e = std::exp(-2.0);
  CHECK(std::abs(t1(0, 0) - 0.5 * (1 + e)) < 1e-8);
  CHECK(std::abs(t1(1, 0) - 0.5 * (1 - e)) < 1e-8);
  CHECK(traj.richardson_estimate < 1e-6);
  CHECK(traj.propagators.front() == Matrix::Identity(2, 2));

  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const Matrix r = oracle::random_generator(rng, 4, 0.0, 2.0);
    const Trajectory tr = propagate(Dynamics::constant(RateMatrix(r), 2.0), 0.0, 2.0, 200);
    for (std::size_t i = 0; i < tr.times.size(); i += 37)
      CHECK((tr.propagators[i] - oracle::expm(tr.times[i] * r)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(tr.most_negative_entry >= -1e-9);
  }
}

TEST_CASE("zero generator keeps the identity") {
  const Trajectory traj = propagate(Dynamics::constant(RateMatrix::zero(3), 1.0), 0.0, 1.0, 10);
  for (const Matrix& t : traj.propagators) CHECK(t == Matrix::Identity(3, 3));
}

TEST_CASE("coarse grids fail the step-size check") {
  Matrix r = 50.0 * relaxation();
  try {
    propagate(Dynamics::constant(RateMatrix(r), 10.0), 0.0, 10.0, 5);
    FAIL("expected an accuracy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IntegrationAccuracy);
  }
}

TEST_CASE("case-study closed form agrees with RK4 on its generator") {
  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const Dynamics gen = Dynamics::generator_driven(
      3, [&cs](double t) { return cs.generator_matrix(t); }, std::numbers::pi);
  const Trajectory exact = propagate(cs, 0.0, 1.0, 1000);
  const Trajectory rk = propagate(gen, 0.0, 1.0, 1000);
  for (std::size_t k = 0; k < exact.times.size(); k += 50) {
    const double t = exact.times[k];
    const Matrix closed = std::exp(-t) * Matrix::Identity(3, 3) +
                          (1 - std::exp(-t)) * case_study::attractor(t) * Vector::Ones(3).transpose();
    CHECK((exact.propagators[k] - closed).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((exact.propagators[k] - rk.propagators[k]).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(validate_stochastic(exact.propagators[k], 1e-14).passed);
  }
}

TEST_CASE("intermediate maps") {
  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const Trajectory traj = propagate(cs, 0.0, 1.0, 1000);
  const IntermediateMap same = intermediate_map(traj, 0.4, 0.4);
  CHECK((same.map - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix a = intermediate_map(traj, 0.2, 0.7).map;
  const Matrix b = intermediate_map(traj, 0.0, 0.2).map;
  const Matrix c = intermediate_map(traj, 0.0, 0.7).map;
  CHECK((a * b - c).cwiseAbs().maxCoeff() < 1e-8);

  const IntermediateMap step = intermediate_map(traj, 0.1, 0.101);
  CHECK_FALSE(step.s.snapped);
  const Matrix expected = Matrix::Identity(3, 3) + 1e-3 * generator_of(cs, 0.1).mat();
  CHECK((step.map - expected).cwiseAbs().maxCoeff() < 1e-5);

  const IntermediateMap off = intermediate_map(traj, 0.10004, 0.5);
  CHECK(off.s.snapped);
  CHECK(off.s.time == doctest::Approx(0.1));

  // near pi/20 the intermediate map is not stochastic
  const IntermediateMap bad = intermediate_map(traj, 0.15, 0.16);
  CHECK_FALSE(bad.report.passed);
}

TEST_CASE("near-singular propagators are refused") {
  Matrix r(2, 2);
  r << -40, 40, 40, -40;
  const Trajectory traj = propagate(Dynamics::constant(RateMatrix(r), 1.0), 0.0, 1.0, 4000);
  try {
    intermediate_map(traj, 1.0, 1.0);
    FAIL("expected a near-singular error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NearSingular);
  }
}

TEST_CASE("generators") {
  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const double t = std::numbers::pi / 20;
  const RateMatrix r = generator_of(cs, t);
  const double expected = 1.0 / 6.0 - (1.0 - std::exp(-t)) * 5.0 / 3.0;
  CHECK(r.rate(1, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.rate(1, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-0.0757).epsilon(1e-3));
  const RateMatrix fd = generator_from_propagators(cs, t);
  CHECK((fd.mat() - r.mat()).cwiseAbs().maxCoeff() < 1e-5);

  // mixing-family rate formula a_{i<-j} = s'/(1-s) m_i + s m'_i
  const MixingFamily* f = cs.mixing_family();
  for (double tt : {0.05, 0.4, 1.3, 2.9}) {
    const RateMatrix g = generator_of(cs, tt);
    const Vector col = f->s_dot(tt) / (1 - f->s(tt)) * f->m(tt) + f->s(tt) * f->m_dot(tt);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) CHECK(g.rate(i, j) == doctest::Approx(col(static_cast<Eigen::Index>(i))));
    CHECK((generator_from_propagators(cs, tt).mat() - g.mat()).cwiseAbs().maxCoeff() < 1e-5);
  }

  std::mt19937_64 rng(2);
  const Matrix rc = oracle::random_generator(rng, 4, 0.0, 1.0);
  const Dynamics c = Dynamics::constant(RateMatrix(rc), 1.0);
  CHECK((generator_from_propagators(c, 0.5).mat() - rc).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((generator_from_propagators(c, 0.0).mat() - rc).cwiseAbs().maxCoeff() < 1e-5);

  MixingFamily sat;
  sat.s = [](double t) { return std::min(1.0, t); };
  sat.s_dot = [](double t) { return t < 1.0 ? 1.0 : 0.0; };
  sat.m = [](double) { return Vector(Vector::Constant(2, 0.5)); };
  sat.m_dot = [](double) { return Vector(Vector::Zero(2)); };
  const Dynamics saturating = Dynamics::mixing(2, sat, 2.0);
  try {
    generator_of(saturating, 1.5);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("mixing families are validated") {
  MixingFamily f;
  f.s = [](double t) { return 0.5 - 0.5 * std::cos(t); };
  f.s_dot = [](double t) { return 0.5 * std::sin(t); };
  f.m = [](double) { return Vector(Vector::Constant(2, 0.5)); };
  f.m_dot = [](double) { return Vector(Vector::Zero(2)); };
  CHECK_NOTHROW(Dynamics::mixing(2, f, 3.0));
  CHECK_THROWS_AS(Dynamics::mixing(2, f, 4.0), Error);  // s decreases after pi
  f.m = [](double) { return Vector(Vector::Constant(2, 0.6)); };
  CHECK_THROWS_AS(Dynamics::mixing(2, f, 3.0), Error);
}

TEST_CASE("divisibility scans") {
  const Dynamics markov = Dynamics::constant(RateMatrix(relaxation()), 1.0);
  CHECK(divisibility_scan(markov, linspace(0.0, 1.0, 50)).markovian());

  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const ScanResult scan = divisibility_scan(cs, linspace(0.0, std::numbers::pi, 1024));
  CHECK_FALSE(scan.markovian());
  CHECK(scan.refined_consistent);
  bool covered = false;
  for (const ScanWindow& w : scan.windows)
    covered = covered || (w.begin <= std::numbers::pi / 20 && std::numbers::pi / 20 <= w.end);
  CHECK(covered);
  const ScanResult fd = divisibility_scan(cs, linspace(0.0, std::numbers::pi, 257), 1e-9, true, false);
  const ScanResult exact = divisibility_scan(cs, linspace(0.0, std::numbers::pi, 257), 1e-9, false, false);
  CHECK(fd.windows.size() == exact.windows.size());

  const Dynamics fixed = Dynamics::contraction_to_prior(ProbVec{0.2, 0.3, 0.5}, 0.1, 5.0);
  CHECK(divisibility_scan(fixed, linspace(0.0, 5.0, 200)).markovian());
}

TEST_CASE("trace distance scales with the mixing parameter") {
  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const ProbVec p0{0.2, 0.4, 0.4};
  const ProbVec q0{0.2, 0.401, 0.399};
  const auto grid = linspace(0.0, std::numbers::pi, 1024);
  CHECK(trace_scaling_check(cs, p0, q0, grid) <= 1e-8);
  CHECK(trace_scaling_check(cs, p0, p0, grid) == 0.0);
  for (double t : {0.3, 1.7}) {
    const Matrix tm = cs.propagator(t);
    CHECK((tm * (q0.vec() - p0.vec())).lpNorm<1>() == doctest::Approx(std::exp(-t) * 0.002).epsilon(1e-9));
  }

  MixingFamily still;
  still.s = [](double) { return 0.0; };
  still.s_dot = [](double) { return 0.0; };
  still.m = [](double) { return Vector(Vector::Constant(2, 0.5)); };
  still.m_dot = [](double) { return Vector(Vector::Zero(2)); };
  const Dynamics frozen = Dynamics::mixing(2, still, 1.0);
  CHECK(trace_scaling_check(frozen, ProbVec{0.1, 0.9}, ProbVec{0.6, 0.4}, linspace(0.0, 1.0, 11)) == 0.0);
}
