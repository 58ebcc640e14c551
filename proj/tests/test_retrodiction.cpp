#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fisherflow/errors.hpp"
#include "fisherflow/retrodiction.hpp"
#include "oracles.hpp"

using namespace fisherflow;

namespace {
Matrix relaxation() {
  Matrix r(2, 2);
  r << -1, 1, 1, -1;
  return r;
}
}  // namespace

TEST_CASE("Bayes inverse") {
  Matrix t(2, 2);
  t << 0.9, 0.2, 0.1, 0.8;
  const StochasticMatrix hat = bayes_inverse(StochasticMatrix(t), ProbVec{0.5, 0.5});
  CHECK(hat.mat()(0, 0) == doctest::Approx(9.0 / 11.0));
  CHECK(hat.mat()(0, 1) == doctest::Approx(1.0 / 9.0));
  CHECK(hat.mat()(1, 0) == doctest::Approx(2.0 / 11.0));
  CHECK(hat.mat()(1, 1) == doctest::Approx(8.0 / 9.0));
  CHECK(bayes_inverse(StochasticMatrix::identity(3), ProbVec{0.2, 0.3, 0.5}).mat() == Matrix::Identity(3, 3));

  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const StochasticMatrix tm(oracle::expm(oracle::random_generator(rng, 4, 0.0, 1.0)));
    const ProbVec pi(oracle::dirichlet(rng, 4, 0.01));
    const StochasticMatrix h = bayes_inverse(tm, pi);
    CHECK(validate_stochastic(h.mat(), 1e-12).passed);
    CHECK((h.mat() * tm.mat() * pi.vec() - pi.vec()).cwiseAbs().maxCoeff() < 1e-12);
    // Bayes rule: P(i at 0, j at t) is the same either way
    const Matrix joint_fwd = tm.mat() * pi.vec().asDiagonal();
    const Matrix joint_bwd = h.mat() * Vector(tm.mat() * pi.vec()).asDiagonal();
    CHECK((joint_fwd.transpose() - joint_bwd).cwiseAbs().maxCoeff() < 1e-14);
  }

  Matrix degenerate(2, 2);
  degenerate << 1, 1, 0, 0;
  try {
    bayes_inverse(StochasticMatrix(degenerate), ProbVec{0.5, 0.5});
    FAIL("expected an undefined-posterior error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedPosterior);
  }
}

TEST_CASE("context invariants") {
  const RetrodictionContext ctx(ProbVec{0.2, 0.4, 0.4}, Dynamics::case_study(std::numbers::pi), std::numbers::pi, 1023);
  CHECK(ctx.invariants().max_column_deviation < 1e-12);
  CHECK(ctx.invariants().most_negative_entry >= 0.0);
  CHECK(ctx.invariants().prior_recovery < 1e-10);
  CHECK(ctx.invariants().self_adjointness < 1e-10);
  CHECK(ctx.recovery(0) == Matrix::Identity(3, 3));
}

TEST_CASE("retrodiction distance") {
  const ProbVec half{0.5, 0.5};
  const RetrodictionContext ctx(half, Dynamics::constant(RateMatrix(relaxation()), 1.0), 1.0, 100);
  const double delta = 0.01;
  const ProbVec p0{0.5 + delta, 0.5 - delta};
  CHECK(retrodiction_distance_sq(p0, ctx, 0.0).value == 0.0);
  CHECK(retrodiction_distance_sq(half, ctx, 0.7).value == 0.0);
  const double expected = 2 * delta * delta * std::pow(1 - std::exp(-4 * 0.5), 2);
  CHECK(retrodiction_distance_sq(p0, ctx, 0.5).value == doctest::Approx(expected).epsilon(1e-9));
  CHECK_FALSE(retrodiction_distance_sq(p0, ctx, 0.5).large_perturbation);
  CHECK(retrodiction_distance_sq(ProbVec{0.9, 0.1}, ctx, 0.5).large_perturbation);
  CHECK(retrodiction_distance_sq(p0, ctx, 0.5, RetroMetricBase::InitialState).value ==
        doctest::Approx(expected * 0.25 / (0.51 * 0.49)).epsilon(1e-9));
}

TEST_CASE("adjoint identity") {
  const RetrodictionContext id(ProbVec{0.3, 0.7}, Dynamics::constant(RateMatrix::zero(2), 1.0), 1.0, 10);
  const AdjointCheck trivial = adjoint_identity_check(id, 0.5, 50);
  CHECK(trivial.max_deviation == 0.0);
  CHECK(trivial.self_adjointness == 0.0);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const RetrodictionContext ctx(ProbVec(oracle::dirichlet(rng, 4, 0.05)),
                                  Dynamics::constant(RateMatrix(oracle::random_generator(rng, 4, 0.0, 1.0)), 1.0), 1.0, 50);
    const AdjointCheck c = adjoint_identity_check(ctx, 0.6, 100, k);
    CHECK(c.max_deviation <= 1e-10);
    CHECK(c.self_adjointness <= 1e-10);
    CHECK(c.contraction_bound);
  }
}

TEST_CASE("Markovian recovery maps") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 4;
    const ProbVec pi(oracle::dirichlet(rng, n, 0.05));
    const RetrodictionContext ctx(pi, Dynamics::constant(RateMatrix(oracle::random_generator(rng, n, 0.0, 1.0)), 2.0), 2.0, 100);
    const ProbVec p0(Vector(pi.vec() + 1e-3 * oracle::zero_sum(rng, n).normalized()));
    double previous = 0.0;
    for (std::size_t i = 0; i < ctx.times().size(); ++i) {
      const double v = retrodiction_distance_sq(p0, ctx, ctx.times()[i]).value;
      REQUIRE(v >= previous - 1e-15);
      previous = v;
      if (i % 25 == 0) {
        const Vector spec = recovery_spectrum(ctx, i);
        REQUIRE(spec.minCoeff() >= -1e-10);
        REQUIRE(spec.maxCoeff() <= 1.0 + 1e-10);
      }
    }
  }
}

TEST_CASE("retrodiction backflow matches the contraction form") {
  const RetrodictionContext markov(ProbVec{0.3, 0.7}, Dynamics::constant(RateMatrix(relaxation()), 1.0), 1.0, 100);
  const Theorem4Report m = theorem4_check(markov, 0.5);
  CHECK(m.verdict == Verdict::Consistent);
  CHECK(m.b_eigenvalues.minCoeff() > 0.0);
  CHECK(m.lambda_max_at_image < 0.0);

  const RetrodictionContext frozen(ProbVec{0.3, 0.7}, Dynamics::constant(RateMatrix::zero(2), 1.0), 1.0, 10);
  const Theorem4Report z = theorem4_check(frozen, 0.5);
  CHECK(z.verdict == Verdict::Inconclusive);
  CHECK(z.consistent);
  CHECK(z.b_eigenvalues.cwiseAbs().maxCoeff() == 0.0);

  const RetrodictionContext cs(ProbVec{0.2, 0.4, 0.4}, Dynamics::case_study(std::numbers::pi), std::numbers::pi, 1023);
  int negative = 0;
  for (std::size_t k = 2; k + 2 < cs.times().size(); k += 7) {
    const Theorem4Report r = theorem4_check(cs, cs.times()[k]);
    CHECK(r.consistent);
    if (r.verdict == Verdict::Consistent && r.lambda_max_at_image > 0.0) {
      ++negative;
      CHECK_FALSE(r.negative_directions.empty());
      for (const auto& dir : r.negative_directions) CHECK(dir.negative);
    }
  }
  CHECK(negative > 0);
  // B pairs with the contraction form through T: -<d, B d>_pi = Q_{T pi}(T d)
  const double t = 0.8, h = 1e-5;
  const Matrix b = -(cs.recovery_at(t + h) - cs.recovery_at(t - h)) / (2 * h);
  const Matrix tm = cs.propagator_at(t);
  const Vector pi = cs.prior().vec();
  const Vector image = tm * pi;
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const Vector d = oracle::zero_sum(rng, 3);
    const double lhs = -0.5 * (d.array() * (b * d).array() / pi.array()).sum();
    const ContractionForm form(ProbVec(image), generator_of(cs.dynamics(), t));
    CHECK(lhs == doctest::Approx(form.evaluate(TangentVec::project(tm * d))).epsilon(1e-5));
  }
  CHECK(theorem4_check(cs, t).richardson_estimate < 1e-5);
}
