#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fisherflow/errors.hpp"
#include "fisherflow/propagation.hpp"
#include "fisherflow/witnesses.hpp"
#include "oracles.hpp"

using namespace fisherflow;

namespace {
RateMatrix counterexample() { return RateMatrix::from_rates(2, {{{0, 1}, -0.5}, {{1, 0}, 1.0}}); }

Matrix with_negative_rate(std::mt19937_64& rng, int n, double value) {
  Matrix r = oracle::random_generator(rng, n, 0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  int i = pick(rng), j = pick(rng);
  while (j == i) j = pick(rng);
  r(i, j) = value;
  for (int c = 0; c < n; ++c) r(c, c) = 0.0;
  for (int c = 0; c < n; ++c) r(c, c) = -r.col(c).sum();
  return r;
}
}  // namespace

TEST_CASE("dilation search on the two-level counterexample") {
  const WitnessReport w = dilation_direction_search(counterexample());
  REQUIRE(w.found);
  CHECK(w.method == WitnessMethod::Thm1Ladder);
  CHECK(w.rate_value > 0.0);
  CHECK(w.epsilon_used <= 0.1);
  CHECK(w.offender->to == 0);
  CHECK(w.offender->from == 1);
  CHECK(reevaluate(w) == doctest::Approx(w.rate_value).epsilon(1e-10));
  // independent check along the exact flow
  CHECK(oracle::fisher_rate_fd(w.base.vec(), w.direction.vec(), counterexample().mat()) > 0.0);
}

TEST_CASE("dilation search: Markovian and case-study generators") {
  Matrix m(2, 2);
  m << -1, 0.5, 1, -0.5;
  CHECK_FALSE(dilation_direction_search(RateMatrix(m)).found);
  const Dynamics cs = Dynamics::case_study(std::numbers::pi);
  const WitnessReport w = dilation_direction_search(generator_of(cs, std::numbers::pi / 20));
  CHECK(w.found);
  CHECK(w.offender->to == 1);
  CHECK(reevaluate(w) == doctest::Approx(w.rate_value).epsilon(1e-10));
}

TEST_CASE("dilation search over random generators") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 500; ++k) {
    const int n = 2 + k % 5;
    const RateMatrix bad(with_negative_rate(rng, n, -1e-3 - 0.5 * std::uniform_real_distribution<double>(0, 1)(rng)));
    const WitnessReport w = dilation_direction_search(bad);
    REQUIRE(w.found);
    REQUIRE(w.rate_value > 0.0);
    REQUIRE(reevaluate(w) == doctest::Approx(w.rate_value).epsilon(1e-10));
    const RateMatrix good(oracle::random_generator(rng, n, 0.0, 1.0));
    REQUIRE_FALSE(dilation_direction_search(good).found);
  }
}

TEST_CASE("the fallback is used when the ladder is empty") {
  const WitnessReport w = dilation_direction_search(counterexample(), {}, 3, 200);
  CHECK(w.found);
  CHECK(w.method == WitnessMethod::FormSpectral);
  CHECK(w.seed == 3);
  CHECK(reevaluate(w) == doctest::Approx(w.rate_value).epsilon(1e-10));
}

TEST_CASE("no-go verification") {
  const ProbVec half{0.5, 0.5};
  const NoGoReport single = no_go_verify(half, counterexample(), 1, 0, half);
  CHECK(single.condition_met);
  CHECK(single.nonmarkovian);
  CHECK(single.lambda_max == doctest::Approx(-1.0));
  CHECK(single.no_dilation);

  for (std::size_t copies : {1u, 2u}) {
    for (std::size_t anc : {2u, 4u}) {
      const NoGoReport rep = no_go_verify(half, counterexample(), copies, anc, ProbVec::uniform(anc));
      CHECK(rep.dimension == (copies == 1 ? 2 : 4) * anc);
      // ancilla-only perturbations are exactly conserved
      CHECK(std::abs(rep.lambda_max) < 1e-12);
      CHECK(rep.lambda_max_active < -1e-3);
    }
  }

  // no-go soundness: sampling never beats the spectral bound
  const NoGoReport rep = no_go_verify(half, counterexample(), 2, 0, half);
  CHECK(rep.no_dilation);
  const ProbVec base = extended_state({2, 2, 0}, half, half);
  const RateMatrix ext = extended_generator({2, 2, 0}, counterexample());
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10000; ++k) {
    const TangentVec d(oracle::zero_sum(rng, 4));
    REQUIRE(fisher_rate(base, d, ext) <= 0.0);
  }

  const NoGoReport broken = no_go_verify(ProbVec{0.2, 0.8}, RateMatrix::from_rates(2, {{{0, 1}, -0.5}, {{1, 0}, 1.0}}), 1, 0, half);
  CHECK_FALSE(broken.condition_met);
  CHECK_FALSE(no_go_verify(half, RateMatrix::from_rates(2, {{{0, 1}, 0.5}, {{1, 0}, 1.0}}), 1, 0, half).condition_met);
}

TEST_CASE("special base points") {
  const SpecialPoint sp = special_base_point(TangentVec{0.3, -0.2, -0.1});
  CHECK(sp.interior);
  CHECK(sp.base[0] == doctest::Approx(0.5));
  CHECK(sp.base[1] == doctest::Approx(1.0 / 3.0));
  CHECK(sp.base[2] == doctest::Approx(1.0 / 6.0));
  CHECK(fisher_local_sq(sp.base, TangentVec{0.3, -0.2, -0.1}) == doctest::Approx(0.18));
  CHECK(special_base_point(TangentVec{0.7, -0.7}).base[0] == 0.5);
  CHECK_FALSE(special_base_point(TangentVec{0.1, -0.1, 0.0}).interior);
  CHECK_THROWS_AS(special_base_point(TangentVec{0.0, 0.0}), Error);

  std::mt19937_64 rng(13);
  for (int k = 0; k < 1000; ++k) {
    const TangentVec d(oracle::zero_sum(rng, 2 + k % 6));
    const SpecialPoint p = special_base_point(d);
    const double tr = d.vec().lpNorm<1>();
    REQUIRE(std::abs(fisher_local_sq(p.base, d) - 0.5 * tr * tr) <= 1e-12 * std::max(1.0, tr * tr));
  }
}

TEST_CASE("filter map") {
  const ProbVec pi{0.3, 0.7};
  CHECK(filter_map(pi, 1.0).mat() == Matrix::Identity(2, 2));
  const StochasticMatrix f = filter_map(ProbVec{0.5, 0.5}, 0.01);
  CHECK(trace_distance(f.apply(ProbVec{1.0, 0.0}), ProbVec{0.5, 0.5}) <= 0.01 + 1e-15);
  const ProbVec p{0.1, 0.9}, q{0.6, 0.4};
  const Vector diff = f.mat() * p.vec() - f.mat() * q.vec();
  CHECK((diff - 0.01 * (p.vec() - q.vec())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(filter_map(pi, 0.0), Error);
  CHECK_THROWS_AS(filter_map(pi, 1.5), Error);
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k)
    CHECK(validate_stochastic(filter_map(ProbVec(oracle::dirichlet(rng, 4)), 1e-3).mat()).passed);
}

TEST_CASE("filter witness on the extended counterexample") {
  const RateMatrix ext = extended_generator({2, 1, 2}, counterexample());
  Vector dv(4);
  dv << 0.0, 0.0, 0.1, -0.1;
  const TangentVec d(dv);
  const double target = 2.0 * 0.2 * trace_rate(d, ext).right_derivative;
  CHECK(target == doctest::Approx(0.08));
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const FilterRate fr = filter_witness_rate(d, ext, eps);
    CHECK(fr.regularized);
    CHECK(fr.value / (eps * eps) == doctest::Approx(0.08).epsilon(0.05));
  }
}

TEST_CASE("filter witness scaling and sign") {
  std::mt19937_64 rng(19);
  int compared = 0;
  for (int k = 0; k < 300; ++k) {
    const int n = 2 + k % 4;
    const Matrix r = k % 2 == 0 ? oracle::random_generator(rng, n, 0.0, 1.0)
                                : with_negative_rate(rng, n, -0.3);
    const TangentVec d(oracle::zero_sum(rng, n, 0.1));
    const ProbVec p(oracle::dirichlet(rng, n, 0.1));
    const double tr = trace_rate(d, RateMatrix(r)).value;
    const double v2 = filter_witness_rate(p, d, RateMatrix(r), 1e-2).value;
    const double v3 = filter_witness_rate(p, d, RateMatrix(r), 1e-3).value;
    if (k % 2 == 0) CHECK(v2 <= 0.0);
    if (std::abs(tr) > 1e-6) {
      ++compared;
      CHECK((v3 > 0.0) == (tr > 0.0));
      if (std::abs(tr) > 1e-3) CHECK(v2 / 1e-4 == doctest::Approx(v3 / 1e-6).epsilon(0.05));
    }
  }
  CHECK(compared > 250);
}

TEST_CASE("the moving special point does not change the rate") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 5;
    const TangentVec d(oracle::zero_sum(rng, n, 0.05));
    const RateMatrix r(oracle::random_generator(rng, n, -0.5, 1.0));
    const SpecialPointRate s = special_point_rate(d, r);
    CHECK(std::abs(s.frozen - s.unfrozen) < 1e-8);
    const double tr = d.vec().lpNorm<1>();
    CHECK(s.frozen == doctest::Approx(tr * trace_rate(d, r).value).epsilon(1e-10).scale(1e-12));
  }
}

TEST_CASE("trace distance witnesses with an ancilla or an extra state") {
  std::mt19937_64 rng(29);
  for (int k = 0; k < 10000; ++k) {
    const TangentVec d(oracle::zero_sum(rng, 2));
    REQUIRE(trace_rate(d, counterexample()).value <= 1e-15);
  }
  const WitnessReport anc = trace_ancilla_witness(counterexample(), AncillaMode::AncillaM2);
  CHECK(anc.found);
  CHECK(anc.rate_value == doctest::Approx(1.0));
  CHECK(reevaluate(anc) == anc.rate_value);
  const WitnessReport extra = trace_ancilla_witness(counterexample(), AncillaMode::ExtraState);
  CHECK(extra.found);
  CHECK(extra.rate_value > 0.0);
  Matrix m(2, 2);
  m << -1, 0.5, 1, -0.5;
  CHECK_FALSE(trace_ancilla_witness(RateMatrix(m), AncillaMode::AncillaM2).found);
  CHECK_FALSE(trace_ancilla_witness(RateMatrix(m), AncillaMode::ExtraState).found);

  // right derivative against a one-sided finite difference along exp(tR)
  const Matrix ext = anc.generator.mat();
  const double h = 1e-8;
  const double fd = ((oracle::expm(h * ext) * anc.direction.vec()).lpNorm<1>() - anc.direction.vec().lpNorm<1>()) / h;
  CHECK(anc.rate_value == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("two ancilla levels suffice for the filter witness") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 5;
    const RateMatrix r(with_negative_rate(rng, n, -0.01 - 0.5 * std::uniform_real_distribution<double>(0, 1)(rng)));
    const WitnessReport w = filter_ancilla_witness(r, 1e-3);
    REQUIRE(w.found);
    REQUIRE(reevaluate(w) == doctest::Approx(w.rate_value).epsilon(1e-10));
  }
}
