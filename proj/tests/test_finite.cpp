#include <catch2/catch_amalgamated.hpp>

#include "asep/finite.hpp"
#include "asep/oracle.hpp"
#include "test_support.hpp"

using namespace asep;
using asep_test::single_particle_pmf;

namespace {
const ExactParams kP(Rational(7, 10));
const RealParams kPr = to_real(kP);
}  // namespace

TEST_CASE("transition_prob N=1 matches the jump-count series to 1e-10") {
  const ContourPlan plan = make_default_plan(kPr);
  for (double t : {0.5, 2.0})
    for (long d = -5; d <= 5; ++d) {
      const auto est = transition_prob(ParticleConfig({0}), ParticleConfig({d}), t, kP, plan);
      CHECK(std::abs(est.value - single_particle_pmf(d, t, kPr.p)) < 1e-10);
    }
}

TEST_CASE("transition_prob at t=0 is the indicator") {
  const ContourPlan plan = make_default_plan(kPr);
  ParticleConfig y({1, 3});
  CHECK(transition_prob(y, y, 0.0, kP, plan).value == Catch::Approx(1.0).margin(1e-10));
  CHECK(transition_prob(y, ParticleConfig({1, 4}), 0.0, kP, plan).value ==
        Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("transition_prob N=2 matches uniformization to 1e-8") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({1, 2});
  for (long a : {0L, 1L, 2L})
    for (long b : {3L, 4L}) {
      const ParticleConfig x({a, b});
      const auto formula = transition_prob(y, x, 0.5, ExactParams(Rational(7, 10)), plan);
      const auto oracle = exact_transition_prob(y, x, 0.5, kPr, 1e-12);
      CHECK(std::abs(formula.value - oracle.value) < 1e-8);
      CHECK(std::abs(formula.abs_error) < 1e-8);
    }
}

TEST_CASE("transition_prob caps and parameter domain") {
  const ContourPlan plan = make_default_plan(kPr);
  CHECK_THROWS_AS(transition_prob(ParticleConfig({0, 1, 2, 3, 4}),
                                  ParticleConfig({0, 1, 2, 3, 4}), 1.0, kP, plan),
                  resource_error);
  const ExactParams zero_p(Rational(0));
  CHECK_THROWS_AS(transition_prob(ParticleConfig({0}), ParticleConfig({1}), 1.0, zero_p,
                                  make_default_plan(RealParams(0.5))),
                  parameter_error);
}

TEST_CASE("thm1 with m=1 reduces to the single I_L integral") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 5});
  const BlockQuery q{1, 1, 2, 0.7};
  const auto general = block_prob_thm1(y, q, kP, plan);
  const Complex single = integral_IL(q.x, std::span<const long>(y.positions.data(), 3), q.L, q.t,
                                     kPr, plan.small, plan.eval_budget);
  const double expected = std::pow(kPr.p, 3) * single.real();  // p^{N(N-1)/2}, N=3
  CHECK(general.value == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("thm1 at L=N, m=1 equals the transition probability") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 5});
  for (long x : {1L, 2L}) {
    const BlockQuery q{x, 1, 3, 0.8};
    const auto block = block_prob_thm1(y, q, kP, plan);
    const auto trans = transition_prob(y, ParticleConfig({x, x + 1, x + 2}), 0.8, kP, plan);
    CHECK(std::abs(block.value - trans.value) < 1e-9);
  }
}

TEST_CASE("thm1 at t=0 is the indicator of the initial block") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 3});
  CHECK(block_prob_thm1(y, {2, 2, 2, 0.0}, kP, plan).value ==
        Catch::Approx(1.0).margin(1e-9));
  CHECK(block_prob_thm1(y, {2, 2, 1, 0.0}, kP, plan).value ==
        Catch::Approx(1.0).margin(1e-9));
  CHECK(block_prob_thm1(y, {0, 1, 2, 0.0}, kP, plan).value ==
        Catch::Approx(0.0).margin(1e-9));
  CHECK(block_prob_thm1(y, {3, 3, 1, 0.0}, kP, plan).value ==
        Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("thm2 equals thm1 at the spec instances") {
  const ContourPlan plan = make_default_plan(kPr);
  const ExactParams p06(Rational(3, 5));
  const ContourPlan plan06 = make_default_plan(to_real(p06));
  const ParticleConfig y({0, 2, 5});
  {
    const BlockQuery q{3, 2, 1, 1.0};
    const auto a = block_prob_thm1(y, q, p06, plan06);
    const auto b = block_prob_thm2(y, q, p06, plan06);
    CHECK(std::abs(a.value - b.value) < 1e-8);
  }
  {
    const BlockQuery q{3, 1, 2, 1.0};
    const auto a = block_prob_thm1(y, q, p06, plan06);
    const auto b = block_prob_thm2(y, q, p06, plan06);
    CHECK(std::abs(a.value - b.value) < 1e-8);
  }
  {
    const BlockQuery q{2, 2, 2, 0.0};  // t = 0 indicator through thm2
    CHECK(block_prob_thm2(y, q, kP, plan).value == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("m=2 direct two-term form agrees with thm1") {
  const ContourPlan plan = make_default_plan(kPr);
  {
    const ParticleConfig y({0, 2, 5});
    const BlockQuery q{3, 2, 1, 1.0};
    const auto direct = block_prob_m2_direct(y, q, kP, plan);
    const auto general = block_prob_thm1(y, q, kP, plan);
    CHECK(std::abs(direct.value - general.value) < 1e-9);
  }
  {
    ContourPlan small_plan = make_default_plan(kPr, 32);
    const ParticleConfig y({0, 2, 5, 7});
    const BlockQuery q{3, 2, 2, 0.6};
    const auto direct = block_prob_m2_direct(y, q, kP, small_plan);
    const auto general = block_prob_thm1(y, q, kP, small_plan);
    CHECK(std::abs(direct.value - general.value) < 1e-8);
  }
}

TEST_CASE("thm1 agrees with the uniformization oracle") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 5});
  for (int L : {1, 2})
    for (int m : {1, 2}) {
      const BlockQuery q{2, m, L, 0.9};
      const auto formula = block_prob_thm1(y, q, kP, plan);
      const auto oracle = exact_block_prob(y, q, kPr, 1e-12);
      CHECK(std::abs(formula.value - oracle.value) < 1e-6);
      CHECK(oracle.abs_error < 1e-9);
    }
}

TEST_CASE("block probabilities are real and in range") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 5});
  for (long x = -1; x <= 4; ++x) {
    const auto est = block_prob_thm1(y, {x, 1, 1, 0.5}, kP, plan);
    CHECK(est.abs_error < 1e-10);  // imaginary part folded in
    CHECK(est.value > -1e-8);
    CHECK(est.value < 1.0 + 1e-8);
  }
}

TEST_CASE("longer blocks are rarer: P(L=2) <= P(L=1)") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 1, 3});
  for (long x : {0L, 1L, 2L}) {
    const auto l1 = block_prob_thm1(y, {x, 1, 1, 0.6}, kP, plan);
    const auto l2 = block_prob_thm1(y, {x, 1, 2, 0.6}, kP, plan);
    CHECK(l2.value <= l1.value + 1e-9);
  }
}

TEST_CASE("thm1/thm2 parameter and domain errors") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2});
  CHECK_THROWS_AS(block_prob_thm1(y, {1, 2, 2, 0.5}, kP, plan), domain_error);  // m+L-1 > N
  CHECK_THROWS_AS(block_prob_thm1(ParticleConfig({0, 1, 2, 3, 4, 5}), {1, 1, 1, 0.5}, kP, plan),
                  resource_error);
  const ExactParams half(Rational(1, 2));
  CHECK_THROWS_AS(block_prob_thm2(y, {1, 1, 1, 0.5}, half, make_default_plan(to_real(half))),
                  parameter_error);  // tau = 1
  CHECK_THROWS_AS(block_prob_m2_direct(y, {1, 1, 1, 0.5}, kP, plan), domain_error);
}

TEST_CASE("thm1 normalization over the leftmost-particle window") {
  const ContourPlan plan = make_default_plan(kPr);
  const ParticleConfig y({0, 2, 5});
  const double t = 0.5;
  double total = 0.0;
  for (long x = y.positions.front() - 5; x <= y.positions.back(); ++x)
    total += block_prob_thm1(y, {x, 1, 1, t}, kP, plan).value;
  CHECK(total == Catch::Approx(1.0).margin(1e-6));
}
