#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "svi/errors.hpp"
#include "svi/increase.hpp"
#include "svi/problem_io.hpp"
#include "test_support.hpp"

using namespace svi;
using std::numbers::pi;
using std::numbers::sqrt2;

namespace {

Vector v2(double a, double b) { return Vector{{a, b}}; }

const PolyCone kOrthant = PolyCone::nonnegative_orthant(2);

SviProblem rotation_problem(double lambda) {
  return SviProblem{RotationScaled{lambda, false}, std::nullopt, std::nullopt, kOrthant, AllSpace{},
                    std::nullopt};
}

SetMap constant_map(const Vector& value) {
  SetMap G;
  G.in_dim = 2;
  G.out_dim = 2;
  G.value = [value](const Vector&) { return VPolytope::singleton(value); };
  return G;
}

// x ↦ {(|x − c|, |x − c|)} on the real line.
SetMap abs_pair(double c) {
  SetMap G;
  G.in_dim = 1;
  G.out_dim = 2;
  G.lipschitz = sqrt2;
  G.value = [c](const Vector& x) { return VPolytope::singleton(Vector::Constant(2, std::abs(x(0) - c))); };
  return G;
}

}  // namespace

TEST(CheckIncrease, AnalyticWitnessAccepted) {
  const double theta = 0.7;
  const auto G = map_at(rotation_problem(3.0), theta);
  const auto u = check_increase(G, kOrthant, v2(0, 0), 3.0 / sqrt2 + 1.0 - 1e-3, 1.0);
  ASSERT_TRUE(u.has_value());
  EXPECT_NEAR(u->norm(), 1.0, 1e-6);
  // The accepted witness must pass the inclusion itself.
  EXPECT_EQ(enlargement_inclusion(G.value(*u), 3.0 / sqrt2 + 1.0 - 1e-3,
                                  SumSet(G.value(v2(0, 0)), kOrthant), 1.0)
                .kind,
            InclusionKind::Holds);
}

TEST(CheckIncrease, TooLargeAlphaFails) {
  const auto G = map_at(rotation_problem(3.0), 0.7);
  EXPECT_FALSE(check_increase(G, kOrthant, v2(0, 0), 5.0, 1.0).has_value());
}

TEST(CheckIncrease, ConstantInfeasibleMapHasNoWitness) {
  const auto G = constant_map(v2(-1, -1));
  for (double alpha : {1.01, 1.5, 3.0}) {
    EXPECT_FALSE(check_increase(G, kOrthant, v2(0.3, 0.2), alpha, 0.5).has_value());
  }
}

TEST(EstimateBound, RotationBracket) {
  const auto est = estimate_bound(map_at(rotation_problem(3.0), 1.1), kOrthant, v2(0.3, -1.2));
  EXPECT_GE(est.alpha_lo, 3.07);
  EXPECT_LE(est.alpha_lo, 3.13);
  EXPECT_LE(est.alpha_lo, 3.0 / sqrt2 + 1.0);
  EXPECT_GE(est.alpha_hi, 3.0 / sqrt2 + 1.0);
}

TEST(EstimateBound, FiveRotationAtOrigin) {
  const auto est = estimate_bound(map_at(rotation_problem(5.0), 0.0), kOrthant, v2(0, 0));
  EXPECT_LE(est.alpha_lo, 5.0 / sqrt2 + 1.0);
  EXPECT_GE(est.alpha_hi, 5.0 / sqrt2 + 1.0);
  EXPECT_LE(est.alpha_hi - est.alpha_lo, 0.06);
}

TEST(EstimateBound, DecreaseOfAbsolutePair) {
  for (double x : {-1.0, -0.2, 0.4, 2.0}) {
    const auto est = estimate_bound(abs_pair(0.3), kOrthant, Vector::Constant(1, x), SamplingConfig{},
                                    IncreaseMode::Decrease);
    EXPECT_GE(est.alpha_lo, 2.0 - 0.05) << "x = " << x;
  }
}

TEST(EstimateBound, ConstantMapHasNoIncrease) {
  EXPECT_THROW(estimate_bound(constant_map(v2(-1, -1)), kOrthant, v2(0, 0)), PropertyAbsent);
}

TEST(GlobalInfimum, RotationPartOfWorkedExample) {
  SviProblem stripped = builtin_problem("ex38").svi();
  stripped.h.reset();
  stripped.fan.reset();
  const PointSampling xs{v2(-2, -2), v2(2, 2), 8};
  const auto inf = global_infimum(stripped, {0.0, 1.0, 2.0}, xs);
  EXPECT_NEAR(inf.value, 3.0 / sqrt2 + 1.0, 0.06);
  EXPECT_GT(inf.samples, 0u);
}

TEST(GlobalInfimum, FullWorkedExampleAbovePerturbedBound) {
  const auto problem = builtin_problem("ex38").svi();
  const PointSampling xs{v2(-2, -2), v2(2, 2), 8};
  const auto inf = global_infimum(problem, {0.0, 2.0, 4.0}, xs);
  EXPECT_GE(inf.value, perturbed_bound(3.0 / sqrt2 + 1.0, 0.5) - 0.1);
}

TEST(PerturbedBound, Examples) {
  EXPECT_NEAR(perturbed_bound(3.12132, 0.5), 1.56066, 1e-12);
  EXPECT_EQ(perturbed_bound(3.12132, 0.0), 3.12132);
  EXPECT_THROW(perturbed_bound(2.0, 0.6), HypothesisViolated);
}

TEST(SamplingConfigTest, Validation) {
  SamplingConfig cfg;
  cfg.radii = {0.5, 1.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SamplingConfig{};
  cfg.alpha_max = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// ---- properties ----

TEST(IncreaseProperties, WitnessesAreSoundAndNotSelf) {
  test_support::Gen gen(61);
  const auto problem = builtin_problem("ex38").svi();
  for (int i = 0; i < 10; ++i) {
    const double p = gen.uniform(0.0, 2.0 * pi);
    const Vector x = gen.point(2, 1.5);
    const auto G = map_at(problem, p);
    const auto est = estimate_bound(G, problem.cone, x);
    const SumSet target(G.value(x), problem.cone);
    const bool infeasible = merit(problem, p, x) > 1e-7;
    for (const auto& [r, u] : est.witnesses) {
      EXPECT_LE((u - x).norm(), r + 1e-12);
      EXPECT_EQ(enlargement_inclusion(G.value(u), est.alpha_lo * r, target, r).kind,
                InclusionKind::Holds);
      if (infeasible) EXPECT_GT((u - x).norm(), 0.0);
    }
  }
}

TEST(IncreaseProperties, PerturbedEstimatesStayAboveBound) {
  test_support::Gen gen(67);
  const auto problem = builtin_problem("ex38").svi();
  const auto G = map_at(problem, 0.0);
  const double bound = perturbed_bound(3.12132, 0.5) - 0.1;
  for (int i = 0; i < 20; ++i) {
    const Vector x{{gen.uniform(-2, 2), gen.uniform(-2, 2)}};
    EXPECT_GE(estimate_bound(G, problem.cone, x).alpha_lo, bound);
  }
}

TEST(IncreaseProperties, RefutationsSurviveDenserSampling) {
  test_support::Gen gen(71);
  for (int i = 0; i < 8; ++i) {
    const auto G = map_at(rotation_problem(3.0), gen.uniform(0.0, 2.0 * pi));
    const Vector x = gen.point(2, 1.0);
    SamplingConfig cfg;
    const auto est = estimate_bound(G, kOrthant, x, cfg);
    if (!est.refuting_radius) continue;
    SamplingConfig dense = cfg;
    dense.directions *= 4;
    dense.radii = {*est.refuting_radius};
    dense.adaptive_radius = false;
    EXPECT_FALSE(check_increase(G, kOrthant, x, est.alpha_hi, *est.refuting_radius, dense).has_value());
  }
}
