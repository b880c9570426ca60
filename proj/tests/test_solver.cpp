#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "svi/errors.hpp"
#include "svi/problem_io.hpp"
#include "svi/solver.hpp"
#include "test_support.hpp"

using namespace svi;
using std::numbers::pi;

namespace {

Vector v2(double a, double b) { return Vector{{a, b}}; }

SviProblem ex38() { return builtin_problem("ex38").svi(); }
SviProblem ex38_box() { return builtin_problem("ex38_box").svi(); }

Vector phi(double p) { return rotation(pi / 4.0 - p) * v2(1, 0); }

SolveInstance constant_instance() {
  SetMap G;
  G.in_dim = 2;
  G.out_dim = 2;
  G.value = [](const Vector&) { return VPolytope::singleton(v2(-1, -1)); };
  return SolveInstance{G, PolyCone::nonnegative_orthant(2), AllSpace{}, 0.0, 2.0, 0.0, false};
}

SolverConfig alpha_cfg(double alpha) {
  SolverConfig cfg;
  cfg.alpha = alpha;
  return cfg;
}

}  // namespace

TEST(CaristiStep, AcceptsFromOrigin) {
  const auto problem = ex38();
  const MeritOracle psi = [&](const Vector& x) { return merit(problem, 0.0, x); };
  const auto step = caristi_step(psi, v2(0, 0), 0.5, SolverConfig{});
  ASSERT_EQ(step.kind, StepKind::Accepted);
  EXPECT_LE(step.merit_u + 0.5 * step.u.norm(), std::sqrt(2.0) + 1e-12);
  EXPECT_NEAR(step.merit_u, psi(step.u), 1e-12);
}

TEST(CaristiStep, ConvergedAtSolution) {
  const auto problem = ex38();
  const MeritOracle psi = [&](const Vector& x) { return merit(problem, 1.0, x); };
  EXPECT_EQ(caristi_step(psi, phi(1.0), 0.5, SolverConfig{}).kind, StepKind::Converged);
}

TEST(CaristiStep, ConstantMeritHasNoDescent) {
  const MeritOracle psi = [](const Vector&) { return std::sqrt(2.0); };
  EXPECT_EQ(caristi_step(psi, v2(0, 0), 0.5, SolverConfig{}).kind, StepKind::NoDescentStep);
}

TEST(Solve, WorkedExampleFromOrigin) {
  const auto res = solve(ex38(), 1.0, v2(0, 0), alpha_cfg(1.5));
  EXPECT_LE(res.merit_final, 1e-8);
  EXPECT_LE(res.x_final.norm(), std::sqrt(2.0) / 0.5);
  EXPECT_TRUE(res.bound_holds);
  EXPECT_TRUE(res.converged);
  EXPECT_DOUBLE_EQ(res.descent_constant, 0.5);
}

TEST(Solve, StartingAtSolutionTakesNoSteps) {
  const auto res = solve(ex38(), 1.0, phi(1.0), alpha_cfg(1.5));
  EXPECT_EQ(res.iterations, 0u);
  EXPECT_EQ(res.path_length, 0.0);
  EXPECT_TRUE(res.converged);
}

TEST(Solve, ConstantInfeasibleMapFails) {
  EXPECT_THROW(solve(constant_instance(), v2(0, 0), alpha_cfg(1.5)), NoDescentStep);
}

TEST(Solve, ConfigErrors) {
  EXPECT_THROW(solve(ex38(), 0.0, v2(0, 0), alpha_cfg(1.0)), ConfigError);
  EXPECT_THROW(solve(ex38_box(), 0.0, v2(0, 0), alpha_cfg(50.0)), ConfigError);
  EXPECT_THROW(solve(ex38(), 0.0, Vector::Zero(3), SolverConfig{}), DimensionMismatch);
  SolverConfig bad;
  bad.radius_decay = 1.0;
  EXPECT_THROW(solve(ex38(), 0.0, v2(0, 0), bad), ConfigError);
}

TEST(Solve, ConstrainedDefaultsToIntervalMidpoint) {
  const auto res = solve(ex38_box(), 0.5, v2(3, -3), SolverConfig{});
  ASSERT_TRUE(res.constrained);
  const double lo = 0.5 * (res.alpha_tilde_used - res.ell_used + 1.0);
  const double hi = res.alpha_tilde_used - res.ell_used;
  EXPECT_NEAR(res.alpha_used, 0.5 * (lo + hi), 1e-12);
  EXPECT_NEAR(res.descent_constant, res.alpha_tilde_used - res.alpha_used - res.ell_used, 1e-12);
  EXPECT_LE(res.merit_final, 1e-8);
}

TEST(SegmentStep, Examples) {
  const ConstraintFamily box = Box{v2(0, 0), v2(1, 1), {}, {}};
  EXPECT_NEAR((segment_step(v2(2, 0), box, 0.0, 0.5) - v2(1.5, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(box.distance(0.0, segment_step(v2(2, 0), box, 0.0, 0.5)), 0.5, 1e-12);
  const ConstraintFamily ball = Ball{v2(0, 0), {}, 1.0, 0.0};
  const Vector u = segment_step(v2(0, 2), ball, 0.0, 1.0);
  EXPECT_NEAR((u - v2(0, 1)).norm(), 0.0, 1e-12);
  EXPECT_TRUE(ball.contains(0.0, u));
  EXPECT_THROW(segment_step(v2(0.5, 0.5), box, 0.0, 0.1), AlreadyFeasible);
}

TEST(DefaultAlpha, ClippedBelowOneAndAHalf) {
  EXPECT_DOUBLE_EQ(default_alpha(3.0), 1.5);
  EXPECT_NEAR(default_alpha(1.5), 1.35, 1e-12);
  EXPECT_GT(default_alpha(1.1), 1.0);
}

// ---- properties ----

TEST(SolverProperties, TelescopingCertificate) {
  test_support::Gen gen(83);
  for (int i = 0; i < 30; ++i) {
    const bool boxed = i % 2;
    const double p = gen.uniform(0.0, 2.0 * pi);
    const Vector x0 = gen.point(2, 2.5);
    const auto res = solve(boxed ? ex38_box() : ex38(), p, x0, SolverConfig{});
    if (!res.caristi_certified) continue;
    EXPECT_LE(res.path_length, (res.merit_x0 - res.merit_final) / res.descent_constant + 1e-9);
    EXPECT_LE((res.x_final - x0).norm(), res.merit_x0 / res.descent_constant + 1e-9);
  }
}

TEST(SolverProperties, MeritStrictlyDecreases) {
  test_support::Gen gen(89);
  for (int i = 0; i < 20; ++i) {
    const auto res = solve(i % 2 ? ex38_box() : ex38(), gen.uniform(0.0, 2.0 * pi), gen.point(2, 2.5),
                           SolverConfig{});
    for (std::size_t k = 1; k < res.merit_trace.size(); ++k) {
      EXPECT_LT(res.merit_trace[k], res.merit_trace[k - 1]);
    }
  }
}

TEST(SolverProperties, ConstrainedExitIsFeasible) {
  test_support::Gen gen(97);
  for (int i = 0; i < 20; ++i) {
    const double p = gen.uniform(0.0, 2.0 * pi);
    SolverConfig cfg;
    const auto res = solve(ex38_box(), p, gen.point(2, 4.0), cfg);
    ASSERT_LE(res.merit_final, cfg.tol);
    const double kappa = res.alpha_tilde_used - res.alpha_used;
    EXPECT_LE(res.psi_final, cfg.tol);
    EXPECT_LE(res.dist_final, cfg.tol / kappa);
    EXPECT_NEAR(res.psi_final, merit(ex38_box(), p, res.x_final), 1e-12);
    for (double r : res.segment_residuals) EXPECT_LE(r, 1e-9);
  }
}

TEST(SolverProperties, SameSeedSameIterates) {
  test_support::Gen gen(101);
  for (int i = 0; i < 5; ++i) {
    const double p = gen.uniform(0.0, 2.0 * pi);
    const Vector x0 = gen.point(2, 2.0);
    SolverConfig cfg;
    cfg.rng_seed = 42 + static_cast<std::uint64_t>(i);
    const auto a = solve(ex38_box(), p, x0, cfg);
    const auto b = solve(ex38_box(), p, x0, cfg);
    EXPECT_EQ(a.merit_trace, b.merit_trace);
    EXPECT_TRUE(same_entries(a.x_final, b.x_final));
  }
}
