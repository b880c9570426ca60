#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "svi/errors.hpp"
#include "svi/geometry.hpp"
#include "test_support.hpp"

using namespace svi;

namespace {

const PolyCone kOrthant = PolyCone::nonnegative_orthant(2);

Vector v2(double a, double b) { return Vector{{a, b}}; }

}  // namespace

TEST(Projection, NegativePointClipsToOrigin) {
  const auto pr = project_dist(v2(-1, -1), SumSet::of_cone(kOrthant));
  EXPECT_NEAR(pr.point.norm(), 0.0, 1e-12);
  EXPECT_NEAR(pr.distance, std::sqrt(2.0), 1e-12);
}

TEST(Projection, PointInsideConeIsFixed) {
  const auto pr = project_dist(v2(2, 3), SumSet::of_cone(kOrthant));
  EXPECT_NEAR((pr.point - v2(2, 3)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(pr.distance, 0.0, 1e-12);
}

TEST(Projection, WedgeConeAgreesWithGridMinimisation) {
  const PolyCone wedge({v2(1, 1), v2(1, -1)});
  const Vector y = v2(-1, 0);
  double grid_best = 1e300;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Vector z = (i / 100.0) * v2(1, 1) + (j / 100.0) * v2(1, -1);
      grid_best = std::min(grid_best, (y - z).norm());
    }
  }
  const auto pr = project_dist(y, SumSet::of_cone(wedge));
  EXPECT_NEAR(pr.distance, 1.0, 1e-12);
  EXPECT_NEAR(pr.distance, grid_best, 1e-9);
  EXPECT_NEAR(pr.point.norm(), 0.0, 1e-12);
}

TEST(Projection, DimensionMismatchThrows) {
  EXPECT_THROW(project_dist(Vector::Zero(3), SumSet::of_cone(kOrthant)), DimensionMismatch);
}

TEST(Excess, WorstVertexDominates) {
  EXPECT_NEAR(excess(VPolytope({v2(1, 1), v2(-1, 0)}), SumSet::of_cone(kOrthant)), 1.0, 1e-12);
}

TEST(Excess, ContainedPolytopeHasZeroExcess) {
  EXPECT_NEAR(excess(VPolytope({v2(1, 2), v2(3, 1)}), SumSet::of_cone(kOrthant)), 0.0, 1e-12);
}

TEST(Hausdorff, Examples) {
  const VPolytope A({v2(0, 0), v2(1, 0)});
  EXPECT_NEAR(hausdorff(A, A), 0.0, 1e-12);
  EXPECT_NEAR(hausdorff(VPolytope::singleton(v2(0, 0)), VPolytope::singleton(v2(3, 4))), 5.0, 1e-12);
  // Dense sampling of the segment against the point (0,1) for the one-sided excesses.
  const VPolytope B = VPolytope::singleton(v2(0, 1));
  double sampled = 0.0;
  for (int i = 0; i <= 1000; ++i) sampled = std::max(sampled, (v2(i / 1000.0, 0) - v2(0, 1)).norm());
  EXPECT_NEAR(hausdorff(A, B), sampled, 1e-12);
  EXPECT_NEAR(hausdorff(A, B), std::sqrt(2.0), 1e-12);
}

TEST(EnlargementInclusion, TightRotationCase) {
  const double a = 3.0 / std::numbers::sqrt2;
  const auto verdict = enlargement_inclusion(VPolytope::singleton(v2(a, a)), a + 1.0,
                                             SumSet::of_cone(kOrthant), 1.0);
  EXPECT_EQ(verdict.kind, InclusionKind::Holds);
  EXPECT_NEAR(verdict.worst_distance, 1.0, 1e-9);
}

TEST(EnlargementInclusion, DeepInterior) {
  EXPECT_EQ(enlargement_inclusion(VPolytope::singleton(v2(5, 5)), 0.1, SumSet::of_cone(kOrthant), 1.0).kind,
            InclusionKind::Holds);
}

TEST(EnlargementInclusion, FailureCarriesWitness) {
  const auto verdict =
      enlargement_inclusion(VPolytope::singleton(v2(-2, 0)), 0.5, SumSet::of_cone(kOrthant), 1.0);
  ASSERT_EQ(verdict.kind, InclusionKind::FailsWithWitness);
  EXPECT_NEAR((verdict.witness - v2(-2.5, 0)).norm(), 0.0, 1e-6);
  EXPECT_NEAR(verdict.worst_distance, 2.5, 1e-9);
}

TEST(PolyConeTest, PointednessAndValidation) {
  EXPECT_TRUE(kOrthant.pointed());
  EXPECT_FALSE(PolyCone({v2(1, 0), v2(-1, 0), v2(0, 1)}).pointed());
  EXPECT_THROW(PolyCone({v2(0, 0)}), InvalidArgument);
  EXPECT_THROW(PolyCone({v2(1, 0), v2(-1, 0), v2(0, 1), v2(0, -1)}), InvalidArgument);
}

TEST(VPolytopeTest, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(VPolytope(std::vector<Vector>{}), InvalidArgument);
  EXPECT_THROW(VPolytope({v2(std::nan(""), 0)}), InvalidArgument);
}

// ---- properties over random polytopes and cones ----

TEST(GeometryProperties, ExcessIsAttainedAtVertices) {
  test_support::Gen gen(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = trial % 2 ? 3 : 2;
    const auto A = gen.polytope(m, 8);
    const auto C = gen.cone(m);
    const ConvexBody D(SumSet::of_cone(C));
    const double exc = excess(A, D);
    double sampled = 0.0;
    for (const auto& v : A.vertices()) sampled = std::max(sampled, D.distance(v));
    for (int s = 0; s < 2000; ++s) sampled = std::max(sampled, D.distance(gen.convex_combination(A)));
    EXPECT_NEAR(sampled, exc, 1e-6);
  }
}

TEST(GeometryProperties, AddingConeElementsNeverIncreasesExcess) {
  test_support::Gen gen(202);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = trial % 2 ? 3 : 2;
    const auto A = gen.polytope(m, 6);
    const auto C = gen.cone(m);
    const SumSet D = SumSet::of_cone(C);
    const double exc = excess(A, D);
    std::vector<Vector> shifted, with_base = A.vertices();
    for (const auto& v : A.vertices()) {
      Vector y = v;
      for (const auto& g : C.generators()) y += gen.uniform(0.0, 3.0) * g;
      shifted.push_back(y);
      with_base.push_back(y);
    }
    EXPECT_LE(excess(VPolytope(shifted), D), exc + 1e-9);
    EXPECT_NEAR(excess(VPolytope(with_base), D), exc, 1e-9);
  }
}

TEST(GeometryProperties, EnlargementExcessAddsRadius) {
  test_support::Gen gen(303);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = trial % 2 ? 3 : 2;
    const auto A = gen.polytope(m, 6);
    const SumSet D = SumSet::of_cone(gen.cone(m));
    const double exc = excess(A, D);
    if (exc <= 1e-6) continue;
    ++checked;
    const double s = gen.uniform(0.05, 1.0);
    const EnlargementTarget target(D);
    double lo = 0.0, hi = exc + s + 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (enlargement_inclusion(A, s, target, mid).kind == InclusionKind::Holds ? hi : lo) = mid;
    }
    EXPECT_NEAR(hi, exc + s, 1e-6);
  }
  EXPECT_GT(checked, 20);
}

TEST(GeometryProperties, ProjectionIsIdempotent) {
  test_support::Gen gen(404);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = trial % 2 ? 3 : 2;
    const SumSet S(gen.polytope(m, 5), gen.cone(m));
    const auto pr = project_dist(gen.point(m, 4.0), S);
    EXPECT_LE(project_dist(pr.point, S).distance, 1e-9);
  }
}

TEST(GeometryProperties, HoldsVerdictSurvivesBruteForce) {
  test_support::Gen gen(505);
  int holds = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = trial % 2 ? 3 : 2;
    const auto A = gen.polytope(m, 4);
    const SumSet D = SumSet::of_cone(gen.cone(m));
    const double s = gen.uniform(0.05, 0.8);
    const double r = excess(A, D) + s + gen.uniform(-0.05, 0.05);
    const auto verdict = enlargement_inclusion(A, s, D, r);
    if (verdict.kind != InclusionKind::Holds) continue;
    ++holds;
    const ConvexBody body(D);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const Vector u = gen.unit(m) * s * std::pow(gen.uniform(0.0, 1.0), 1.0 / static_cast<double>(m));
      worst = std::max(worst, body.distance(gen.convex_combination(A) + u));
    }
    EXPECT_LE(worst, r + 1e-7);
  }
  EXPECT_GT(holds, 10);
}
