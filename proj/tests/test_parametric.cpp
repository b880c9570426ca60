#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "svi/errors.hpp"
#include "svi/parametric.hpp"
#include "svi/problem_io.hpp"

using namespace svi;
using std::numbers::pi;

namespace {

Vector v2(double a, double b) { return Vector{{a, b}}; }

SviProblem ex38() { return builtin_problem("ex38").svi(); }

SweepTable path_table(const std::vector<double>& grid, const std::function<Vector(double)>& x) {
  SweepTable t;
  for (double p : grid) {
    SweepRow row;
    row.p = p;
    row.x = x(p);
    row.solved = true;
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST(Sweep, WorkedExampleAllSolved) {
  const auto table = sweep(ex38(), linspace(0.0, 2.0 * pi, 65), v2(0, 0), SolverConfig{});
  ASSERT_EQ(table.rows.size(), 65u);
  for (const auto& row : table.rows) {
    EXPECT_TRUE(row.solved) << "p = " << row.p;
    EXPECT_LE(row.merit, 1e-8);
  }
}

TEST(Sweep, SinglePointMatchesSolve) {
  const auto table = sweep(ex38(), {0.8}, v2(0, 0), SolverConfig{});
  const auto res = solve(ex38(), 0.8, v2(0, 0), SolverConfig{});
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_TRUE(same_entries(table.rows[0].x, res.x_final));
  EXPECT_EQ(table.rows[0].merit, res.merit_final);
  EXPECT_EQ(table.rows[0].bound_rhs, res.bound_rhs);
}

TEST(Sweep, RejectsBadGrids) {
  EXPECT_THROW(sweep(ex38(), {}, v2(0, 0), SolverConfig{}), ConfigError);
  EXPECT_THROW(sweep(ex38(), {1.0, 0.5}, v2(0, 0), SolverConfig{}), ConfigError);
}

TEST(Grid, ParseAndLinspace) {
  const auto g = parse_grid("0:1:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NEAR(g[1], 0.25, 1e-15);
  EXPECT_EQ(linspace(2.0, 3.0, 1), std::vector<double>{2.0});
  EXPECT_THROW(parse_grid("0:1"), ConfigError);
  EXPECT_THROW(parse_grid("0:x:3"), ConfigError);
  EXPECT_THROW(parse_grid("1:0:3"), ConfigError);
  EXPECT_THROW(parse_grid("0:1:0"), ConfigError);
}

TEST(Csv, HeaderIsPinned) {
  EXPECT_EQ(csv_header(2), "p,x_1,x_2,merit,bound_rhs,bound_holds,solved");
  EXPECT_EQ(csv_header(1, {"val_1", "val_2"}), "p,x_1,merit,bound_rhs,bound_holds,solved,val_1,val_2");
  const auto table = sweep(ex38(), {0.0, 1.0}, v2(0, 0), SolverConfig{});
  std::ostringstream os;
  write_csv(table, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "p,x_1,x_2,merit,bound_rhs,bound_holds,solved");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 2u);
}

TEST(Continuity, ConstantPath) {
  const auto t = path_table(linspace(0.0, 1.0, 11), [](double) { return v2(0.3, 0.4); });
  EXPECT_EQ(continuity_report(t).max_step_ratio, 0.0);
}

TEST(Continuity, UnitSpeedCurve) {
  const auto t = path_table(linspace(0.0, 2.0 * pi, 2001),
                            [](double p) { return Vector(rotation(pi / 4.0 - p) * v2(1, 0)); });
  EXPECT_NEAR(continuity_report(t).max_step_ratio, 1.0, 1e-5);
}

TEST(Continuity, InjectedJumpIsFlagged) {
  auto t = path_table(linspace(0.0, 1.0, 11), [](double p) { return v2(p * 0.1, 0.0); });
  for (std::size_t i = 5; i < t.rows.size(); ++i) t.rows[i].x(1) += 1.0;
  const auto rep = continuity_report(t);
  ASSERT_EQ(rep.discontinuity_flags.size(), 1u);
  EXPECT_EQ(rep.discontinuity_flags[0], 5u);
  EXPECT_NEAR(rep.max_step_ratio, std::hypot(1.0, 0.01) / 0.1, 1e-9);
}

TEST(Continuity, UnsolvedRunsAndTooFewRows) {
  auto t = path_table(linspace(0.0, 1.0, 6), [](double) { return v2(0, 0); });
  t.rows[2].solved = t.rows[3].solved = false;
  const auto rep = continuity_report(t);
  ASSERT_EQ(rep.unsolved_runs.size(), 1u);
  EXPECT_NEAR(rep.unsolved_runs[0].first, 0.4, 1e-12);
  EXPECT_NEAR(rep.unsolved_runs[0].second, 0.6, 1e-12);
  t.rows.resize(1);
  EXPECT_THROW(continuity_report(t), TooFewRows);
}

// ---- properties ----

TEST(SweepProperties, WarmStartNeedsNoMoreIterations) {
  const auto grid = linspace(0.0, 2.0 * pi, 65);
  SweepOptions cold;
  cold.warm_start = false;
  const auto warm = sweep(ex38(), grid, v2(0, 0), SolverConfig{});
  const auto cold_t = sweep(ex38(), grid, v2(0, 0), SolverConfig{}, cold);
  EXPECT_LE(warm.total_iterations(), cold_t.total_iterations());
}

TEST(SweepProperties, RowsRespectTheirErrorBound) {
  const SolverConfig cfg;
  for (bool warm : {true, false}) {
    SweepOptions opts;
    opts.warm_start = warm;
    const auto table = sweep(ex38(), linspace(0.0, 2.0 * pi, 65), v2(0.5, -1.0), cfg, opts);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      ASSERT_TRUE(row.solved);
      EXPECT_LE((row.x - row.x_start).norm(), row.bound_rhs + cfg.tol);
      EXPECT_TRUE(row.bound_holds);
      if (warm && i > 0) EXPECT_TRUE(same_entries(row.x_start, table.rows[i - 1].x));
      if (i > 0) EXPECT_LT(table.rows[i - 1].p, row.p);
    }
  }
}

TEST(SweepProperties, RefinementKeepsClassificationAndApproachesLimit) {
  auto ratio = [](std::size_t n, bool& all_solved) {
    const auto t = sweep(ex38(), linspace(0.0, 2.0 * pi, n), v2(0, 0), SolverConfig{});
    for (const auto& r : t.rows) all_solved = all_solved && r.solved;
    return continuity_report(t).max_step_ratio;
  };
  bool solved = true;
  const double r65 = ratio(65, solved), r129 = ratio(129, solved), r513 = ratio(513, solved);
  EXPECT_TRUE(solved);
  EXPECT_LE(r65, 2.0);
  EXPECT_LT(std::abs(r129 - r513), std::abs(r65 - r513));
}

TEST(SweepProperties, ColdParallelMatchesSequential) {
  SweepOptions one, many;
  one.warm_start = many.warm_start = false;
  many.jobs = 4;
  const auto grid = linspace(0.0, 2.0 * pi, 33);
  const auto a = sweep(ex38(), grid, v2(0, 0), SolverConfig{}, one);
  const auto b = sweep(ex38(), grid, v2(0, 0), SolverConfig{}, many);
  std::ostringstream sa, sb;
  write_csv(a, sa);
  write_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
}
