#pragma once

// Parameter sweeps (numerical implicit function) and continuity diagnostics.

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svi/errors.hpp"
#include "svi/solver.hpp"

namespace svi {

class TooFewRows : public Error {
 public:
  using Error::Error;
};

struct SweepRow {
  double p = 0.0;
  Vector x;
  double merit = 0.0;
  double bound_rhs = 0.0;
  bool bound_holds = false;
  bool solved = false;
  std::size_t iterations = 0;
  Vector x_start;
  /// Extra CSV cells, aligned with SweepTable::extra_headers.
  std::vector<std::string> extra;
  std::string failure;
};

struct SweepMeta {
  std::string problem_hash;
  double wall_seconds = 0.0;
  bool warm_start = true;
  SolverConfig cfg;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<std::string> extra_headers;
  SweepMeta meta;

  std::size_t total_iterations() const;
};

struct SweepOptions {
  bool warm_start = true;
  /// Worker threads for cold-start sweeps; ignored when warm-starting.
  std::size_t jobs = 1;
};

/// Solves along the grid; failures become unsolved rows.
SweepTable sweep(const SviProblem& problem, const std::vector<double>& grid, const Vector& x_init,
                 const SolverConfig& cfg, const SweepOptions& opts = {});

/// Generic form over a per-parameter instance factory and a row solver.
using RowSolver = std::function<SweepRow(double p, const Vector& x_start, const SolverConfig& cfg)>;
SweepTable sweep_rows(const RowSolver& solve_row, const std::vector<double>& grid,
                      const Vector& x_init, const SolverConfig& cfg, const SweepOptions& opts);

/// Row for one solve call; failures are recorded in the row.
SweepRow solve_row(const SolveInstance& inst, const Vector& x_start, const SolverConfig& cfg);

/// Inclusive grid from "start:stop:count".
std::vector<double> parse_grid(std::string_view spec);
std::vector<double> linspace(double start, double stop, std::size_t count);

/// Columns: p, x_1..x_n, merit, bound_rhs, bound_holds, solved, then any extra columns.
void write_csv(const SweepTable& table, std::ostream& out);
std::string csv_header(std::size_t n, const std::vector<std::string>& extra = {});
std::string format_double(double v);

struct ContinuityReport {
  double max_step_ratio = 0.0;
  double threshold = 0.0;
  /// Index of the later row of each consecutive pair whose ratio exceeds the threshold.
  std::vector<std::size_t> discontinuity_flags;
  /// Maximal p-intervals of consecutive unsolved rows.
  std::vector<std::pair<double, double>> unsolved_runs;
};

/// threshold_ratio defaults to 10× the median step ratio.
ContinuityReport continuity_report(const SweepTable& table,
                                   std::optional<double> threshold_ratio = std::nullopt);

}  // namespace svi
