#include "svi/parametric.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

namespace svi {

std::size_t SweepTable::total_iterations() const {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.iterations;
  return total;
}

SweepRow solve_row(const SolveInstance& inst, const Vector& x_start, const SolverConfig& cfg) {
  SweepRow row;
  row.p = inst.p;
  row.x_start = x_start;
  try {
    const auto res = solve(inst, x_start, cfg);
    row.x = res.x_final;
    row.merit = res.merit_final;
    row.bound_rhs = res.bound_rhs;
    row.bound_holds = res.bound_holds;
    row.iterations = res.iterations;
  } catch (const SolverError& e) {
    const auto& res = e.partial();
    row.x = res.x_final.size() ? res.x_final : x_start;
    row.merit = res.merit_final;
    row.bound_rhs = res.bound_rhs;
    row.bound_holds = res.bound_holds;
    row.iterations = res.iterations;
    row.failure = e.what();
  }
  row.solved = row.failure.empty() && row.merit <= cfg.tol;
  return row;
}

SweepTable sweep_rows(const RowSolver& solve_one, const std::vector<double>& grid,
                      const Vector& x_init, const SolverConfig& cfg, const SweepOptions& opts) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("sweep: grid must be sorted");
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  SweepTable table;
  table.meta.warm_start = opts.warm_start;
  table.meta.cfg = cfg;
  table.rows.resize(grid.size());

  if (opts.warm_start) {
    Vector start = x_init;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      table.rows[i] = solve_one(grid[i], start, cfg);
      if (table.rows[i].solved) start = table.rows[i].x;
    }
  } else {
    // Independent rows; each gets a seed derived from its index so results do not depend on
    // the number of workers.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < grid.size(); i = next++) {
        SolverConfig row_cfg = cfg;
        row_cfg.rng_seed = cfg.rng_seed + i;
        table.rows[i] = solve_one(grid[i], x_init, row_cfg);
      }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, grid.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }
  table.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return table;
}

SweepTable sweep(const SviProblem& problem, const std::vector<double>& grid, const Vector& x_init,
                 const SolverConfig& cfg, const SweepOptions& opts) {
  problem.validate();
  auto one = [&](double p, const Vector& start, const SolverConfig& c) {
    return solve_row(make_instance(problem, p), start, c);
  };
  return sweep_rows(one, grid, x_init, cfg, opts);
}

std::vector<double> linspace(double start, double stop, std::size_t count) {
  if (count == 0) throw ConfigError("grid: count must be positive");
  if (count == 1) return {start};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  out.back() = stop;
  return out;
}

std::vector<double> parse_grid(std::string_view spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : spec.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw ConfigError("grid: expected start:stop:count");
  auto num = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size() || !std::isfinite(v)) throw ConfigError("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("grid: bad number '" + std::string(s) + "'");
    }
  };
  const double start = num(spec.substr(0, c1));
  const double stop = num(spec.substr(c1 + 1, c2 - c1 - 1));
  const auto count_str = spec.substr(c2 + 1);
  std::size_t count = 0;
  const auto [ptr, ec] = std::from_chars(count_str.data(), count_str.data() + count_str.size(), count);
  if (ec != std::errc() || ptr != count_str.data() + count_str.size() || count == 0) {
    throw ConfigError("grid: bad count '" + std::string(count_str) + "'");
  }
  if (stop < start) throw ConfigError("grid: stop must not precede start");
  return linspace(start, stop, count);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header(std::size_t n, const std::vector<std::string>& extra) {
  std::string h = "p";
  for (std::size_t j = 1; j <= n; ++j) h += ",x_" + std::to_string(j);
  h += ",merit,bound_rhs,bound_holds,solved";
  for (const auto& e : extra) h += "," + e;
  return h;
}

void write_csv(const SweepTable& table, std::ostream& out) {
  const std::size_t n = table.rows.empty() ? 0 : static_cast<std::size_t>(table.rows[0].x.size());
  out << csv_header(n, table.extra_headers) << '\n';
  for (const auto& r : table.rows) {
    out << format_double(r.p);
    for (double v : r.x) out << ',' << format_double(v);
    out << ',' << format_double(r.merit) << ',' << format_double(r.bound_rhs) << ','
        << (r.bound_holds ? "true" : "false") << ',' << (r.solved ? "true" : "false");
    for (const auto& e : r.extra) out << ',' << e;
    out << '\n';
  }
}

ContinuityReport continuity_report(const SweepTable& table, std::optional<double> threshold_ratio) {
  const auto& rows = table.rows;
  if (rows.size() < 2) throw TooFewRows("continuity report: need at least two rows");

  std::vector<std::pair<std::size_t, double>> ratios;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (!rows[i].solved || !rows[i + 1].solved) continue;
    const double dp = std::abs(rows[i + 1].p - rows[i].p);
    if (dp <= 0.0) continue;
    ratios.emplace_back(i + 1, (rows[i + 1].x - rows[i].x).norm() / dp);
  }

  ContinuityReport rep;
  for (const auto& [_, r] : ratios) rep.max_step_ratio = std::max(rep.max_step_ratio, r);
  if (threshold_ratio) {
    rep.threshold = *threshold_ratio;
  } else {
    std::vector<double> vals;
    for (const auto& [_, r] : ratios) vals.push_back(r);
    double median = 0.0;
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      const auto k = vals.size() / 2;
      median = vals.size() % 2 ? vals[k] : 0.5 * (vals[k - 1] + vals[k]);
    }
    rep.threshold = std::max(10.0 * median, 1e-9);
  }
  for (const auto& [i, r] : ratios) {
    if (r > rep.threshold) rep.discontinuity_flags.push_back(i);
  }
  for (std::size_t i = 0; i < rows.size();) {
    if (rows[i].solved) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < rows.size() && !rows[j + 1].solved) ++j;
    rep.unsolved_runs.emplace_back(rows[i].p, rows[j].p);
    i = j + 1;
  }
  return rep;
}

}  // namespace svi
