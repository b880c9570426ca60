#include "svi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "svi/increase.hpp"
#include "svi/log.hpp"
#include "svi/parametric.hpp"
#include "svi/solver.hpp"
#include "svi/vopt.hpp"

namespace svi {

namespace {

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v(i));
  }
  return s;
}

struct Common {
  std::string problem;
  std::string x0;
  std::string out;
  std::optional<double> alpha;
  std::optional<double> alpha_tilde;
  std::optional<double> ell;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

void add_common(CLI::App* sub, Common& c, bool needs_x0 = true) {
  sub->add_option("--problem", c.problem, "Problem JSON file or builtin:<name>")->required();
  if (needs_x0) sub->add_option("--x0", c.x0, "Starting point, comma separated (default 0)");
  sub->add_option("--out", c.out, "Output file (default: standard output)");
  sub->add_option("--alpha", c.alpha, "Descent constant alpha");
  sub->add_option("--alpha-tilde", c.alpha_tilde, "Increase constant of the constrained problem");
  sub->add_option("--ell", c.ell, "Lipschitz budget override");
  sub->add_option("--tol", c.tol, "Merit tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", c.max_iters, "Iteration budget");
  sub->add_option("--seed", c.seed, "Seed for every randomized component");
  sub->add_option("--jobs", c.jobs, "Worker threads for cold-start sweeps and oracle grids")
      ->check(CLI::PositiveNumber);
}

SolverConfig solver_config(const Common& c) {
  SolverConfig cfg;
  cfg.alpha = c.alpha;
  cfg.alpha_tilde = c.alpha_tilde;
  cfg.ell = c.ell;
  cfg.tol = c.tol;
  cfg.max_iters = c.max_iters;
  cfg.rng_seed = c.seed;
  cfg.validate();
  return cfg;
}

Vector start_point(const Common& c, std::size_t n) {
  if (c.x0.empty()) return Vector::Zero(static_cast<Eigen::Index>(n));
  Vector x = parse_vector(c.x0);
  if (static_cast<std::size_t>(x.size()) != n) {
    throw DimensionMismatch("--x0 has " + std::to_string(x.size()) + " entries, expected " +
                            std::to_string(n));
  }
  return x;
}

/// Writes to --out when given, otherwise to the command's output stream.
template <class F>
void emit(const std::string& path, std::ostream& out, F&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  write(file);
}

void write_solve_report(std::ostream& os, const std::string& name, double p,
                        const SolveResult& r, const std::string& failure) {
  os << std::setprecision(17);
  os << "problem: " << name << '\n'
     << "p: " << format_double(p) << '\n'
     << "status: " << (failure.empty() ? "converged" : failure) << '\n'
     << "x0: " << join(r.x0) << '\n'
     << "x_final: " << join(r.x_final) << '\n'
     << "merit_x0: " << format_double(r.merit_x0) << '\n'
     << "merit_final: " << format_double(r.merit_final) << '\n'
     << "psi_final: " << format_double(r.psi_final) << '\n'
     << "dist_final: " << format_double(r.dist_final) << '\n'
     << "distance_moved: "
     << format_double(r.x_final.size() == r.x0.size() ? (r.x_final - r.x0).norm() : NAN) << '\n'
     << "bound_rhs: " << format_double(r.bound_rhs) << '\n'
     << "bound_holds: " << (r.bound_holds ? "true" : "false") << '\n'
     << "caristi_certified: " << (r.caristi_certified ? "true" : "false") << '\n'
     << "constrained: " << (r.constrained ? "true" : "false") << '\n'
     << "alpha: " << format_double(r.alpha_used) << '\n';
  if (r.constrained) {
    os << "alpha_tilde: " << format_double(r.alpha_tilde_used) << '\n'
       << "ell: " << format_double(r.ell_used) << '\n'
       << "segment_steps: " << r.segment_steps << '\n';
  }
  os << "descent_constant: " << format_double(r.descent_constant) << '\n'
     << "iterations: " << r.iterations << '\n'
     << "retries: " << r.retries << '\n';
}

int cmd_solve(const Common& c, double p, std::ostream& out) {
  const auto file = resolve_problem(c.problem);
  const auto& problem = file.svi();
  const auto cfg = solver_config(c);
  const Vector x0 = start_point(c, problem.n());
  try {
    const auto res = solve(problem, p, x0, cfg);
    emit(c.out, out, [&](std::ostream& os) { write_solve_report(os, file.name, p, res, ""); });
    return kExitOk;
  } catch (const SolverError& e) {
    emit(c.out, out,
         [&](std::ostream& os) { write_solve_report(os, file.name, p, e.partial(), e.what()); });
    throw;
  }
}

int cmd_sweep(const Common& c, const std::string& grid, bool cold, std::ostream& out) {
  const auto file = resolve_problem(c.problem);
  const auto cfg = solver_config(c);
  const auto ps = parse_grid(grid);
  SweepOptions opts;
  opts.warm_start = !cold;
  opts.jobs = c.jobs;
  SweepTable table;
  if (file.is_svi()) {
    table = sweep(file.svi(), ps, start_point(c, file.svi().n()), cfg, opts);
  } else {
    IdealSweepOptions iopts;
    iopts.sweep = opts;
    table = ideal_value_sweep(file.vop(), ps, start_point(c, file.vop().n()), cfg, iopts);
  }
  table.meta.problem_hash = problem_hash(file);
  emit(c.out, out, [&](std::ostream& os) { write_csv(table, os); });
  std::size_t solved = 0;
  for (const auto& r : table.rows) solved += r.solved;
  log_info("sweep: " + std::to_string(solved) + "/" + std::to_string(table.rows.size()) +
           " rows solved, " + std::to_string(table.total_iterations()) + " iterations");
  return kExitOk;
}

void write_estimate(std::ostream& os, const IncreaseEstimate& e, double p) {
  os << "p: " << format_double(p) << '\n'
     << "x: " << join(e.x) << '\n'
     << "mode: " << (e.mode == IncreaseMode::Increase ? "increase" : "decrease") << '\n'
     << "alpha_lo: " << format_double(e.alpha_lo) << '\n'
     << "alpha_hi: " << format_double(e.alpha_hi) << '\n'
     << "capped: " << (e.capped ? "true" : "false") << '\n'
     << "delta_used: " << format_double(e.delta_used) << '\n'
     << "radius_scale: " << format_double(e.radius_scale) << '\n'
     << "witnesses: " << e.witnesses.size() << '\n';
  for (const auto& [r, u] : e.witnesses) os << "  r=" << format_double(r) << " u=" << join(u) << '\n';
}

int cmd_estimate(const Common& c, double p, const std::string& x_text, const std::string& grid,
                 std::size_t points, bool decrease, std::ostream& out) {
  const auto file = resolve_problem(c.problem);
  SamplingConfig scfg;
  scfg.seed = c.seed;
  const auto mode = decrease || !file.is_svi() ? IncreaseMode::Decrease : IncreaseMode::Increase;

  if (!grid.empty()) {
    const auto ps = parse_grid(grid);
    InfimumResult res;
    if (file.is_svi()) {
      const auto& prob = file.svi();
      const auto n = static_cast<Eigen::Index>(prob.n());
      PointSampling xs{Vector::Constant(n, -2.0), Vector::Constant(n, 2.0), points};
      const auto variant =
          prob.constraint.is_all_space() ? InfimumVariant::Unconstrained : InfimumVariant::Constrained;
      res = global_infimum(prob, ps, xs, scfg, variant);
    } else {
      res = lower_alpha_estimate(file.vop(), ps, points, scfg);
    }
    emit(c.out, out, [&](std::ostream& os) {
      os << "infimum: " << format_double(res.value) << '\n'
         << "samples: " << res.samples << '\n'
         << "argmin_p: " << format_double(res.argmin_p) << '\n'
         << "argmin_x: " << join(res.argmin_x) << '\n';
    });
    return kExitOk;
  }

  const SetMap G = file.is_svi() ? map_at(file.svi(), p) : file.vop().objective_map(p);
  const PolyCone& cone = file.is_svi() ? file.svi().cone : file.vop().cone;
  const Vector x = x_text.empty() ? Vector::Zero(static_cast<Eigen::Index>(G.in_dim))
                                  : parse_vector(x_text);
  if (static_cast<std::size_t>(x.size()) != G.in_dim) throw DimensionMismatch("--x has the wrong dimension");
  try {
    const auto est = estimate_bound(G, cone, x, scfg, mode);
    emit(c.out, out, [&](std::ostream& os) { write_estimate(os, est, p); });
  } catch (const PropertyAbsent& e) {
    emit(c.out, out, [&](std::ostream& os) {
      os << "p: " << format_double(p) << '\n'
         << "x: " << join(x) << '\n'
         << "property_absent: " << e.what() << '\n';
    });
  }
  return kExitOk;
}

VopSpec with_orientation(VopSpec spec, const std::string& orientation) {
  if (orientation.empty()) return spec;
  auto* rot = std::get_if<LinearRotation>(&spec.objective);
  if (!rot) throw UnsupportedCombination("--orientation applies to rotation objectives only");
  rot->clockwise = orientation == "cw";
  return spec;
}

const char* status_name(IdealStatus s) {
  switch (s) {
    case IdealStatus::Found: return "found";
    case IdealStatus::NotFoundAfterBudget: return "not_found_after_budget";
    case IdealStatus::CertifiedEmpty: return "certified_empty";
  }
  return "unknown";
}

int cmd_vopt(const Common& c, std::optional<double> p, const std::string& grid, bool oracle,
             std::size_t density, const std::string& orientation, std::ostream& out) {
  const auto file = resolve_problem(c.problem);
  const VopSpec spec = with_orientation(file.vop(), orientation);
  const auto cfg = solver_config(c);
  const Vector x0 = start_point(c, spec.n());

  if (!grid.empty()) {
    IdealSweepOptions opts;
    opts.sweep.jobs = c.jobs;
    opts.oracle = oracle;
    opts.oracle_density = density;
    auto table = ideal_value_sweep(spec, parse_grid(grid), x0, cfg, opts);
    table.meta.problem_hash = problem_hash(ProblemFile{file.name, spec});
    emit(c.out, out, [&](std::ostream& os) { write_csv(table, os); });
    return kExitOk;
  }
  if (!p) throw ConfigError("vopt: give --p or --grid");
  IdealOptions opts;
  opts.oracle_on_failure = oracle;
  opts.oracle_density = density;
  const auto res = solve_ideal(spec, *p, x0, cfg, opts);
  emit(c.out, out, [&](std::ostream& os) {
    os << "problem: " << file.name << '\n'
       << "p: " << format_double(*p) << '\n'
       << "status: " << status_name(res.status) << '\n'
       << "x: " << join(res.x) << '\n'
       << "value: " << join(res.value) << '\n'
       << "merit_final: " << format_double(res.merit_final) << '\n'
       << "bound_rhs: " << format_double(res.certificate.bound_rhs) << '\n'
       << "bound_holds: " << (res.certificate.bound_holds ? "true" : "false") << '\n'
       << "hypothesis_met: " << (res.hypothesis_met ? "true" : "false") << '\n'
       << "iterations: " << res.certificate.iterations << '\n';
    if (oracle) {
      const auto orc = brute_force_ideal(spec, *p, density);
      os << "oracle: " << (orc.empty ? "empty" : "ideal") << (orc.grid_too_coarse ? " (grid too coarse)" : "")
         << '\n';
      if (!orc.empty) os << "oracle_x: " << join(orc.ideal_points.front()) << '\n';
    }
  });
  return kExitOk;
}

int cmd_verify(const Common& c, const std::string& grid, std::optional<double> p, std::size_t trials,
               std::ostream& out) {
  const auto file = resolve_problem(c.problem);
  const std::vector<double> ps = !grid.empty() ? parse_grid(grid) : std::vector<double>{p.value_or(0.0)};
  const auto counts = verify_properties(file, ps, trials, c.seed);
  std::size_t failed = 0;
  emit(c.out, out, [&](std::ostream& os) {
    for (const auto& k : counts) {
      os << (k.failed ? "FAIL " : "PASS ") << k.name << ": " << k.passed << " passed, " << k.failed
         << " failed\n";
      failed += k.failed;
    }
  });
  return failed ? kExitSolver : kExitOk;
}

}  // namespace

Vector parse_vector(std::string_view text) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto piece = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    try {
      std::size_t used = 0;
      const std::string s(piece);
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("");
      vals.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad vector entry '" + std::string(piece) + "' in '" + std::string(text) + "'");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

ProblemFile resolve_problem(const std::string& spec) {
  constexpr std::string_view prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin_problem(spec.substr(prefix.size()));
  return load_problem(spec);
}

std::vector<PropertyCount> verify_properties(const ProblemFile& file, const std::vector<double>& p_values,
                                             std::size_t trials, std::uint64_t seed) {
  PropertyCount lip{"merit Lipschitz bound"}, convex{"merit convexity"},
      concave{"C-concavity of the map"}, sublevel{"sublevel-set equivalence"},
      attain{"vertex attainment of the excess"}, idem{"projection idempotence"},
      p1{"excess invariance under adding the cone"}, feas{"constraint projection"};
  auto tally = [](PropertyCount& k, bool ok) { ok ? ++k.passed : ++k.failed; };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const PolyCone& cone = file.is_svi() ? file.svi().cone : file.vop().cone;
  const ConstraintFamily& constraint = file.is_svi() ? file.svi().constraint : file.vop().constraint;
  const ConvexBody cone_body(SumSet::of_cone(cone));
  Matrix gens(cone.dim(), cone.generators().size());
  for (std::size_t k = 0; k < cone.generators().size(); ++k) {
    gens.col(static_cast<Eigen::Index>(k)) = cone.generators()[k];
  }

  for (double p : p_values) {
    const SetMap G = file.is_svi() ? map_at(file.svi(), p) : build_vop_problem(file.vop(), p).phi_map;
    const auto n = static_cast<Eigen::Index>(G.in_dim);
    auto random_x = [&] {
      Vector x(n);
      for (auto& v : x) v = gauss(rng);
      return x;
    };
    auto psi = [&](const Vector& x) { return excess(G.value(x), cone_body); };

    for (std::size_t t = 0; t < trials; ++t) {
      const Vector x1 = random_x(), x2 = random_x();
      const double s = unit(rng);
      const Vector xm = s * x1 + (1.0 - s) * x2;
      const double f1 = psi(x1), f2 = psi(x2), fm = psi(xm);

      tally(lip, std::abs(f1 - f2) <= G.lipschitz * (x1 - x2).norm() + 1e-9);
      tally(convex, fm <= s * f1 + (1.0 - s) * f2 + 1e-9);

      // Every vertex of G(xm) must lie in s·G(x1) + (1−s)·G(x2) + C.
      const auto A = G.value(x1).vertices(), B = G.value(x2).vertices();
      std::vector<Vector> sums;
      for (const auto& a : A) {
        for (const auto& b : B) sums.push_back(s * a + (1.0 - s) * b);
      }
      const ConvexBody mix(SumSet(VPolytope(std::move(sums)), cone));
      const auto value_m = G.value(xm);
      double worst = 0.0;
      for (const auto& v : value_m.vertices()) worst = std::max(worst, mix.distance(v));
      tally(concave, worst <= 1e-9);

      const auto value = G.value(x1);
      bool all_in = true;
      double vmax = 0.0;
      for (const auto& v : value.vertices()) {
        const auto pr = cone_body.project(v);
        all_in = all_in && pr.distance <= kGeomTol;
        vmax = std::max(vmax, pr.distance);
        tally(idem, cone_body.distance(pr.point) <= 1e-9);
      }
      tally(sublevel, (f1 <= kGeomTol) == all_in);

      double sampled = 0.0;
      for (int k = 0; k < 64; ++k) {
        Vector w(static_cast<Eigen::Index>(value.size()));
        for (auto& e : w) e = -std::log(1.0 - unit(rng));
        w /= w.sum();
        Vector y = Vector::Zero(static_cast<Eigen::Index>(G.out_dim));
        for (std::size_t i = 0; i < value.size(); ++i) y += w(static_cast<Eigen::Index>(i)) * value.vertices()[i];
        sampled = std::max(sampled, cone_body.distance(y));
      }
      tally(attain, std::abs(f1 - vmax) <= 1e-9 && sampled <= f1 + 1e-9);

      std::vector<Vector> shifted;
      for (const auto& v : value.vertices()) {
        shifted.push_back(v);
        Vector mu(gens.cols());
        for (auto& e : mu) e = 3.0 * unit(rng);
        shifted.push_back(v + gens * mu);
      }
      tally(p1, std::abs(excess(VPolytope(std::move(shifted)), cone_body) - f1) <= 1e-9);

      if (!constraint.is_all_space()) {
        const auto pr = constraint.project(p, x1);
        tally(feas, constraint.contains(p, pr.point) &&
                        std::abs(pr.distance - (x1 - pr.point).norm()) <= 1e-9);
      }
    }
  }
  std::vector<PropertyCount> out{lip, convex, concave, sublevel, attain, idem, p1};
  if (!constraint.is_all_space()) out.push_back(feas);
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solver toolkit for parameterized set-valued inclusions F(p,x) ⊆ C", "svi"};
  app.require_subcommand(1);
  Common c;
  double p = 0.0;
  std::optional<double> p_opt;
  std::string grid, x_text, orientation;
  bool cold = false, oracle = false, decrease = false;
  std::size_t points = 32, density = 129, trials = 100;

  auto* solve_cmd = app.add_subcommand("solve", "Solve one inclusion at a parameter value");
  add_common(solve_cmd, c);
  solve_cmd->add_option("--p", p, "Parameter value");

  auto* sweep_cmd = app.add_subcommand("sweep", "Warm-started parameter sweep, CSV output");
  add_common(sweep_cmd, c);
  sweep_cmd->add_option("--grid", grid, "start:stop:count (inclusive)")->required();
  sweep_cmd->add_flag("--cold", cold, "Start every row from --x0 (parallel with --jobs)");

  auto* est_cmd = app.add_subcommand("estimate-inc", "Bracket the exact increase bound");
  add_common(est_cmd, c, false);
  est_cmd->add_option("--p", p, "Parameter value");
  est_cmd->add_option("--x", x_text, "Point, comma separated (default 0)");
  est_cmd->add_option("--grid", grid, "Estimate the global infimum over this p grid");
  est_cmd->add_option("--points", points, "Sample points per parameter for --grid");
  est_cmd->add_flag("--decrease", decrease, "Decrease mode (always on for vector optimization)");

  auto* vopt_cmd = app.add_subcommand("vopt", "Ideal efficient points of a vector optimization problem");
  add_common(vopt_cmd, c);
  vopt_cmd->add_option("--p", p_opt, "Parameter value");
  vopt_cmd->add_option("--grid", grid, "Ideal value sweep over start:stop:count");
  vopt_cmd->add_flag("--oracle", oracle, "Cross-check with the brute-force oracle");
  vopt_cmd->add_option("--oracle-density", density, "Oracle grid density")->check(CLI::Range(2, 100000));
  vopt_cmd->add_option("--orientation", orientation, "Rotation orientation override")
      ->check(CLI::IsMember({"cw", "ccw"}));

  auto* verify_cmd = app.add_subcommand("verify-props", "Run the property suites on a problem");
  add_common(verify_cmd, c, false);
  verify_cmd->add_option("--p", p_opt, "Parameter value (default 0)");
  verify_cmd->add_option("--grid", grid, "Parameter grid");
  verify_cmd->add_option("--trials", trials, "Random trials per parameter value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(c, p, out);
    if (*sweep_cmd) return cmd_sweep(c, grid, cold, out);
    if (*est_cmd) return cmd_estimate(c, p, x_text, grid, points, decrease, out);
    if (*vopt_cmd) return cmd_vopt(c, p_opt, grid, oracle, density, orientation, out);
    if (*verify_cmd) return cmd_verify(c, grid, p_opt, trials, out);
  } catch (const SolverError& e) {
    err << "svi: solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ParseError& e) {
    err << "svi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "svi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionMismatch& e) {
    err << "svi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedCombination& e) {
    err << "svi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const OutOfRange& e) {
    err << "svi: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "svi: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace svi
