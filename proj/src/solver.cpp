#include "svi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "svi/increase.hpp"
#include "svi/log.hpp"

namespace svi {
namespace {

constexpr double kCertSlack = 1e-12;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  h ^= stream + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// Golden-section minimisation of phi on [0, hi].
std::pair<double, double> golden_min(const std::function<double(double)>& phi, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int it = 0; it < 64 && b - a > 1e-14 * std::max(1.0, hi); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = phi(d);
    }
  }
  double t = fc <= fd ? c : d;
  double ft = std::min(fc, fd);
  const double fhi = phi(hi);
  if (fhi < ft) {
    t = hi;
    ft = fhi;
  }
  return {t, ft};
}

// Inward unit facet normals of a full-dimensional cone in dimension ≤ 3; empty otherwise.
std::vector<Vector> cone_facets(const PolyCone& cone) {
  const auto& g = cone.generators();
  const auto m = static_cast<Eigen::Index>(cone.dim());
  std::vector<Vector> cands;
  if (m == 1) {
    cands.push_back(g.front().normalized());
  } else if (m == 2) {
    for (const auto& a : g) cands.push_back(Vector{{-a(1), a(0)}});
  } else if (m == 3) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        const Eigen::Vector3d c = Eigen::Vector3d(g[i].head<3>()).cross(Eigen::Vector3d(g[j].head<3>()));
        cands.push_back(Vector(c));
      }
    }
  }
  std::vector<Vector> facets;
  for (auto n : cands) {
    if (n.norm() < 1e-12) continue;
    n.normalize();
    for (const Vector& cand : {n, Vector(-n)}) {
      bool valid = true;
      std::size_t touching = 0;
      for (const auto& a : g) {
        const double s = cand.dot(a.normalized());
        valid = valid && s >= -1e-12;
        touching += s <= 1e-12;
      }
      if (!valid || touching + 1 < static_cast<std::size_t>(m)) continue;
      const bool dup = std::any_of(facets.begin(), facets.end(),
                                   [&](const Vector& f) { return (f - cand).norm() < 1e-9; });
      if (!dup) facets.push_back(cand);
    }
  }
  // A cone with fewer than m facets is not full-dimensional; the facet system is then singular.
  if (facets.size() < static_cast<std::size_t>(m)) facets.clear();
  return facets;
}

// Rays for the line searches: a Newton step that drives the smallest slack of every cone facet
// to zero (the tip of the solution set), the normal of the worst vertex's violated face, and the
// least-norm fix of the worst vertex.
std::vector<Vector> map_heuristics(const SetMap& map, const ConvexBody& cone_body,
                                   std::span<const Vector> facets, const Vector& x) {
  std::vector<Vector> dirs;
  if (!map.linearization) return dirs;
  const VPolytope Fx = map.value(x);
  double worst = kGeomTol;
  std::size_t k = 0;
  Vector push;
  for (std::size_t i = 0; i < Fx.size(); ++i) {
    const auto pr = cone_body.project(Fx.vertices()[i]);
    if (pr.distance > worst) {
      worst = pr.distance;
      push = pr.point - Fx.vertices()[i];
      k = i;
    }
  }
  if (push.size() == 0) return dirs;

  const Matrix J = map.linearization(x);
  std::vector<Matrix> Jv;
  if (map.vertex_linearization) Jv = map.vertex_linearization(x);
  if (Jv.size() != Fx.size()) Jv.assign(Fx.size(), J);

  auto add = [&](const Vector& d) {
    if (d.allFinite() && d.norm() > 1e-12) dirs.push_back(d / d.norm());
  };
  if (!facets.empty()) {
    // Newton on the active facet slacks, re-linearized at each iterate so that the target
    // point is right even when the path crosses a kink of h.
    Vector y = x;
    for (int it = 0; it < 4; ++it) {
      const VPolytope Fy = it == 0 ? Fx : map.value(y);
      std::vector<Matrix> Jy = it == 0 ? Jv : std::vector<Matrix>{};
      if (it > 0) {
        if (map.vertex_linearization) Jy = map.vertex_linearization(y);
        if (Jy.size() != Fy.size()) Jy.assign(Fy.size(), map.linearization(y));
      }
      Matrix A(static_cast<Eigen::Index>(facets.size()), J.cols());
      Vector b(static_cast<Eigen::Index>(facets.size()));
      for (std::size_t j = 0; j < facets.size(); ++j) {
        std::size_t arg = 0;
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < Fy.size(); ++i) {
          const double s = facets[j].dot(Fy.vertices()[i]);
          if (s < slack) {
            slack = s;
            arg = i;
          }
        }
        A.row(static_cast<Eigen::Index>(j)) = facets[j].transpose() * Jy[arg];
        b(static_cast<Eigen::Index>(j)) = -slack;
      }
      const Vector step = Eigen::CompleteOrthogonalDecomposition<Matrix>(A).solve(b);
      if (!step.allFinite()) break;
      y += step;
      if (step.norm() <= 1e-14 * (1.0 + y.norm())) break;
    }
    add(y - x);
  }
  const Matrix& Jk = Jv[k];
  add(Jk.transpose() * push);
  add(Eigen::CompleteOrthogonalDecomposition<Matrix>(Jk).pseudoInverse() * push);
  return dirs;
}

double estimate_alpha_bound(const SolveInstance& inst, const Vector& x0) {
  SamplingConfig light;
  light.directions = 32;
  light.rounds = 1;
  light.tolerance = 1e-4;
  PointSampling box{x0.array() - 1.0, x0.array() + 1.0, 8};
  const PolyCone& cone = inst.cone;
  const ConvexBody cone_body(SumSet::of_cone(cone));
  auto include = [&](double p, const Vector& x) {
    if (inst.constrained() && !inst.constraint.contains(p, x)) return false;
    return excess(inst.map.value(x), cone_body) > kGeomTol;
  };
  try {
    return global_infimum([&](double) { return inst.map; }, cone, {inst.p}, box, include, light,
                          IncreaseMode::Increase)
        .value;
  } catch (const InvalidArgument&) {
    // No admissible sample: fall back to the conservative value used by the default rule.
    return 1.5 / 0.9;
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("solver: tol must be positive");
  if (max_iters == 0) throw ConfigError("solver: max_iters must be positive");
  if (!(radius0 > 0.0)) throw ConfigError("solver: radius0 must be positive");
  if (!(radius_decay > 0.0 && radius_decay < 1.0)) {
    throw ConfigError("solver: radius_decay must lie in (0,1)");
  }
  if (direction_samples == 0) throw ConfigError("solver: direction_samples must be positive");
  if (ell && *ell < 0.0) throw ConfigError("solver: ell must be nonnegative");
  if (!(stall_ratio >= 0.0) || !(flat_ratio >= 0.0)) {
    throw ConfigError("solver: stall ratios must be nonnegative");
  }
}

StepOutcome caristi_step(const MeritOracle& merit, const Vector& x, double descent_k,
                         const SolverConfig& cfg, std::span<const Vector> heuristic_dirs,
                         std::uint64_t stream) {
  if (!(descent_k > 0.0)) throw InvalidArgument("caristi step: descent constant must be positive");
  StepOutcome out;
  const double fx = merit(x);
  if (fx <= cfg.tol) {
    out.kind = StepKind::Converged;
    out.u = x;
    out.merit_u = fx;
    return out;
  }
  // Any accepted u satisfies k‖u − x‖ ≤ merit(x).
  const double r_max = std::min(cfg.radius0, fx / descent_k);
  auto accept = [&](const Vector& u, double fu) {
    return fu + descent_k * (u - x).norm() <= fx;
  };

  for (const auto& d : heuristic_dirs) {
    auto phi = [&](double t) { return merit(x + t * d); };
    const auto [t_star, f_star] = golden_min(phi, r_max);
    if (!(f_star < fx)) continue;
    const double level = std::max(f_star, cfg.tol * 1e-3) * (1.0 + 1e-12);
    double lo = 0.0, hi = t_star;
    for (int it = 0; it < 60 && hi - lo > 1e-15 * std::max(1.0, t_star); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (phi(mid) <= level) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    for (double t : {hi, t_star}) {
      const Vector u = x + t * d;
      const double fu = merit(u);
      if (t > 0.0 && accept(u, fu)) {
        out.kind = StepKind::Accepted;
        out.u = u;
        out.merit_u = fu;
        out.last_radius = t;
        return out;
      }
    }
  }

  const auto dirs = unit_directions(static_cast<std::size_t>(x.size()), cfg.direction_samples,
                                    stream_seed(cfg.rng_seed, stream));
  double radius = r_max;
  for (std::size_t level = 0; level < cfg.max_radius_levels; ++level) {
    if (radius < 1e-14 * (1.0 + x.norm())) break;
    ++out.radii_tried;
    out.last_radius = radius;
    for (const auto& d : dirs) {
      const Vector u = x + radius * d;
      const double fu = merit(u);
      if (accept(u, fu)) {
        out.kind = StepKind::Accepted;
        out.u = u;
        out.merit_u = fu;
        return out;
      }
    }
    radius *= cfg.radius_decay;
  }
  out.kind = StepKind::NoDescentStep;
  out.u = x;
  out.merit_u = fx;
  return out;
}

Vector segment_step(const Vector& x, const ConstraintFamily& R, double p, double t) {
  const auto pr = R.project(p, x);
  if (pr.distance <= kGeomTol) throw AlreadyFeasible("segment step: point already in R(p)");
  if (!(t > 0.0) || t > pr.distance * (1.0 + 1e-12)) {
    throw InvalidArgument("segment step: t must lie in (0, dist(x,R)]");
  }
  const double step = std::min(t, pr.distance);
  const Vector u = x + step * (pr.point - x) / pr.distance;
  const double residual = std::abs(R.distance(p, u) - (pr.distance - step));
  if (residual > 1e-9) {
    throw NonConvergence("segment step: distance identity violated by " + std::to_string(residual));
  }
  return u;
}

double default_alpha(double alpha_est) {
  if (!(alpha_est > 1.0)) {
    throw HypothesisViolated("increase constant estimate " + std::to_string(alpha_est) +
                             " does not exceed 1");
  }
  const double a = std::min(1.5, 0.9 * alpha_est);
  return a > 1.0 ? a : 0.5 * (1.0 + alpha_est);
}

SolveInstance make_instance(const SviProblem& problem, double p) {
  problem.validate();
  SolveInstance inst{map_at(problem, p), problem.cone, problem.constraint, p,
                     problem.declared_alpha, lipschitz_budget(problem).ell_total, false};
  return inst;
}

namespace {

struct Scheme {
  bool constrained = false;
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  double ell = 0.0;
  double kappa = 0.0;     // α̃ − α (constrained)
  double descent = 0.0;   // certified constant
};

SolveResult run_descent(const SolveInstance& inst, const Vector& x0, const SolverConfig& cfg,
                        const Scheme& sc, std::size_t retries) {
  const ConvexBody cone_body(SumSet::of_cone(inst.cone));
  const auto facets = cone_facets(inst.cone);
  auto psi = [&](const Vector& x) { return excess(inst.map.value(x), cone_body); };
  auto dist = [&](const Vector& x) {
    return sc.constrained ? inst.constraint.distance(inst.p, x) : 0.0;
  };
  auto psi_tilde = [&](const Vector& x) { return psi(x) + sc.kappa * dist(x); };

  SolveResult res;
  res.x0 = x0;
  res.constrained = sc.constrained;
  res.alpha_used = sc.alpha;
  res.alpha_tilde_used = sc.alpha_tilde;
  res.ell_used = sc.ell;
  res.descent_constant = sc.descent;
  res.retries = retries;

  const double psi0 = psi(x0);
  const double dist0 = dist(x0);
  res.merit_x0 = psi0 + sc.kappa * dist0;
  res.bound_rhs = res.merit_x0 / sc.descent;

  Vector x = x0;
  double f = res.merit_x0;
  res.merit_trace.push_back(f);

  auto finish = [&](bool converged) {
    res.x_final = x;
    res.psi_final = psi(x);
    res.dist_final = dist(x);
    res.merit_final = res.psi_final + sc.kappa * res.dist_final;
    res.converged = converged;
    res.bound_holds = (x - x0).norm() <= res.bound_rhs + cfg.tol;
  };

  auto take = [&](const Vector& u, double fu) {
    const double len = (u - x).norm();
    if (fu + sc.descent * len > f + kCertSlack) res.caristi_certified = false;
    res.path_length += len;
    x = u;
    f = fu;
    res.merit_trace.push_back(f);
    ++res.iterations;
  };

  while (true) {
    if (f <= cfg.tol) {
      finish(true);
      return res;
    }
    if (res.iterations >= cfg.max_iters) {
      finish(false);
      throw MaxItersExceeded("solver: iteration budget of " + std::to_string(cfg.max_iters) +
                                 " exhausted at merit " + std::to_string(f),
                             res);
    }
    auto stalled = [&](std::size_t window, double ratio) {
      if (window == 0 || res.merit_trace.size() <= window) return false;
      return res.merit_trace[res.merit_trace.size() - 1 - window] - f <= ratio * f;
    };
    if (stalled(cfg.stall_window, cfg.stall_ratio) || stalled(cfg.flat_window, cfg.flat_ratio)) {
      finish(false);
      throw NoDescentStep("solver: stalled at merit " + std::to_string(f) + " after " +
                              std::to_string(res.iterations) + " steps",
                          res);
    }
    const auto stream = static_cast<std::uint64_t>(res.iterations);
    const double d = dist(x);

    if (!sc.constrained) {
      const auto heur = map_heuristics(inst.map, cone_body, facets, x);
      const auto step = caristi_step(psi, x, sc.descent, cfg, heur, stream);
      if (step.kind == StepKind::Converged) {
        finish(true);
        return res;
      }
      if (step.kind == StepKind::NoDescentStep) {
        finish(false);
        throw NoDescentStep("solver: no descent step at merit " + std::to_string(f) + " after " +
                                std::to_string(step.radii_tried) + " radii (last " +
                                std::to_string(step.last_radius) + ")",
                            res);
      }
      take(step.u, step.merit_u);
      continue;
    }

    if (d > kGeomTol) {
      // Outside R(p): move along the segment to the projection.
      bool moved = false;
      for (double t = d; t > 1e-6 * d; t *= 0.5) {
        const Vector u = segment_step(x, inst.constraint, inst.p, t);
        const double fu = psi_tilde(u);
        if (fu + sc.descent * t <= f) {
          res.segment_residuals.push_back(std::abs(dist(u) - (d - t)));
          ++res.segment_steps;
          take(u, fu);
          moved = true;
          break;
        }
      }
      if (moved) continue;
    } else {
      // Inside R(p): descend on ψ with the stronger constant, then re-add the penalty.
      const auto heur = map_heuristics(inst.map, cone_body, facets, x);
      const double k1 = 2.0 * sc.kappa - sc.ell;
      auto psi_only = [&](const Vector& u) { return psi(u); };
      const auto step = caristi_step(psi_only, x, k1, cfg, heur, stream);
      if (step.kind == StepKind::Accepted) {
        const double fu = psi_tilde(step.u);
        if (fu + sc.descent * (step.u - x).norm() <= f) {
          take(step.u, fu);
          continue;
        }
      }
    }

    // Fallback: direct Caristi step on ψ̃ with the certified constant.
    std::vector<Vector> heur = map_heuristics(inst.map, cone_body, facets, x);
    if (d > kGeomTol) {
      const auto pr = inst.constraint.project(inst.p, x);
      heur.insert(heur.begin(), Vector((pr.point - x) / d));
    }
    const auto step = caristi_step(psi_tilde, x, sc.descent, cfg, heur, stream);
    if (step.kind == StepKind::Converged) {
      finish(true);
      return res;
    }
    if (step.kind == StepKind::NoDescentStep) {
      finish(false);
      throw NoDescentStep("solver: no constrained descent step at merit " + std::to_string(f) +
                              " after " + std::to_string(step.radii_tried) + " radii",
                          res);
    }
    ++res.fallback_steps;
    take(step.u, step.merit_u);
  }
}

}  // namespace

SolveResult solve(const SolveInstance& inst, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != inst.map.in_dim) {
    throw DimensionMismatch("solve: x0 has dimension " + std::to_string(x0.size()) +
                            ", expected " + std::to_string(inst.map.in_dim));
  }
  if (!x0.allFinite()) throw InvalidArgument("solve: non-finite starting point");

  Scheme sc;
  sc.constrained = inst.constrained();
  auto bound = [&] {
    if (cfg.alpha_tilde) return *cfg.alpha_tilde;
    if (inst.alpha_bound) return *inst.alpha_bound;
    return estimate_alpha_bound(inst, x0);
  };

  if (!sc.constrained) {
    if (cfg.alpha) {
      if (!(*cfg.alpha > 1.0)) throw ConfigError("solver: alpha must exceed 1");
      sc.alpha = *cfg.alpha;
    } else {
      sc.alpha = default_alpha(bound());
    }
    sc.descent = sc.alpha - 1.0;
  } else {
    sc.alpha_tilde = bound();
    sc.ell = cfg.ell.value_or(inst.ell_default);
    const double lo = 0.5 * (sc.alpha_tilde - sc.ell + 1.0);
    const double hi = sc.alpha_tilde - sc.ell;
    if (!(hi > 1.0)) {
      throw HypothesisViolated("constrained solver: need ell < alpha_tilde - 1 (alpha_tilde = " +
                               std::to_string(sc.alpha_tilde) + ", ell = " +
                               std::to_string(sc.ell) + ")");
    }
    if (cfg.alpha) {
      if (!(*cfg.alpha > lo && *cfg.alpha < hi)) {
        throw ConfigError("constrained solver: alpha must lie in (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ")");
      }
      sc.alpha = *cfg.alpha;
    } else {
      sc.alpha = 0.5 * (lo + hi);
    }
    sc.kappa = sc.alpha_tilde - sc.alpha;
    sc.descent = sc.kappa - sc.ell;
  }

  try {
    return run_descent(inst, x0, cfg, sc, 0);
  } catch (const NoDescentStep& e) {
    if (!cfg.retry_on_stall) throw;
    log_debug(std::string("retrying after stall: ") + e.what());
    Scheme mild = sc;
    if (!sc.constrained) {
      mild.alpha = 0.5 * (1.0 + sc.alpha);
      mild.descent = mild.alpha - 1.0;
    } else {
      mild.alpha = 0.5 * (sc.alpha + sc.alpha_tilde - sc.ell);
      mild.kappa = mild.alpha_tilde - mild.alpha;
      mild.descent = mild.kappa - mild.ell;
    }
    return run_descent(inst, x0, cfg, mild, 1);
  }
}

SolveResult solve(const SviProblem& problem, double p, const Vector& x0, const SolverConfig& cfg) {
  return solve(make_instance(problem, p), x0, cfg);
}

}  // namespace svi
