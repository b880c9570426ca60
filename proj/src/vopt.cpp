#include "svi/vopt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svi/errors.hpp"
#include "svi/log.hpp"

namespace svi {
namespace {

double interpolate(const std::vector<double>& knots, const std::vector<double>& values, double p) {
  if (knots.size() == 1) return values.front();
  if (p < knots.front() || p > knots.back()) {
    throw OutOfRange("knot table: p = " + std::to_string(p) + " outside [" +
                     std::to_string(knots.front()) + ", " + std::to_string(knots.back()) + "]");
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), p);
  if (it == knots.end()) return values.back();
  const auto hi = static_cast<std::size_t>(it - knots.begin());
  const auto lo = hi - 1;
  const double w = (p - knots[lo]) / (knots[hi] - knots[lo]);
  return (1.0 - w) * values[lo] + w * values[hi];
}

void check_knots(const std::vector<double>& knots, std::size_t values, const char* what) {
  if (knots.empty() || knots.size() != values) {
    throw InvalidArgument(std::string(what) + ": knot and value counts differ or are zero");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw InvalidArgument(std::string(what) + ": knots must be strictly increasing");
    }
  }
}

// Axis-aligned box containing R(p).
std::pair<Vector, Vector> bounding_box(const VopSpec& spec, double p) {
  const auto& v = spec.constraint.variant();
  if (const auto* box = std::get_if<Box>(&v)) {
    return {box->lower + p * box->lower_slope, box->upper + p * box->upper_slope};
  }
  if (const auto* ball = std::get_if<Ball>(&v)) {
    const Vector c = ball->center + p * ball->center_slope;
    const double rho = ball->radius + p * ball->radius_slope;
    return {c.array() - rho, c.array() + rho};
  }
  if (const auto* poly = std::get_if<PolytopeConstraint>(&v)) {
    Vector lo = poly->polytope.vertices().front(), hi = lo;
    for (const auto& x : poly->polytope.vertices()) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    return {lo, hi};
  }
  if (!spec.sampling_window) {
    throw UnsupportedCombination("vopt: R(p) = whole space needs a sampling window");
  }
  return *spec.sampling_window;
}

// Tensor grid over a box with `density` points per axis.
std::vector<Vector> box_grid(const Vector& lo, const Vector& hi, std::size_t density) {
  const auto n = static_cast<std::size_t>(lo.size());
  std::vector<Vector> out;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vector x(lo.size());
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      x(jj) = density == 1 ? 0.5 * (lo(jj) + hi(jj))
                           : lo(jj) + (hi(jj) - lo(jj)) * static_cast<double>(idx[j]) /
                                          static_cast<double>(density - 1);
    }
    out.push_back(x);
    std::size_t j = 0;
    while (j < n && ++idx[j] == density) idx[j++] = 0;
    if (j == n) break;
  }
  return out;
}

// Sample of R(p) whose image hull equals conv f(p,R(p)) when `exact` is set.
std::vector<Vector> sample_constraint(const VopSpec& spec, double p, std::size_t density,
                                      bool& exact) {
  if (spec.affine()) {
    if (const auto verts = spec.constraint.vertices(p)) {
      exact = true;
      return *verts;
    }
    if (const auto* ball = std::get_if<Ball>(&spec.constraint.variant())) {
      exact = false;
      const Vector c = ball->center + p * ball->center_slope;
      const double rho = ball->radius + p * ball->radius_slope;
      std::vector<Vector> out;
      for (const auto& d : unit_directions(static_cast<std::size_t>(c.size()), density)) {
        out.push_back(c + rho * d);
      }
      return out;
    }
    throw UnsupportedCombination(
        "vopt: an affine objective over the whole space has an unbounded image");
  }
  // Scalar objective with kinks only at φ(p): interval endpoints and the clamped kink
  // already give the exact image hull; the grid follows the sampling density.
  const auto& dev = std::get<AbsDeviation>(spec.objective);
  const auto [lo, hi] = bounding_box(spec, p);
  exact = true;
  std::vector<Vector> out;
  for (double s : linspace(lo(0), hi(0), std::max<std::size_t>(density, 2))) {
    out.push_back(Vector::Constant(1, s));
  }
  out.push_back(Vector::Constant(1, std::clamp(dev.phi(p), lo(0), hi(0))));
  return out;
}

// Extreme points of a finite image set: planar hull, the two ends of a collinear set, or all.
std::vector<Vector> prune_images(std::vector<Vector> images) {
  if (images.size() <= 2) return images;
  if (images.front().size() == 2) return planar_hull(std::move(images));
  const Vector base = images.front();
  Vector dir = Vector::Zero(base.size());
  for (const auto& y : images) {
    if ((y - base).norm() > dir.norm()) dir = y - base;
  }
  if (dir.norm() <= 1e-15) return {base};
  const Vector u = dir / dir.norm();
  for (const auto& y : images) {
    const Vector r = (y - base) - (y - base).dot(u) * u;
    if (r.norm() > 1e-12) return images;
  }
  auto key = [&](const Vector& y) { return (y - base).dot(u); };
  const auto [mn, mx] = std::minmax_element(images.begin(), images.end(),
                                            [&](const Vector& a, const Vector& b) {
                                              return key(a) < key(b);
                                            });
  return {*mn, *mx};
}

double ideal_gap(const VopSpec& spec, double p, const std::vector<Vector>& images,
                 const Vector& x, const ConvexBody& cone_body) {
  const Vector fx = spec.f(p, x);
  double worst = 0.0;
  for (const auto& y : images) worst = std::max(worst, cone_body.distance(y - fx));
  return worst;
}

}  // namespace

double AbsDeviation::phi(double p) const { return interpolate(knots, values, p); }

Vector AffineFamily::b(double p) const {
  const auto m = static_cast<Eigen::Index>(matrix.out_dim());
  if (b_knots.empty()) return Vector::Zero(m);
  if (b_knots.size() == 1) return b_values.front();
  Vector out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> vals;
    for (const auto& v : b_values) vals.push_back(v(i));
    out(i) = interpolate(b_knots, vals, p);
  }
  return out;
}

bool operator==(const AffineFamily& a, const AffineFamily& b) {
  if (!(a.matrix == b.matrix) || a.b_knots != b.b_knots || a.b_values.size() != b.b_values.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.b_values.size(); ++i) {
    if (!same_entries(a.b_values[i], b.b_values[i])) return false;
  }
  return true;
}

bool operator==(const VopSpec& a, const VopSpec& b) {
  if (!(a.objective == b.objective) || !(a.constraint == b.constraint) || !(a.cone == b.cone) ||
      a.objective_lipschitz != b.objective_lipschitz || a.image_sampling != b.image_sampling ||
      a.declared_alpha != b.declared_alpha ||
      a.sampling_window.has_value() != b.sampling_window.has_value()) {
    return false;
  }
  if (a.sampling_window) {
    return same_entries(a.sampling_window->first, b.sampling_window->first) &&
           same_entries(a.sampling_window->second, b.sampling_window->second);
  }
  return true;
}

std::size_t VopSpec::n() const {
  if (std::holds_alternative<LinearRotation>(objective)) return 2;
  if (std::holds_alternative<AbsDeviation>(objective)) return 1;
  return std::get<AffineFamily>(objective).matrix.in_dim();
}

std::size_t VopSpec::m() const {
  if (std::holds_alternative<LinearRotation>(objective)) return 2;
  if (const auto* dev = std::get_if<AbsDeviation>(&objective)) return dev->m;
  return std::get<AffineFamily>(objective).matrix.out_dim();
}

void VopSpec::validate() const {
  if (const auto* dev = std::get_if<AbsDeviation>(&objective)) {
    check_knots(dev->knots, dev->values.size(), "abs deviation");
    if (dev->m == 0) throw InvalidArgument("abs deviation: output dimension must be positive");
  } else if (const auto* aff = std::get_if<AffineFamily>(&objective)) {
    if (!aff->b_knots.empty()) {
      check_knots(aff->b_knots, aff->b_values.size(), "affine offset");
      for (const auto& v : aff->b_values) {
        if (static_cast<std::size_t>(v.size()) != aff->matrix.out_dim()) {
          throw DimensionMismatch("affine offset: wrong dimension");
        }
      }
    }
  }
  if (cone.dim() != m()) throw DimensionMismatch("vopt: cone dimension differs from objective");
  if (!cone.pointed()) throw InvalidArgument("vopt: the ordering cone must be pointed");
  if (const auto d = constraint.dim(); d && *d != n()) {
    throw DimensionMismatch("vopt: constraint dimension differs from the decision space");
  }
  if (!(objective_lipschitz >= 0.0) || !std::isfinite(objective_lipschitz)) {
    throw InvalidArgument("vopt: objective Lipschitz constant must be finite and nonnegative");
  }
  if (image_sampling < 2) throw InvalidArgument("vopt: image sampling must be at least 2");
  if (sampling_window && (static_cast<std::size_t>(sampling_window->first.size()) != n() ||
                          sampling_window->second.size() != sampling_window->first.size())) {
    throw DimensionMismatch("vopt: sampling window has the wrong dimension");
  }
  if (!affine() && constraint.is_all_space() && !sampling_window) {
    throw UnsupportedCombination("vopt: nonlinear objective over the whole space needs a window");
  }
  if (affine() && constraint.is_all_space()) {
    throw UnsupportedCombination(
        "vopt: an affine objective over the whole space has an unbounded image");
  }
  if (declared_alpha && !(*declared_alpha > 1.0)) {
    throw InvalidArgument("vopt: declared_alpha must exceed 1");
  }
}

Vector VopSpec::f(double p, const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n()) throw DimensionMismatch("objective: wrong input");
  if (const auto* rot = std::get_if<LinearRotation>(&objective)) {
    const Matrix O = rotation(p);
    return rot->lambda * (rot->clockwise ? Matrix(O.transpose()) : O) * x;
  }
  if (const auto* dev = std::get_if<AbsDeviation>(&objective)) {
    return Vector::Constant(static_cast<Eigen::Index>(dev->m), std::abs(x(0) - dev->phi(p)));
  }
  const auto& aff = std::get<AffineFamily>(objective);
  return aff.matrix.at(p) * x + aff.b(p);
}

Matrix VopSpec::jacobian(double p, const Vector& x) const {
  if (const auto* rot = std::get_if<LinearRotation>(&objective)) {
    const Matrix O = rotation(p);
    return rot->lambda * (rot->clockwise ? Matrix(O.transpose()) : O);
  }
  if (const auto* dev = std::get_if<AbsDeviation>(&objective)) {
    const double t = x(0) - dev->phi(p);
    const double sign = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    return Matrix::Constant(static_cast<Eigen::Index>(dev->m), 1, sign);
  }
  return std::get<AffineFamily>(objective).matrix.at(p);
}

SetMap VopSpec::objective_map(double p) const {
  SetMap out;
  out.in_dim = n();
  out.out_dim = m();
  out.lipschitz = objective_lipschitz;
  out.value = [spec = *this, p](const Vector& x) { return VPolytope::singleton(spec.f(p, x)); };
  out.linearization = [spec = *this, p](const Vector& x) { return spec.jacobian(p, x); };
  return out;
}

VopProblem build_vop_problem(const VopSpec& spec, double p, std::size_t image_sampling) {
  spec.validate();
  const std::size_t density = image_sampling == 0 ? spec.image_sampling : image_sampling;
  VopProblem out;
  out.samples = sample_constraint(spec, p, density, out.exact);
  std::vector<Vector> images;
  images.reserve(out.samples.size());
  for (const auto& s : out.samples) images.push_back(spec.f(p, s));
  out.images = prune_images(std::move(images));

  SetMap& phi = out.phi_map;
  phi.in_dim = spec.n();
  phi.out_dim = spec.m();
  phi.lipschitz = spec.objective_lipschitz;
  phi.value = [spec, p, images = out.images](const Vector& x) {
    const Vector fx = spec.f(p, x);
    std::vector<Vector> verts;
    verts.reserve(images.size());
    for (const auto& y : images) verts.push_back(y - fx);
    return VPolytope(std::move(verts));
  };
  phi.linearization = [spec, p](const Vector& x) { return Matrix(-spec.jacobian(p, x)); };
  return out;
}

InfimumResult lower_alpha_estimate(const VopSpec& spec, const std::vector<double>& p_grid,
                                   std::size_t points, const SamplingConfig& cfg) {
  spec.validate();
  if (p_grid.empty()) throw InvalidArgument("lower alpha estimate: empty parameter grid");
  auto [lo, hi] = bounding_box(spec, p_grid.front());
  for (double p : p_grid) {
    const auto [l, h] = bounding_box(spec, p);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(h);
  }
  const ConvexBody cone_body(SumSet::of_cone(spec.cone));
  auto include = [&](double p, const Vector& x) {
    if (!spec.constraint.contains(p, x)) return false;
    const auto vp = build_vop_problem(spec, p);
    return excess(vp.phi_map.value(x), cone_body) > kGeomTol;
  };
  return global_infimum([&](double p) { return spec.objective_map(p); }, spec.cone, p_grid,
                        PointSampling{lo, hi, points}, include, cfg, IncreaseMode::Decrease);
}

OracleResult brute_force_ideal(const VopSpec& spec, double p, std::size_t grid_density) {
  spec.validate();
  if (grid_density < 2) throw InvalidArgument("oracle: grid density must be at least 2");
  const ConvexBody cone_body(SumSet::of_cone(spec.cone));

  auto decide = [&](std::size_t density) {
    const auto vp = build_vop_problem(spec, p, spec.affine() ? 0 : std::max(density, spec.image_sampling));
    const auto [lo, hi] = bounding_box(spec, p);
    std::vector<Vector> candidates;
    if (const auto verts = spec.constraint.vertices(p)) candidates = *verts;
    for (auto& x : box_grid(lo, hi, density)) {
      if (spec.constraint.contains(p, x)) candidates.push_back(std::move(x));
    }
    // Affine objectives are tested exactly; the nonlinear grid test allows the Lipschitz
    // slack of one cell diagonal.
    double eta = kGeomTol;
    if (!spec.affine()) {
      const double h = (hi - lo).norm() / static_cast<double>(density - 1);
      eta = spec.objective_lipschitz * h;
    }
    std::vector<std::pair<double, std::size_t>> passing;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double gap = ideal_gap(spec, p, vp.images, candidates[i], cone_body);
      if (gap <= eta) passing.emplace_back(gap, i);
    }
    std::stable_sort(passing.begin(), passing.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    OracleResult res;
    res.empty = passing.empty();
    for (const auto& [gap, i] : passing) {
      res.ideal_points.push_back(candidates[i]);
      res.values.push_back(spec.f(p, candidates[i]));
    }
    return res;
  };

  OracleResult out = decide(grid_density);
  const OracleResult fine = decide(2 * grid_density - 1);
  out.grid_too_coarse = fine.empty != out.empty;
  if (out.grid_too_coarse) {
    log_warn("oracle: ideal-set decision differs between grid densities at p = " +
             std::to_string(p));
  }
  return out;
}

IdealResult solve_ideal(const VopSpec& spec, double p, const Vector& x0, const SolverConfig& cfg,
                        const IdealOptions& opts) {
  spec.validate();
  const auto vp = build_vop_problem(spec, p);

  double alpha_lower = 0.0;
  if (cfg.alpha_tilde) {
    alpha_lower = *cfg.alpha_tilde;
  } else if (spec.declared_alpha) {
    alpha_lower = *spec.declared_alpha;
  } else {
    SamplingConfig light;
    light.directions = 32;
    light.rounds = 1;
    light.tolerance = 1e-4;
    alpha_lower = lower_alpha_estimate(spec, {p}, 8, light).value;
  }

  IdealResult result;
  SolverConfig run = cfg;
  run.alpha_tilde = alpha_lower;
  const double ell =
      cfg.ell.value_or(spec.constraint.is_all_space() ? 0.0 : spec.objective_lipschitz);
  if (ell >= alpha_lower - 1.0) {
    // The Lipschitz hypothesis fails; run with a reduced budget and drop the guarantee.
    result.hypothesis_met = false;
    run.ell = 0.9 * (alpha_lower - 1.0);
    run.alpha.reset();
  } else {
    run.ell = ell;
  }

  SolveInstance inst{vp.phi_map, spec.cone, spec.constraint, p, alpha_lower, *run.ell, true};
  try {
    result.certificate = solve(inst, x0, run);
  } catch (const SolverError& e) {
    result.certificate = e.partial();
  }
  const auto& cert = result.certificate;
  result.merit_final = cert.merit_final;
  result.x = cert.x_final.size() ? cert.x_final : x0;

  bool found = cert.converged && cert.psi_final <= cfg.tol;
  if (found && cert.dist_final > cfg.tol) {
    const Vector proj = spec.constraint.project(p, result.x).point;
    if (excess(vp.phi_map.value(proj), ConvexBody(SumSet::of_cone(spec.cone))) <= cfg.tol) {
      result.x = proj;
    } else {
      found = false;
    }
  }
  if (found) {
    result.status = IdealStatus::Found;
    result.value = spec.f(p, result.x);
    return result;
  }
  result.status = IdealStatus::NotFoundAfterBudget;
  if (opts.oracle_on_failure && brute_force_ideal(spec, p, opts.oracle_density).empty) {
    result.status = IdealStatus::CertifiedEmpty;
  }
  return result;
}

SweepTable ideal_value_sweep(const VopSpec& spec, const std::vector<double>& grid,
                             const Vector& x_init, const SolverConfig& cfg,
                             const IdealSweepOptions& opts) {
  spec.validate();
  const std::size_t m = spec.m();
  auto one = [&](double p, const Vector& start, const SolverConfig& c) {
    const auto res = solve_ideal(spec, p, start, c);
    SweepRow row;
    row.p = p;
    row.x_start = start;
    row.x = res.x;
    row.merit = res.merit_final;
    row.bound_rhs = res.certificate.bound_rhs;
    row.bound_holds = res.certificate.bound_holds;
    row.iterations = res.certificate.iterations;
    row.solved = res.status == IdealStatus::Found;
    for (std::size_t i = 0; i < m; ++i) {
      row.extra.push_back(row.solved ? format_double(res.value(static_cast<Eigen::Index>(i)))
                                     : std::string("nan"));
    }
    if (opts.oracle) {
      const auto oracle = brute_force_ideal(spec, p, opts.oracle_density);
      std::string status = oracle.empty ? "empty" : "ideal";
      if (oracle.grid_too_coarse) status += "_coarse";
      row.extra.push_back(status);
    }
    if (!row.solved) row.failure = "ideal point not found";
    return row;
  };
  SweepTable table = sweep_rows(one, grid, x_init, cfg, opts.sweep);
  for (std::size_t i = 1; i <= m; ++i) table.extra_headers.push_back("val_" + std::to_string(i));
  if (opts.oracle) table.extra_headers.push_back("oracle_status");
  return table;
}

}  // namespace svi
