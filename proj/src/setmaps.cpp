#include "svi/setmaps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "svi/errors.hpp"

namespace svi {
namespace {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(got));
  }
}

Vector or_zero(const Vector& v, Eigen::Index n) { return v.size() == 0 ? Vector::Zero(n) : v; }

}  // namespace

Matrix rotation(double p) {
  Matrix O(2, 2);
  O << std::cos(p), -std::sin(p), std::sin(p), std::cos(p);
  return O;
}

FanSpec::FanSpec(std::vector<Matrix> extreme_matrices) : matrices_(std::move(extreme_matrices)) {
  if (matrices_.empty()) throw InvalidArgument("fan: no extreme matrices");
  for (const auto& M : matrices_) {
    if (M.rows() != matrices_.front().rows() || M.cols() != matrices_.front().cols()) {
      throw DimensionMismatch("fan: extreme matrices differ in shape");
    }
    if (!M.allFinite()) throw InvalidArgument("fan: non-finite entry");
    lipschitz_ = std::max(lipschitz_, spectral_norm(M));
  }
}

ParamMatrixFamily::ParamMatrixFamily(Variant v) : variant_(std::move(v)) {
  if (const auto* rot = std::get_if<RotationScaled>(&variant_)) {
    if (!std::isfinite(rot->lambda)) throw InvalidArgument("rotation: non-finite scale");
  } else if (const auto* cm = std::get_if<ConstantMatrix>(&variant_)) {
    if (cm->matrix.size() == 0 || !cm->matrix.allFinite()) {
      throw InvalidArgument("constant matrix: empty or non-finite");
    }
  } else {
    const auto& t = std::get<InterpolatedTable>(variant_);
    if (t.knots.empty() || t.knots.size() != t.matrices.size()) {
      throw InvalidArgument("matrix table: knot and matrix counts differ or are zero");
    }
    for (std::size_t i = 0; i < t.knots.size(); ++i) {
      if (i > 0 && !(t.knots[i] > t.knots[i - 1])) {
        throw InvalidArgument("matrix table: knots must be strictly increasing");
      }
      if (t.matrices[i].rows() != t.matrices[0].rows() ||
          t.matrices[i].cols() != t.matrices[0].cols()) {
        throw DimensionMismatch("matrix table: matrices differ in shape");
      }
      if (!t.matrices[i].allFinite()) throw InvalidArgument("matrix table: non-finite entry");
    }
  }
}

Matrix ParamMatrixFamily::at(double p) const {
  if (const auto* rot = std::get_if<RotationScaled>(&variant_)) {
    const Matrix O = rotation(p);
    return rot->lambda * (rot->clockwise ? Matrix(O.transpose()) : O);
  }
  if (const auto* cm = std::get_if<ConstantMatrix>(&variant_)) return cm->matrix;
  const auto& t = std::get<InterpolatedTable>(variant_);
  if (p < t.knots.front() || p > t.knots.back()) {
    throw OutOfRange("matrix table: p = " + std::to_string(p) + " outside [" +
                     std::to_string(t.knots.front()) + ", " + std::to_string(t.knots.back()) + "]");
  }
  const auto it = std::upper_bound(t.knots.begin(), t.knots.end(), p);
  if (it == t.knots.end()) return t.matrices.back();
  const auto hi = static_cast<std::size_t>(it - t.knots.begin());
  const auto lo = hi - 1;
  const double w = (p - t.knots[lo]) / (t.knots[hi] - t.knots[lo]);
  return (1.0 - w) * t.matrices[lo] + w * t.matrices[hi];
}

std::size_t ParamMatrixFamily::in_dim() const {
  if (std::holds_alternative<RotationScaled>(variant_)) return 2;
  if (const auto* cm = std::get_if<ConstantMatrix>(&variant_)) {
    return static_cast<std::size_t>(cm->matrix.cols());
  }
  return static_cast<std::size_t>(std::get<InterpolatedTable>(variant_).matrices.front().cols());
}

std::size_t ParamMatrixFamily::out_dim() const {
  if (std::holds_alternative<RotationScaled>(variant_)) return 2;
  if (const auto* cm = std::get_if<ConstantMatrix>(&variant_)) {
    return static_cast<std::size_t>(cm->matrix.rows());
  }
  return static_cast<std::size_t>(std::get<InterpolatedTable>(variant_).matrices.front().rows());
}

ConcaveTerm::ConcaveTerm(std::vector<ConcaveComponent> components, double declared_lipschitz)
    : components_(std::move(components)), declared_lipschitz_(declared_lipschitz) {
  if (components_.empty()) throw InvalidArgument("h: no components");
  const auto n = components_.front().lin.size();
  for (const auto& c : components_) {
    if (c.lin.size() != n) throw DimensionMismatch("h: components differ in input dimension");
    if (!std::isfinite(c.a) || !std::isfinite(c.c) || !std::isfinite(c.d) || !c.lin.allFinite()) {
      throw InvalidArgument("h: non-finite coefficient");
    }
    if (c.c > 0.0) throw InvalidArgument("h: abs coefficient must be <= 0 for concavity");
    if (c.c != 0.0 && c.j >= static_cast<std::size_t>(n)) {
      throw InvalidArgument("h: abs index out of range");
    }
  }
  if (!std::isfinite(declared_lipschitz_) || declared_lipschitz_ < 0.0) {
    throw InvalidArgument("h: declared Lipschitz constant must be finite and nonnegative");
  }
  const double computed = computed_lipschitz();
  if (declared_lipschitz_ < computed - 1e-12) {
    throw InvalidArgument("h: declared Lipschitz constant " + std::to_string(declared_lipschitz_) +
                          " below the actual constant " + std::to_string(computed));
  }
}

double ConcaveTerm::computed_lipschitz() const {
  // The term is piecewise affine; each piece corresponds to a sign pattern of the abs terms.
  const auto n = static_cast<Eigen::Index>(in_dim());
  const auto m = static_cast<Eigen::Index>(out_dim());
  std::vector<std::size_t> kinked;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].c != 0.0) kinked.push_back(i);
  }
  double best = 0.0;
  const std::size_t patterns = std::size_t{1} << kinked.size();
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    Matrix J(m, n);
    for (Eigen::Index i = 0; i < m; ++i) J.row(i) = components_[static_cast<std::size_t>(i)].lin;
    for (std::size_t k = 0; k < kinked.size(); ++k) {
      const auto& comp = components_[kinked[k]];
      const double sign = (mask >> k) & 1U ? 1.0 : -1.0;
      J(static_cast<Eigen::Index>(kinked[k]), static_cast<Eigen::Index>(comp.j)) += sign * comp.c;
    }
    best = std::max(best, spectral_norm(J));
  }
  return best;
}

Vector ConcaveTerm::value(const Vector& x) const {
  check_dim(in_dim(), static_cast<std::size_t>(x.size()), "h");
  Vector out(static_cast<Eigen::Index>(out_dim()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    double v = c.a + c.lin.dot(x);
    if (c.c != 0.0) v += c.c * std::abs(x(static_cast<Eigen::Index>(c.j)) - c.d);
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

Matrix ConcaveTerm::jacobian(const Vector& x) const {
  Matrix J(static_cast<Eigen::Index>(out_dim()), static_cast<Eigen::Index>(in_dim()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    J.row(static_cast<Eigen::Index>(i)) = c.lin;
    if (c.c != 0.0) {
      const double t = x(static_cast<Eigen::Index>(c.j)) - c.d;
      const double sign = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c.j)) += c.c * sign;
    }
  }
  return J;
}

ConstraintFamily::ConstraintFamily() : variant_(AllSpace{}) {}

ConstraintFamily::ConstraintFamily(Variant v) : variant_(std::move(v)) {
  if (auto* box = std::get_if<Box>(&variant_)) {
    const auto n = box->lower.size();
    if (n == 0 || box->upper.size() != n) throw DimensionMismatch("box: bound dimensions differ");
    box->lower_slope = or_zero(box->lower_slope, n);
    box->upper_slope = or_zero(box->upper_slope, n);
    if (box->lower_slope.size() != n || box->upper_slope.size() != n) {
      throw DimensionMismatch("box: slope dimensions differ");
    }
    if (!box->lower.allFinite() || !box->upper.allFinite() || !box->lower_slope.allFinite() ||
        !box->upper_slope.allFinite()) {
      throw InvalidArgument("box: non-finite bound");
    }
    if ((box->lower.array() > box->upper.array()).any()) {
      throw InvalidArgument("box: lower bound exceeds upper bound");
    }
  } else if (auto* ball = std::get_if<Ball>(&variant_)) {
    const auto n = ball->center.size();
    if (n == 0) throw DimensionMismatch("ball: empty center");
    ball->center_slope = or_zero(ball->center_slope, n);
    if (ball->center_slope.size() != n) throw DimensionMismatch("ball: slope dimension differs");
    if (!ball->center.allFinite() || !ball->center_slope.allFinite() ||
        !std::isfinite(ball->radius) || !std::isfinite(ball->radius_slope)) {
      throw InvalidArgument("ball: non-finite data");
    }
    if (ball->radius < 0.0) throw InvalidArgument("ball: negative radius");
  } else if (const auto* poly = std::get_if<PolytopeConstraint>(&variant_)) {
    body_ = std::make_shared<const ConvexBody>(SumSet(poly->polytope));
  }
}

std::optional<std::size_t> ConstraintFamily::dim() const {
  if (const auto* box = std::get_if<Box>(&variant_)) return static_cast<std::size_t>(box->lower.size());
  if (const auto* ball = std::get_if<Ball>(&variant_)) {
    return static_cast<std::size_t>(ball->center.size());
  }
  if (const auto* poly = std::get_if<PolytopeConstraint>(&variant_)) return poly->polytope.dim();
  return std::nullopt;
}

Projection ConstraintFamily::project(double p, const Vector& x) const {
  if (const auto d = dim()) check_dim(*d, static_cast<std::size_t>(x.size()), "constraint");
  Projection out;
  if (std::holds_alternative<AllSpace>(variant_)) {
    out.point = x;
    out.distance = 0.0;
  } else if (const auto* box = std::get_if<Box>(&variant_)) {
    const Vector lo = box->lower + p * box->lower_slope;
    const Vector hi = box->upper + p * box->upper_slope;
    if ((lo.array() > hi.array()).any()) {
      throw InvalidArgument("box: empty at p = " + std::to_string(p));
    }
    out.point = x.cwiseMax(lo).cwiseMin(hi);
    out.distance = (x - out.point).norm();
  } else if (const auto* ball = std::get_if<Ball>(&variant_)) {
    const Vector c = ball->center + p * ball->center_slope;
    const double rho = ball->radius + p * ball->radius_slope;
    if (rho < 0.0) throw InvalidArgument("ball: negative radius at p = " + std::to_string(p));
    const double d = (x - c).norm();
    if (d <= rho) {
      out.point = x;
      out.distance = 0.0;
    } else {
      out.point = c + (rho / d) * (x - c);
      out.distance = d - rho;
    }
  } else {
    out = body_->project(x);
  }
  return out;
}

std::optional<std::vector<Vector>> ConstraintFamily::vertices(double p) const {
  if (const auto* box = std::get_if<Box>(&variant_)) {
    const Vector lo = box->lower + p * box->lower_slope;
    const Vector hi = box->upper + p * box->upper_slope;
    const auto n = static_cast<std::size_t>(lo.size());
    std::vector<Vector> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      Vector v(lo.size());
      for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        v(jj) = (mask >> j) & 1U ? hi(jj) : lo(jj);
      }
      out.push_back(v);
    }
    return out;
  }
  if (const auto* poly = std::get_if<PolytopeConstraint>(&variant_)) {
    return poly->polytope.vertices();
  }
  return std::nullopt;
}

void SviProblem::validate() const {
  const std::size_t nn = n();
  const std::size_t mm = m();
  if (h) {
    check_dim(nn, h->in_dim(), "h input");
    check_dim(mm, h->out_dim(), "h output");
  }
  if (fan) {
    check_dim(nn, fan->in_dim(), "fan input");
    check_dim(mm, fan->out_dim(), "fan output");
  }
  check_dim(mm, cone.dim(), "cone");
  if (const auto d = constraint.dim()) check_dim(nn, *d, "constraint");
  if (declared_alpha && !(std::isfinite(*declared_alpha) && *declared_alpha > 1.0)) {
    throw InvalidArgument("declared_alpha must be a finite number > 1");
  }
}

VPolytope evaluate(const SviProblem& problem, double p, const Vector& x) {
  check_dim(problem.n(), static_cast<std::size_t>(x.size()), "evaluate");
  if (!x.allFinite()) throw InvalidArgument("evaluate: non-finite point");
  Vector core = problem.matrix.at(p) * x;
  if (problem.h) core += problem.h->value(x);
  if (!problem.fan) return VPolytope::singleton(core);
  std::vector<Vector> verts;
  verts.reserve(problem.fan->matrices().size());
  for (const auto& L : problem.fan->matrices()) verts.push_back(core + L * x);
  return VPolytope(std::move(verts));
}

double merit(const SviProblem& problem, double p, const Vector& x) {
  return excess(evaluate(problem, p, x), SumSet::of_cone(problem.cone));
}

double constrained_merit(const SviProblem& problem, double p, const Vector& x, double kappa) {
  if (kappa < 0.0) throw InvalidArgument("constrained merit: kappa must be nonnegative");
  const double psi = merit(problem, p, x);
  if (problem.constraint.is_all_space()) return psi;
  return psi + kappa * problem.constraint.distance(p, x);
}

LipschitzBudget lipschitz_budget(const SviProblem& problem) {
  LipschitzBudget b;
  if (problem.h) b.ell_h = problem.h->declared_lipschitz();
  if (problem.fan) b.ell_fan = problem.fan->lipschitz();
  b.ell_total = b.ell_h + b.ell_fan;
  return b;
}

SetMap SetMap::negated() const {
  SetMap out;
  out.in_dim = in_dim;
  out.out_dim = out_dim;
  out.lipschitz = lipschitz;
  out.value = [f = value](const Vector& x) {
    std::vector<Vector> verts = f(x).vertices();
    for (auto& v : verts) v = -v;
    return VPolytope(std::move(verts));
  };
  if (linearization) {
    out.linearization = [J = linearization](const Vector& x) { return Matrix(-J(x)); };
  }
  if (vertex_linearization) {
    out.vertex_linearization = [Js = vertex_linearization](const Vector& x) {
      auto mats = Js(x);
      for (auto& J : mats) J = -J;
      return mats;
    };
  }
  return out;
}

SetMap map_at(const SviProblem& problem, double p) {
  SetMap out;
  out.in_dim = problem.n();
  out.out_dim = problem.m();
  const Matrix M = problem.matrix.at(p);
  const auto budget = lipschitz_budget(problem);
  out.lipschitz = spectral_norm(M) + budget.ell_total;
  out.value = [M, h = problem.h, fan = problem.fan](const Vector& x) {
    if (x.size() != M.cols()) throw DimensionMismatch("map: wrong input dimension");
    Vector core = M * x;
    if (h) core += h->value(x);
    if (!fan) return VPolytope::singleton(core);
    std::vector<Vector> verts;
    verts.reserve(fan->matrices().size());
    for (const auto& L : fan->matrices()) verts.push_back(core + L * x);
    return VPolytope(std::move(verts));
  };
  out.linearization = [M, h = problem.h](const Vector& x) {
    Matrix J = M;
    if (h) J += h->jacobian(x);
    return J;
  };
  out.vertex_linearization = [M, h = problem.h, fan = problem.fan](const Vector& x) {
    Matrix J = M;
    if (h) J += h->jacobian(x);
    if (!fan) return std::vector<Matrix>{J};
    std::vector<Matrix> mats;
    for (const auto& L : fan->matrices()) mats.push_back(J + L);
    return mats;
  };
  return out;
}

}  // namespace svi
