#pragma once

// Problem data: parametric maps F(p,x) = M(p)x + h(x) + H_L(x), constraint families R(p),
// and the merit functions built on top of them.

#include <functional>
#include <memory>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "svi/geometry.hpp"

namespace svi {

/// Compactly generated fan x ↦ conv{Λᵢ x}.
class FanSpec {
 public:
  explicit FanSpec(std::vector<Matrix> extreme_matrices);

  const std::vector<Matrix>& matrices() const { return matrices_; }
  std::size_t in_dim() const { return static_cast<std::size_t>(matrices_.front().cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(matrices_.front().rows()); }
  /// max ‖Λᵢ‖₂ over the extreme matrices.
  double lipschitz() const { return lipschitz_; }

  friend bool operator==(const FanSpec& a, const FanSpec& b) {
    return same_entries(a.matrices_, b.matrices_);
  }

 private:
  std::vector<Matrix> matrices_;
  double lipschitz_ = 0.0;
};

/// 2×2 rotation by p scaled by lambda; clockwise selects O_pᵀ.
struct RotationScaled {
  double lambda = 1.0;
  bool clockwise = false;
  friend bool operator==(const RotationScaled&, const RotationScaled&) = default;
};

struct ConstantMatrix {
  Matrix matrix;
  friend bool operator==(const ConstantMatrix& a, const ConstantMatrix& b) {
    return same_entries(a.matrix, b.matrix);
  }
};

/// Piecewise-linear interpolation between (p, matrix) knots.
struct InterpolatedTable {
  std::vector<double> knots;
  std::vector<Matrix> matrices;
  friend bool operator==(const InterpolatedTable& a, const InterpolatedTable& b) {
    return a.knots == b.knots && same_entries(a.matrices, b.matrices);
  }
};

class ParamMatrixFamily {
 public:
  using Variant = std::variant<RotationScaled, ConstantMatrix, InterpolatedTable>;

  ParamMatrixFamily(Variant v);
  template <class T>
    requires std::is_constructible_v<Variant, T> && (!std::is_same_v<std::decay_t<T>, Variant>)
  ParamMatrixFamily(T v) : ParamMatrixFamily(Variant(std::move(v))) {}

  const Variant& variant() const { return variant_; }
  Matrix at(double p) const;
  std::size_t in_dim() const;
  std::size_t out_dim() const;

  friend bool operator==(const ParamMatrixFamily& a, const ParamMatrixFamily& b) {
    return a.variant_ == b.variant_;
  }

 private:
  Variant variant_;
};

/// O_p = [[cos p, −sin p], [sin p, cos p]].
Matrix rotation(double p);

/// One output coordinate of h: a + linᵀx + c·|x_j − d| with c ≤ 0.
struct ConcaveComponent {
  double a = 0.0;
  Vector lin;
  double c = 0.0;
  std::size_t j = 0;
  double d = 0.0;
  friend bool operator==(const ConcaveComponent& x, const ConcaveComponent& y) {
    return x.a == y.a && same_entries(x.lin, y.lin) && x.c == y.c && x.j == y.j && x.d == y.d;
  }
};

/// Concave single-valued term with a declared Lipschitz constant.
class ConcaveTerm {
 public:
  ConcaveTerm(std::vector<ConcaveComponent> components, double declared_lipschitz);

  const std::vector<ConcaveComponent>& components() const { return components_; }
  double declared_lipschitz() const { return declared_lipschitz_; }
  /// Exact Lipschitz constant: the largest operator norm over the affine pieces.
  double computed_lipschitz() const;

  std::size_t in_dim() const { return static_cast<std::size_t>(components_.front().lin.size()); }
  std::size_t out_dim() const { return components_.size(); }

  Vector value(const Vector& x) const;
  /// Jacobian of the active piece (kinks resolved with zero slope).
  Matrix jacobian(const Vector& x) const;

  friend bool operator==(const ConcaveTerm& a, const ConcaveTerm& b) {
    return a.components_ == b.components_ && a.declared_lipschitz_ == b.declared_lipschitz_;
  }

 private:
  std::vector<ConcaveComponent> components_;
  double declared_lipschitz_ = 0.0;
};

struct AllSpace {
  friend bool operator==(const AllSpace&, const AllSpace&) = default;
};

/// Box [lower + p·lower_slope, upper + p·upper_slope]; slopes default to zero.
struct Box {
  Vector lower, upper;
  Vector lower_slope, upper_slope;
  friend bool operator==(const Box& a, const Box& b) {
    return same_entries(a.lower, b.lower) && same_entries(a.upper, b.upper) &&
           same_entries(a.lower_slope, b.lower_slope) && same_entries(a.upper_slope, b.upper_slope);
  }
};

/// Ball with center c + p·center_slope and radius ρ + p·radius_slope.
struct Ball {
  Vector center, center_slope;
  double radius = 1.0;
  double radius_slope = 0.0;
  friend bool operator==(const Ball& a, const Ball& b) {
    return same_entries(a.center, b.center) && same_entries(a.center_slope, b.center_slope) &&
           a.radius == b.radius && a.radius_slope == b.radius_slope;
  }
};

struct PolytopeConstraint {
  VPolytope polytope;
  friend bool operator==(const PolytopeConstraint& a, const PolytopeConstraint& b) {
    return a.polytope == b.polytope;
  }
};

/// Parametric closed convex constraint set R(p) with exact projection.
class ConstraintFamily {
 public:
  using Variant = std::variant<AllSpace, Box, Ball, PolytopeConstraint>;

  ConstraintFamily();
  ConstraintFamily(Variant v);
  template <class T>
    requires std::is_constructible_v<Variant, T> && (!std::is_same_v<std::decay_t<T>, Variant>)
  ConstraintFamily(T v) : ConstraintFamily(Variant(std::move(v))) {}

  const Variant& variant() const { return variant_; }
  bool is_all_space() const { return std::holds_alternative<AllSpace>(variant_); }
  /// Dimension of the ambient space, absent for AllSpace.
  std::optional<std::size_t> dim() const;

  Projection project(double p, const Vector& x) const;
  double distance(double p, const Vector& x) const { return project(p, x).distance; }
  bool contains(double p, const Vector& x, double tol = kGeomTol) const {
    return distance(p, x) <= tol;
  }
  /// Vertex list when R(p) is a polytope (box corners or the given vertices).
  std::optional<std::vector<Vector>> vertices(double p) const;

  friend bool operator==(const ConstraintFamily& a, const ConstraintFamily& b) {
    return a.variant_ == b.variant_;
  }

 private:
  Variant variant_;
  std::shared_ptr<const ConvexBody> body_;  // cached for the polytope variant
};

struct SviProblem {
  ParamMatrixFamily matrix;
  std::optional<ConcaveTerm> h;
  std::optional<FanSpec> fan;
  PolyCone cone;
  ConstraintFamily constraint;
  std::optional<double> declared_alpha;

  /// Checks dimensional consistency; throws DimensionMismatch / InvalidArgument.
  void validate() const;
  std::size_t n() const { return matrix.in_dim(); }
  std::size_t m() const { return matrix.out_dim(); }

  friend bool operator==(const SviProblem&, const SviProblem&) = default;
};

VPolytope evaluate(const SviProblem& problem, double p, const Vector& x);
double merit(const SviProblem& problem, double p, const Vector& x);
double constrained_merit(const SviProblem& problem, double p, const Vector& x, double kappa);

struct LipschitzBudget {
  double ell_h = 0.0;
  double ell_fan = 0.0;
  double ell_total = 0.0;
};
LipschitzBudget lipschitz_budget(const SviProblem& problem);

/// A set-valued map frozen at one parameter value, x ↦ VPolytope in ℝᵐ.
struct SetMap {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::function<VPolytope(const Vector&)> value;
  /// Optional Jacobian of a single-valued core, used for heuristic search directions.
  std::function<Matrix(const Vector&)> linearization;
  /// Optional Jacobians of the vertex expressions, aligned with value(x).vertices().
  std::function<std::vector<Matrix>(const Vector&)> vertex_linearization;
  /// Upper bound on the Hausdorff-Lipschitz constant of the map.
  double lipschitz = 0.0;

  /// x ↦ −G(x).
  SetMap negated() const;
};

SetMap map_at(const SviProblem& problem, double p);

}  // namespace svi
