#pragma once

// Cones, polytopes, Euclidean projections, metric excess and the
// enlargement-inclusion test B(A,s) ⊆ B(D,r).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace svi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Membership tolerance: a point belongs to a set when its distance is at most this.
inline constexpr double kGeomTol = 1e-9;

/// Distance to the empty set.
inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

bool all_finite(const Vector& v);

/// Exact entrywise equality; shapes may differ (then false).
template <class A, class B>
bool same_entries(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}
template <class T>
bool same_entries(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_entries(a[i], b[i])) return false;
  }
  return true;
}

/// Extreme points of a planar point set, counterclockwise; collinear points are dropped.
std::vector<Vector> planar_hull(std::vector<Vector> pts);

/// Finitely generated closed convex cone C = cone{g_1, ..., g_k} ⊂ ℝᵐ, C ≠ {0}, C ≠ ℝᵐ.
class PolyCone {
 public:
  explicit PolyCone(std::vector<Vector> generators);

  static PolyCone nonnegative_orthant(std::size_t dim);

  const std::vector<Vector>& generators() const { return generators_; }
  std::size_t dim() const { return static_cast<std::size_t>(generators_.front().size()); }

  /// True iff C ∩ (−C) = {0}.
  bool pointed() const { return pointed_; }

  bool contains(const Vector& y, double tol = kGeomTol) const;

  friend bool operator==(const PolyCone& a, const PolyCone& b);

 private:
  std::vector<Vector> generators_;
  bool pointed_ = false;
};

/// Compact convex set given by a (possibly redundant) vertex list.
class VPolytope {
 public:
  explicit VPolytope(std::vector<Vector> vertices);
  static VPolytope singleton(Vector v);

  const std::vector<Vector>& vertices() const { return vertices_; }
  std::size_t dim() const { return static_cast<std::size_t>(vertices_.front().size()); }
  std::size_t size() const { return vertices_.size(); }

  friend bool operator==(const VPolytope& a, const VPolytope& b);

 private:
  std::vector<Vector> vertices_;
};

/// Minkowski sum base ⊕ cone; an absent cone means the plain polytope.
struct SumSet {
  VPolytope base;
  std::optional<PolyCone> cone;

  SumSet(VPolytope base_, std::optional<PolyCone> cone_ = std::nullopt);
  /// The cone itself, i.e. {0} ⊕ C.
  static SumSet of_cone(const PolyCone& cone);

  std::size_t dim() const { return base.dim(); }
};

struct Projection {
  Vector point;
  double distance = 0.0;
};

/// A SumSet prepared for repeated queries: caches the generator matrix and its Gram matrix.
/// Immutable after construction, so concurrent queries are safe.
class ConvexBody {
 public:
  explicit ConvexBody(const SumSet& set);

  std::size_t dim() const { return dim_; }
  const SumSet& set() const { return set_; }

  /// Euclidean projection via an active-set nonnegative least-squares loop.
  Projection project(const Vector& y) const;
  double distance(const Vector& y) const { return project(y).distance; }

 private:
  SumSet set_;
  std::size_t dim_;
  std::size_t num_base_;
  std::size_t num_cols_;
  Matrix columns_;  // dim × (num_base + num_gens)
  Matrix gram_;
};

/// Nearest point of S to y and the Euclidean distance.
Projection project_dist(const Vector& y, const SumSet& S);

/// exc(A, S) = sup_{a ∈ A} dist(a, S); attained at a vertex of A.
double excess(const VPolytope& A, const SumSet& S);
double excess(const VPolytope& A, const ConvexBody& S);

/// Distance to the convex hull of a point list; +∞ for an empty list.
double hull_distance(const Vector& y, std::span<const Vector> points);

/// haus(A,B) = max{exc(A,B), exc(B,A)}.
double hausdorff(const VPolytope& A, const VPolytope& B);

/// Deterministic unit directions: uniform angles in 2-D, a Fibonacci sphere in 3-D,
/// seeded Gaussian directions otherwise. `seed` rotates the pattern.
std::vector<Vector> unit_directions(std::size_t dim, std::size_t count, std::uint64_t seed = 0);

/// Default direction budget of the enlargement test: 64 in ℝ², 512 otherwise.
std::size_t default_enlargement_directions(std::size_t dim);

enum class InclusionKind { Holds, FailsWithWitness, Inconclusive };

struct InclusionVerdict {
  InclusionKind kind = InclusionKind::Inconclusive;
  /// Point of B(A,s) farther than r from D (FailsWithWitness only).
  Vector witness;
  /// Largest distance to D found over the probed points of B(A,s).
  double worst_distance = 0.0;
  /// True when the probe set provably contains the maximiser (facet normals enumerated).
  bool exact = false;
};

/// D prepared for enlargement tests: projection kernel plus candidate facet normals with
/// their support values. With the facet normals the supremum of dist(·, D) over a ball
/// around a vertex is computed exactly.
class EnlargementTarget {
 public:
  explicit EnlargementTarget(const SumSet& D, std::size_t directions = 0);

  const ConvexBody& body() const { return body_; }
  bool exact() const { return exact_; }
  std::size_t directions() const { return directions_; }

  struct BallSup {
    double value = 0.0;
    Vector direction;  // unit direction e with dist(v + s e, D) = value
  };

  /// sup_{‖e‖ ≤ 1} dist(v + s e, D); exact when exact() holds.
  BallSup ball_sup(const Vector& v, double s) const;

  /// Signed offset: dist(v, D) outside D, minus the distance to the boundary inside D.
  /// Only meaningful when exact() holds.
  double signed_offset(const Vector& v) const;

 private:
  ConvexBody body_;
  std::size_t directions_;
  bool full_dimensional_ = true;
  bool exact_ = false;
  std::vector<Vector> normals_;
  std::vector<double> support_;
  Vector flat_normal_;  // unit normal to the affine hull when D is not full-dimensional
  std::vector<Vector> sample_dirs_;
};

/// Decides B(A,s) ⊆ B(D,r).
InclusionVerdict enlargement_inclusion(const VPolytope& A, double s, const SumSet& D, double r,
                                       std::size_t dirs = 0);
InclusionVerdict enlargement_inclusion(const VPolytope& A, double s, const EnlargementTarget& D,
                                       double r);

}  // namespace svi
