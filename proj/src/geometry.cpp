#include "svi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "svi/errors.hpp"

namespace svi {
namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(got));
  }
}

void require_finite(const Vector& v, const char* what) {
  if (v.size() == 0) throw InvalidArgument(std::string(what) + ": empty vector");
  if (!all_finite(v)) throw InvalidArgument(std::string(what) + ": non-finite coordinate");
}

// Solves the equality-constrained least-squares subproblem on the passive set:
//   min ‖y − A_P z‖²  s.t.  Σ_{base ∈ P} z = 1.
// Falls back to a minimum-norm solution when the KKT matrix is singular.
Vector solve_passive(const Matrix& gram, const Vector& c, const std::vector<std::size_t>& passive,
                     std::size_t num_base) {
  const auto k = static_cast<Eigen::Index>(passive.size());
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  Vector rhs = Vector::Zero(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ia = static_cast<Eigen::Index>(passive[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < k; ++b) {
      kkt(a, b) = gram(ia, static_cast<Eigen::Index>(passive[static_cast<std::size_t>(b)]));
    }
    rhs(a) = c(ia);
    if (passive[static_cast<std::size_t>(a)] < num_base) {
      kkt(a, k) = 1.0;
      kkt(k, a) = 1.0;
    }
  }
  rhs(k) = 1.0;
  Eigen::FullPivLU<Matrix> lu(kkt);
  Vector sol;
  if (lu.isInvertible()) {
    sol = lu.solve(rhs);
  } else {
    sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(kkt).solve(rhs);
  }
  return sol.head(k);
}

// Unit vector orthogonal to the columns of `basis` (dim × (dim−1)), via the SVD null space.
Vector orthogonal_complement(const Matrix& basis) {
  Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeFullU);
  return svd.matrixU().col(basis.rows() - 1);
}

}  // namespace

bool all_finite(const Vector& v) { return v.allFinite(); }

// Monotone-chain hull in the plane; returns the extreme points in counterclockwise order.
std::vector<Vector> planar_hull(std::vector<Vector> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vector& a, const Vector& b) { return (a - b).norm() <= 1e-14; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
  };
  std::vector<Vector> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

PolyCone::PolyCone(std::vector<Vector> generators) : generators_(std::move(generators)) {
  if (generators_.empty()) throw InvalidArgument("cone: no generators");
  const auto m = static_cast<std::size_t>(generators_.front().size());
  bool nonzero = false;
  for (const auto& g : generators_) {
    require_finite(g, "cone generator");
    require_dim(m, static_cast<std::size_t>(g.size()), "cone generator");
    if (g.norm() > kGeomTol) nonzero = true;
  }
  if (!nonzero) throw InvalidArgument("cone: all generators are zero");

  std::vector<Vector> unit;
  for (const auto& g : generators_) {
    if (g.norm() > kGeomTol) unit.push_back(g / g.norm());
  }
  pointed_ = hull_distance(Vector::Zero(static_cast<Eigen::Index>(m)), unit) > 1e-9;

  const ConvexBody body(SumSet::of_cone(*this));
  bool whole_space = true;
  for (std::size_t j = 0; j < m && whole_space; ++j) {
    Vector e = Vector::Unit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
    whole_space = body.distance(e) <= kGeomTol && body.distance(-e) <= kGeomTol;
  }
  if (whole_space) throw InvalidArgument("cone: generators span the whole space");
}

PolyCone PolyCone::nonnegative_orthant(std::size_t dim) {
  std::vector<Vector> gens;
  for (std::size_t j = 0; j < dim; ++j) {
    gens.push_back(Vector::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(j)));
  }
  return PolyCone(std::move(gens));
}

bool PolyCone::contains(const Vector& y, double tol) const {
  return project_dist(y, SumSet::of_cone(*this)).distance <= tol;
}

bool operator==(const PolyCone& a, const PolyCone& b) {
  return same_entries(a.generators_, b.generators_);
}

VPolytope::VPolytope(std::vector<Vector> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw InvalidArgument("polytope: empty vertex list");
  const auto m = static_cast<std::size_t>(vertices_.front().size());
  for (const auto& v : vertices_) {
    require_finite(v, "polytope vertex");
    require_dim(m, static_cast<std::size_t>(v.size()), "polytope vertex");
  }
}

VPolytope VPolytope::singleton(Vector v) { return VPolytope(std::vector<Vector>{std::move(v)}); }

bool operator==(const VPolytope& a, const VPolytope& b) {
  return same_entries(a.vertices_, b.vertices_);
}

SumSet::SumSet(VPolytope base_, std::optional<PolyCone> cone_)
    : base(std::move(base_)), cone(std::move(cone_)) {
  if (cone) require_dim(base.dim(), cone->dim(), "sum set cone");
}

SumSet SumSet::of_cone(const PolyCone& cone) {
  return SumSet(VPolytope::singleton(Vector::Zero(static_cast<Eigen::Index>(cone.dim()))), cone);
}

ConvexBody::ConvexBody(const SumSet& set)
    : set_(set), dim_(set.dim()), num_base_(set.base.size()) {
  std::vector<Vector> cols = set.base.vertices();
  if (set.cone) {
    for (const auto& g : set.cone->generators()) {
      const double n = g.norm();
      if (n > kGeomTol) cols.push_back(g / n);
    }
  }
  num_cols_ = cols.size();
  columns_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(num_cols_));
  for (std::size_t j = 0; j < num_cols_; ++j) columns_.col(static_cast<Eigen::Index>(j)) = cols[j];
  gram_ = columns_.transpose() * columns_;
}

Projection ConvexBody::project(const Vector& y) const {
  require_dim(dim_, static_cast<std::size_t>(y.size()), "projection point");
  if (!all_finite(y)) throw InvalidArgument("projection point: non-finite coordinate");

  const Vector c = columns_.transpose() * y;
  const double scale =
      std::max(1.0, gram_.diagonal().maxCoeff() + y.norm() * std::sqrt(gram_.diagonal().maxCoeff()));
  const double eps = 1e-13 * scale;

  // Start from the nearest base vertex.
  Vector z = Vector::Zero(static_cast<Eigen::Index>(num_cols_));
  std::size_t start = 0;
  double best = kInfiniteDistance;
  for (std::size_t j = 0; j < num_base_; ++j) {
    const double d = (columns_.col(static_cast<Eigen::Index>(j)) - y).squaredNorm();
    if (d < best) {
      best = d;
      start = j;
    }
  }
  z(static_cast<Eigen::Index>(start)) = 1.0;
  std::vector<std::size_t> passive{start};
  std::vector<bool> in_passive(num_cols_, false);
  in_passive[start] = true;
  std::vector<bool> banned(num_cols_, false);

  const std::size_t budget = 10 * num_cols_ + 50;
  std::size_t iterations = 0;
  while (true) {
    if (++iterations > budget) {
      throw NonConvergence("projection: active-set iteration budget exceeded");
    }
    const Vector w = c - gram_ * z;
    double omega = 0.0;
    std::size_t base_count = 0;
    for (auto j : passive) {
      if (j < num_base_) {
        omega += w(static_cast<Eigen::Index>(j));
        ++base_count;
      }
    }
    omega /= static_cast<double>(std::max<std::size_t>(1, base_count));

    std::size_t enter = num_cols_;
    double gain = eps;
    for (std::size_t j = 0; j < num_cols_; ++j) {
      if (in_passive[j] || banned[j]) continue;
      const double g = j < num_base_ ? w(static_cast<Eigen::Index>(j)) - omega
                                     : w(static_cast<Eigen::Index>(j));
      if (g > gain) {
        gain = g;
        enter = j;
      }
    }
    if (enter == num_cols_) break;

    passive.push_back(enter);
    in_passive[enter] = true;
    bool first = true;
    while (true) {
      const Vector s = solve_passive(gram_, c, passive, num_base_);
      if (first && s(static_cast<Eigen::Index>(passive.size() - 1)) <= 0.0) {
        // Numerically degenerate entry: the new column does not help.
        passive.pop_back();
        in_passive[enter] = false;
        banned[enter] = true;
        break;
      }
      first = false;
      if (s.minCoeff() > 0.0) {
        for (std::size_t a = 0; a < passive.size(); ++a) {
          z(static_cast<Eigen::Index>(passive[a])) = s(static_cast<Eigen::Index>(a));
        }
        std::fill(banned.begin(), banned.end(), false);
        break;
      }
      double step = 1.0;
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const double sa = s(static_cast<Eigen::Index>(a));
        if (sa <= 0.0) {
          const double za = z(static_cast<Eigen::Index>(passive[a]));
          step = std::min(step, za / (za - sa));
        }
      }
      for (std::size_t a = 0; a < passive.size(); ++a) {
        auto& za = z(static_cast<Eigen::Index>(passive[a]));
        za += step * (s(static_cast<Eigen::Index>(a)) - za);
      }
      std::vector<std::size_t> kept;
      for (auto j : passive) {
        if (z(static_cast<Eigen::Index>(j)) > 1e-15) {
          kept.push_back(j);
        } else {
          z(static_cast<Eigen::Index>(j)) = 0.0;
          in_passive[j] = false;
        }
      }
      passive = std::move(kept);
      if (passive.empty()) throw NonConvergence("projection: passive set collapsed");
    }
  }

  Projection out;
  out.point = columns_ * z;
  out.distance = (y - out.point).norm();
  return out;
}

Projection project_dist(const Vector& y, const SumSet& S) { return ConvexBody(S).project(y); }

double excess(const VPolytope& A, const ConvexBody& S) {
  require_dim(S.dim(), A.dim(), "excess");
  double worst = 0.0;
  for (const auto& v : A.vertices()) worst = std::max(worst, S.distance(v));
  return worst;
}

double excess(const VPolytope& A, const SumSet& S) { return excess(A, ConvexBody(S)); }

double hull_distance(const Vector& y, std::span<const Vector> points) {
  if (points.empty()) return kInfiniteDistance;
  return ConvexBody(SumSet(VPolytope(std::vector<Vector>(points.begin(), points.end()))))
      .distance(y);
}

double hausdorff(const VPolytope& A, const VPolytope& B) {
  require_dim(A.dim(), B.dim(), "hausdorff");
  return std::max(excess(A, SumSet(B)), excess(B, SumSet(A)));
}

std::vector<Vector> unit_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  std::vector<Vector> out;
  if (dim == 0 || count == 0) return out;
  out.reserve(count);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const double phase = std::fmod(static_cast<double>(seed % 1000003) * golden, 1.0);
  if (dim == 1) {
    for (std::size_t k = 0; k < count; ++k) out.push_back(Vector::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
    return out;
  }
  if (dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * (static_cast<double>(k) + phase) /
                       static_cast<double>(count);
      Vector d(2);
      d << std::cos(t), std::sin(t);
      out.push_back(d);
    }
    return out;
  }
  if (dim == 3) {
    for (std::size_t k = 0; k < count; ++k) {
      const double zc = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(count);
      const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      const double t = 2.0 * std::numbers::pi * std::fmod(static_cast<double>(k) * golden + phase, 1.0);
      Vector d(3);
      d << rho * std::cos(t), rho * std::sin(t), zc;
      out.push_back(d);
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  while (out.size() < count) {
    Vector d(static_cast<Eigen::Index>(dim));
    for (auto& x : d) x = normal(rng);
    if (d.norm() > 1e-12) out.push_back(d / d.norm());
  }
  return out;
}

std::size_t default_enlargement_directions(std::size_t dim) { return dim <= 2 ? 64 : 512; }

EnlargementTarget::EnlargementTarget(const SumSet& D, std::size_t directions)
    : body_(D), directions_(directions == 0 ? default_enlargement_directions(D.dim()) : directions) {
  const std::size_t m = D.dim();
  std::vector<Vector> base = D.base.vertices();
  if (m == 2) base = planar_hull(std::move(base));

  std::vector<Vector> edges;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      Vector e = base[j] - base[i];
      if (e.norm() > 1e-12) edges.push_back(e / e.norm());
    }
  }
  std::vector<Vector> gens;
  if (D.cone) {
    for (const auto& g : D.cone->generators()) {
      if (g.norm() > kGeomTol) gens.push_back(g / g.norm());
    }
  }
  edges.insert(edges.end(), gens.begin(), gens.end());

  Matrix E(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(edges.size()));
  for (std::size_t j = 0; j < edges.size(); ++j) E.col(static_cast<Eigen::Index>(j)) = edges[j];
  std::size_t rank = 0;
  if (!edges.empty()) {
    Eigen::FullPivLU<Matrix> lu(E);
    lu.setThreshold(1e-10);
    rank = static_cast<std::size_t>(lu.rank());
  }
  full_dimensional_ = rank == m;
  if (!full_dimensional_) {
    exact_ = m <= 3;
    if (edges.empty()) {
      flat_normal_ = Vector::Unit(static_cast<Eigen::Index>(m), 0);
    } else {
      Eigen::JacobiSVD<Matrix> svd(E, Eigen::ComputeFullU);
      flat_normal_ = svd.matrixU().col(static_cast<Eigen::Index>(m) - 1);
    }
    if (!exact_) sample_dirs_ = unit_directions(m, directions_);
    return;
  }

  auto add_normal = [&](Vector n) {
    const double len = n.norm();
    if (len < 1e-10) return;
    n /= len;
    for (int sign : {1, -1}) {
      const Vector cand = static_cast<double>(sign) * n;
      bool valid = true;
      for (const auto& g : gens) {
        if (cand.dot(g) > 1e-10) {
          valid = false;
          break;
        }
      }
      if (!valid) continue;
      double sigma = -kInfiniteDistance;
      for (const auto& b : base) sigma = std::max(sigma, cand.dot(b));
      normals_.push_back(cand);
      support_.push_back(sigma);
    }
  };

  constexpr std::size_t kMaxCandidates = 200000;
  if (m == 1) {
    add_normal(Vector::Constant(1, 1.0));
    exact_ = true;
  } else if (m == 2) {
    for (const auto& e : edges) {
      Vector n(2);
      n << -e(1), e(0);
      add_normal(n);
    }
    exact_ = true;
  } else if (m == 3 && edges.size() * (edges.size() - 1) / 2 <= kMaxCandidates) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      for (std::size_t j = i + 1; j < edges.size(); ++j) {
        const Eigen::Vector3d a = edges[i].head<3>(), b = edges[j].head<3>();
        add_normal(Vector(a.cross(b)));
      }
    }
    exact_ = true;
  } else if (m == 4 && edges.size() <= 60) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      for (std::size_t j = i + 1; j < edges.size(); ++j) {
        for (std::size_t k = j + 1; k < edges.size(); ++k) {
          Matrix basis(4, 3);
          basis << edges[i], edges[j], edges[k];
          Eigen::FullPivLU<Matrix> lu(basis);
          lu.setThreshold(1e-10);
          if (lu.rank() == 3) add_normal(orthogonal_complement(basis));
        }
      }
    }
    exact_ = true;
  }
  if (!exact_) {
    normals_.clear();
    support_.clear();
    sample_dirs_ = unit_directions(m, directions_);
  }
}

double EnlargementTarget::signed_offset(const Vector& v) const {
  const double d = body_.distance(v);
  if (d > kGeomTol || !full_dimensional_ || normals_.empty()) return d;
  double offset = -kInfiniteDistance;
  for (std::size_t i = 0; i < normals_.size(); ++i) {
    offset = std::max(offset, normals_[i].dot(v) - support_[i]);
  }
  return offset;
}

EnlargementTarget::BallSup EnlargementTarget::ball_sup(const Vector& v, double s) const {
  const auto proj = body_.project(v);
  const double d = proj.distance;
  BallSup out;
  if (d > kGeomTol) {
    out.value = d + s;
    out.direction = (v - proj.point) / d;
    return out;
  }

  if (exact_) {
    if (!full_dimensional_ || normals_.empty()) {
      out.value = d + s;
      out.direction = flat_normal_;
      return out;
    }
    double offset = -kInfiniteDistance;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < normals_.size(); ++i) {
      const double o = normals_[i].dot(v) - support_[i];
      if (o > offset) {
        offset = o;
        arg = i;
      }
    }
    out.value = std::max(0.0, s + offset);
    out.direction = normals_[arg];
    return out;
  }

  // Sampled fallback: probe the sphere of radius s around v.
  out.value = d;
  out.direction = sample_dirs_.empty() ? Vector::Unit(v.size(), 0) : sample_dirs_.front();
  for (const auto& e : sample_dirs_) {
    const double val = body_.distance(v + s * e);
    if (val > out.value) {
      out.value = val;
      out.direction = e;
    }
  }
  return out;
}

InclusionVerdict enlargement_inclusion(const VPolytope& A, double s, const EnlargementTarget& D,
                                       double r) {
  require_dim(D.body().dim(), A.dim(), "enlargement inclusion");
  if (s < 0.0 || r < 0.0) throw InvalidArgument("enlargement inclusion: negative radius");

  InclusionVerdict verdict;
  verdict.exact = D.exact();

  std::vector<double> dists;
  dists.reserve(A.size());
  bool analytic = true;
  double analytic_worst = 0.0;
  for (const auto& v : A.vertices()) {
    const double d = D.body().distance(v);
    dists.push_back(d);
    analytic_worst = std::max(analytic_worst, d + s);
    if (d + s > r) analytic = false;
  }
  if (analytic) {
    verdict.kind = InclusionKind::Holds;
    verdict.worst_distance = analytic_worst;
    verdict.exact = true;
    return verdict;
  }

  const double fail_tol = kGeomTol * std::max(1.0, r);
  double worst = 0.0;
  for (const auto& v : A.vertices()) {
    const auto sup = D.ball_sup(v, s);
    if (sup.value > worst) {
      worst = sup.value;
      if (sup.value > r + fail_tol) {
        verdict.witness = v + s * sup.direction;
      }
    }
  }
  verdict.worst_distance = worst;
  if (worst > r + fail_tol) {
    verdict.kind = InclusionKind::FailsWithWitness;
  } else if (D.exact()) {
    verdict.kind = InclusionKind::Holds;
  } else {
    const double margin = 1e-6 * std::max(1.0, r);
    verdict.kind = worst <= r - margin ? InclusionKind::Holds : InclusionKind::Inconclusive;
  }
  return verdict;
}

InclusionVerdict enlargement_inclusion(const VPolytope& A, double s, const SumSet& D, double r,
                                       std::size_t dirs) {
  return enlargement_inclusion(A, s, EnlargementTarget(D, dirs), r);
}

}  // namespace svi
