#include "svi/increase.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "svi/errors.hpp"

namespace svi {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t point_seed(const Vector& x, std::uint64_t seed) {
  std::uint64_t h = mix(0xcbf29ce484222325ULL, seed);
  for (double v : x) h = mix(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

Vector cone_centre(const PolyCone& cone) {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(cone.dim()));
  for (const auto& g : cone.generators()) {
    if (g.norm() > kGeomTol) c += g / g.norm();
  }
  return c.norm() > kGeomTol ? Vector(c / c.norm()) : c;
}

struct Candidate {
  Vector u;
  VPolytope Gu;
  double offset;  // max over vertices of the signed offset to G(x) + C (exact targets only)
};

// G, x and the target G(x) + C, prepared once per base point.
class Probe {
 public:
  Probe(const SetMap& G, const PolyCone& cone, const Vector& x, const SamplingConfig& cfg)
      : G_(G),
        cone_(cone),
        x_(x),
        cfg_(cfg),
        Gx_(G.value(x)),
        target_(SumSet(Gx_, cone)),
        seed_(point_seed(x, cfg.seed)) {
    if (static_cast<std::size_t>(x.size()) != G.in_dim) {
      throw DimensionMismatch("increase: point dimension differs from the map's input dimension");
    }
    merit_ = excess(Gx_, ConvexBody(SumSet::of_cone(cone)));
  }

  double merit() const { return merit_; }
  const EnlargementTarget& target() const { return target_; }

  Candidate make(const Vector& u) const {
    VPolytope Gu = G_.value(u);
    double off = -kInfiniteDistance;
    if (target_.exact()) {
      for (const auto& v : Gu.vertices()) off = std::max(off, target_.signed_offset(v));
    }
    return Candidate{u, std::move(Gu), off};
  }

  // Tolerance-free pass test used for bracketing.
  bool passes(const Candidate& c, double alpha, double r, bool strict) const {
    if (target_.exact()) {
      const double slack = strict ? 1e-12 * std::max(1.0, r) : kGeomTol * std::max(1.0, r);
      return std::max(0.0, alpha * r + c.offset) <= r + slack;
    }
    return enlargement_inclusion(c.Gu, alpha * r, target_, r).kind == InclusionKind::Holds;
  }

  // Lower is better: exact offset, or the sampled worst distance at s = 2r.
  double score(const Candidate& c, double r) const {
    if (target_.exact()) return c.offset;
    return enlargement_inclusion(c.Gu, 2.0 * r, target_, r).worst_distance;
  }

  std::vector<Vector> heuristic_directions() const {
    std::vector<Vector> dirs;
    if (!G_.linearization) return dirs;
    const Matrix J = G_.linearization(x_);
    const Matrix Jp = Eigen::CompleteOrthogonalDecomposition<Matrix>(J).pseudoInverse();
    std::vector<Vector> targets{cone_centre(cone_)};
    const ConvexBody cone_body(SumSet::of_cone(cone_));
    double worst = kGeomTol;
    Vector push;
    for (const auto& v : Gx_.vertices()) {
      const auto pr = cone_body.project(v);
      if (pr.distance > worst) {
        worst = pr.distance;
        push = pr.point - v;
      }
    }
    if (push.size() > 0) targets.push_back(push / push.norm());
    for (const auto& c : targets) {
      for (const Vector& d : {Vector(Jp * c), Vector(J.transpose() * c)}) {
        if (d.norm() > 1e-12) dirs.push_back(d / d.norm());
      }
    }
    return dirs;
  }

  // Candidate list for radius r: heuristics, sampled directions, then local refinement.
  std::vector<Candidate> candidates(double r) const {
    std::vector<Candidate> out;
    const auto n = G_.in_dim;
    for (const auto& d : heuristic_directions()) {
      for (double scale : {1.0, 0.75, 0.5, 0.25}) out.push_back(make(x_ + scale * r * d));
    }
    const auto dirs = unit_directions(n, cfg_.directions, seed_);
    for (double scale : {1.0, 0.5}) {
      for (const auto& d : dirs) out.push_back(make(x_ + scale * r * d));
    }
    if (out.empty()) return out;

    std::size_t best = 0;
    double best_score = score(out[0], r);
    for (std::size_t i = 1; i < out.size(); ++i) {
      const double s = score(out[i], r);
      if (s < best_score) {
        best_score = s;
        best = i;
      }
    }
    Vector step = out[best].u - x_;
    for (std::size_t round = 1; round <= cfg_.rounds; ++round) {
      const double spread = std::ldexp(0.5, -static_cast<int>(round - 1)) * r;
      std::vector<Vector> trials;
      for (const auto& e : unit_directions(n, 16, seed_ + round)) trials.push_back(step + spread * e);
      trials.push_back(step * (1.0 + spread / (2.0 * r)));
      trials.push_back(step * (1.0 - spread / (2.0 * r)));
      for (auto& t : trials) {
        if (t.norm() > r) t *= r / t.norm();
        if (t.norm() <= 1e-15) continue;
        out.push_back(make(x_ + t));
        const double s = score(out.back(), r);
        if (s < best_score) {
          best_score = s;
          step = t;
        }
      }
    }
    return out;
  }

  std::size_t first_pass(const std::vector<Candidate>& cands, double alpha, double r,
                         bool strict) const {
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (passes(cands[i], alpha, r, strict)) return i;
    }
    return kNone;
  }

 private:
  const SetMap& G_;
  const PolyCone& cone_;
  Vector x_;
  SamplingConfig cfg_;
  VPolytope Gx_;
  EnlargementTarget target_;
  std::uint64_t seed_;
  double merit_ = 0.0;
};

}  // namespace

void SamplingConfig::validate() const {
  if (radii.empty()) throw ConfigError("sampling: empty radius list");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ConfigError("sampling: radii must be positive");
    if (i > 0 && radii[i] >= radii[i - 1]) throw ConfigError("sampling: radii must decrease");
  }
  if (directions == 0) throw ConfigError("sampling: need at least one direction");
  if (!(tolerance > 0.0)) throw ConfigError("sampling: tolerance must be positive");
  if (!(alpha_max > 1.0)) throw ConfigError("sampling: alpha_max must exceed 1");
}

std::optional<Vector> check_increase(const SetMap& G, const PolyCone& cone, const Vector& x,
                                     double alpha, double r, const SamplingConfig& cfg) {
  if (!(alpha > 1.0)) throw InvalidArgument("check_increase: alpha must exceed 1");
  if (!(r > 0.0)) throw InvalidArgument("check_increase: r must be positive");
  const Probe probe(G, cone, x, cfg);
  const auto cands = probe.candidates(r);
  for (const auto& c : cands) {
    if (enlargement_inclusion(c.Gu, alpha * r, probe.target(), r).kind == InclusionKind::Holds) {
      return c.u;
    }
  }
  return std::nullopt;
}

IncreaseEstimate estimate_bound(const SetMap& G, const PolyCone& cone, const Vector& x,
                                const SamplingConfig& cfg, IncreaseMode mode) {
  cfg.validate();
  const SetMap Gm = mode == IncreaseMode::Decrease ? G.negated() : G;
  const Probe probe(Gm, cone, x, cfg);

  IncreaseEstimate est;
  est.x = x;
  est.mode = mode;
  if (cfg.adaptive_radius && probe.merit() > kGeomTol && Gm.lipschitz > 0.0) {
    est.radius_scale = std::min(1.0, probe.merit() / Gm.lipschitz);
  }
  std::vector<double> radii;
  for (double r : cfg.radii) radii.push_back(r * est.radius_scale);
  est.delta_used = radii.front();

  std::vector<std::vector<Candidate>> cands;
  cands.reserve(radii.size());
  for (double r : radii) cands.push_back(probe.candidates(r));

  // Index of the first radius without a witness, or kNone.
  auto refuted_at = [&](double alpha) {
    for (std::size_t k = 0; k < radii.size(); ++k) {
      if (probe.first_pass(cands[k], alpha, radii[k], true) == kNone) return k;
    }
    return kNone;
  };

  double lo = 1.0 + cfg.tolerance;
  if (const auto k = refuted_at(lo); k != kNone) {
    throw PropertyAbsent("no alpha > 1 admits increase witnesses at radius " +
                         std::to_string(radii[k]));
  }
  double hi = cfg.alpha_max;
  if (refuted_at(hi) == kNone) {
    est.capped = true;
    lo = hi;
  } else {
    est.refuting_radius = radii[refuted_at(hi)];
    while (hi - lo > cfg.tolerance * lo) {
      const double mid = 0.5 * (lo + hi);
      const auto k = refuted_at(mid);
      if (k == kNone) {
        lo = mid;
      } else {
        hi = mid;
        est.refuting_radius = radii[k];
      }
    }
  }
  est.alpha_lo = lo;
  est.alpha_hi = hi;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto i = probe.first_pass(cands[k], lo, radii[k], true);
    est.witnesses.emplace_back(radii[k], cands[k][i].u);
  }
  return est;
}

std::vector<Vector> halton_points(const PointSampling& spec) {
  if (spec.lower.size() != spec.upper.size()) {
    throw DimensionMismatch("point sampling: bound dimensions differ");
  }
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const auto n = spec.lower.size();
  if (n > 8) throw InvalidArgument("point sampling: at most 8 dimensions");
  std::vector<Vector> out;
  for (std::size_t i = 1; i <= spec.count; ++i) {
    Vector x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int b = kPrimes[j];
      double f = 1.0, h = 0.0;
      for (std::size_t k = i; k > 0; k /= static_cast<std::size_t>(b)) {
        f /= b;
        h += f * static_cast<double>(k % static_cast<std::size_t>(b));
      }
      x(j) = spec.lower(j) + h * (spec.upper(j) - spec.lower(j));
    }
    out.push_back(x);
  }
  return out;
}

InfimumResult global_infimum(const std::function<SetMap(double)>& map_at_p, const PolyCone& cone,
                             const std::vector<double>& p_grid, const PointSampling& xs,
                             const std::function<bool(double, const Vector&)>& include,
                             const SamplingConfig& cfg, IncreaseMode mode) {
  if (p_grid.empty()) throw InvalidArgument("global infimum: empty parameter grid");
  InfimumResult out;
  out.value = kInfiniteDistance;
  const auto points = halton_points(xs);
  for (double p : p_grid) {
    const SetMap G = map_at_p(p);
    for (const auto& x : points) {
      if (!include(p, x)) continue;
      const auto est = estimate_bound(G, cone, x, cfg, mode);
      ++out.samples;
      if (est.alpha_lo < out.value) {
        out.value = est.alpha_lo;
        out.argmin_p = p;
        out.argmin_x = x;
      }
    }
  }
  if (out.samples == 0) throw InvalidArgument("global infimum: no admissible sample points");
  return out;
}

InfimumResult global_infimum(const SviProblem& problem, const std::vector<double>& p_grid,
                             const PointSampling& xs, const SamplingConfig& cfg,
                             InfimumVariant variant) {
  auto include = [&](double p, const Vector& x) {
    if (variant == InfimumVariant::Constrained && !problem.constraint.contains(p, x)) return false;
    return merit(problem, p, x) > kGeomTol;
  };
  return global_infimum([&](double p) { return map_at(problem, p); }, problem.cone, p_grid, xs,
                        include, cfg, IncreaseMode::Increase);
}

double perturbed_bound(double base_inc, double ell) {
  if (!(base_inc > 1.0)) throw InvalidArgument("perturbed bound: base increase bound must exceed 1");
  if (ell < 0.0) throw InvalidArgument("perturbed bound: ell must be nonnegative");
  if (ell >= 1.0 - 1.0 / base_inc) {
    throw HypothesisViolated("perturbation constant " + std::to_string(ell) +
                             " violates ell < 1 - 1/inc = " + std::to_string(1.0 - 1.0 / base_inc));
  }
  return (1.0 - ell) * base_inc;
}

}  // namespace svi
