#pragma once

// Sampling-based certification of the metric C-increase (and C-decrease) property.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "svi/geometry.hpp"
#include "svi/setmaps.hpp"

namespace svi {

struct SamplingConfig {
  std::vector<double> radii{1.0, 0.5, 0.25, 0.125};
  std::size_t directions = 128;
  std::size_t rounds = 3;
  double tolerance = 1e-7;
  double alpha_max = 16.0;
  /// Scale the radii by min(1, merit(x)/lipschitz) when x is not a solution, so that the
  /// probed balls stay in the regime where the property is local.
  bool adaptive_radius = true;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class IncreaseMode { Increase, Decrease };

struct IncreaseEstimate {
  Vector x;
  double alpha_lo = 1.0;
  double alpha_hi = 1.0;
  /// Largest radius probed (the δ of the definition, as sampled).
  double delta_used = 0.0;
  /// (r, u): u certifies alpha_lo at radius r.
  std::vector<std::pair<double, Vector>> witnesses;
  IncreaseMode mode = IncreaseMode::Increase;
  /// Radius at which alpha_hi was refuted; absent when alpha_max was reached.
  std::optional<double> refuting_radius;
  /// True when alpha_max itself admits witnesses (alpha_hi is then only the cap).
  bool capped = false;
  double radius_scale = 1.0;
};

/// Searches u ∈ B(x,r) with B(G(u), αr) ⊆ B(G(x) + C, r); returns the first one found.
std::optional<Vector> check_increase(const SetMap& G, const PolyCone& cone, const Vector& x,
                                     double alpha, double r, const SamplingConfig& cfg = {});

/// Bisection bracket for the exact bound inc(G, C, x), or dec(G, C, x) = inc(−G, C, x).
IncreaseEstimate estimate_bound(const SetMap& G, const PolyCone& cone, const Vector& x,
                                const SamplingConfig& cfg = {},
                                IncreaseMode mode = IncreaseMode::Increase);

/// Halton points in an axis-aligned box.
struct PointSampling {
  Vector lower;
  Vector upper;
  std::size_t count = 32;
};

std::vector<Vector> halton_points(const PointSampling& spec);

struct InfimumResult {
  double value = 0.0;
  std::size_t samples = 0;
  double argmin_p = 0.0;
  Vector argmin_x;
};

enum class InfimumVariant { Unconstrained, Constrained };

/// Sampled α_{F,C} (or α̃ restricted to x ∈ R(p)): minimum alpha_lo over the sample points
/// at which F(p,x) ⊄ C.
InfimumResult global_infimum(const SviProblem& problem, const std::vector<double>& p_grid,
                             const PointSampling& xs, const SamplingConfig& cfg = {},
                             InfimumVariant variant = InfimumVariant::Unconstrained);

/// Generic form: map factory p ↦ G(p,·), point filter (p, x) ↦ include?, and mode.
InfimumResult global_infimum(const std::function<SetMap(double)>& map_at_p, const PolyCone& cone,
                             const std::vector<double>& p_grid, const PointSampling& xs,
                             const std::function<bool(double, const Vector&)>& include,
                             const SamplingConfig& cfg, IncreaseMode mode);

/// (1 − ℓ)·inc; throws HypothesisViolated unless ℓ < 1 − 1/inc.
double perturbed_bound(double base_inc, double ell);

}  // namespace svi
