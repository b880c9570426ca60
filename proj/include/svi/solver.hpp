#pragma once

// Caristi-descent solver for F(p,x) ⊆ C, unconstrained and constrained to R(p).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "svi/errors.hpp"
#include "svi/geometry.hpp"
#include "svi/setmaps.hpp"

namespace svi {

struct SolverConfig {
  /// Descent constant α. Unconstrained: α > 1. Constrained: inside ((α̃−ℓ+1)/2, α̃−ℓ).
  std::optional<double> alpha;
  /// α̃ (constrained) or α̲ (ideal efficiency); defaults to the problem's declared value.
  std::optional<double> alpha_tilde;
  /// Lipschitz budget ℓ; defaults to the problem's ell_total.
  std::optional<double> ell;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
  double radius0 = 1.0;
  double radius_decay = 0.5;
  std::size_t direction_samples = 64;
  std::uint64_t rng_seed = 0;
  /// Retry once with a milder α after a stall.
  bool retry_on_stall = true;
  std::size_t max_radius_levels = 48;
  /// Declare a stall when the merit drops by less than stall_ratio·merit over stall_window
  /// accepted steps (the iterates converge to a positive level).
  std::size_t stall_window = 100;
  double stall_ratio = 1e-6;
  /// Short-window variant for a merit that has stopped moving altogether.
  std::size_t flat_window = 10;
  double flat_ratio = 1e-10;

  void validate() const;
};

enum class StepKind { Accepted, Converged, NoDescentStep };

struct StepOutcome {
  StepKind kind = StepKind::NoDescentStep;
  Vector u;
  double merit_u = 0.0;
  std::size_t radii_tried = 0;
  double last_radius = 0.0;
};

using MeritOracle = std::function<double(const Vector&)>;

/// One accepted-step search: finds u with merit(u) + k‖u−x‖ ≤ merit(x). Candidates are the
/// heuristic rays first (line search on each), then sampled directions on shrinking radii.
StepOutcome caristi_step(const MeritOracle& merit, const Vector& x, double descent_k,
                         const SolverConfig& cfg, std::span<const Vector> heuristic_dirs = {},
                         std::uint64_t stream = 0);

struct SolveResult {
  Vector x0;
  Vector x_final;
  /// Final value of the merit driven to zero: ψ (unconstrained) or ψ̃ (constrained).
  double merit_final = 0.0;
  double psi_final = 0.0;
  double dist_final = 0.0;
  std::size_t iterations = 0;
  double path_length = 0.0;
  bool caristi_certified = true;
  double bound_rhs = 0.0;
  bool bound_holds = false;
  bool converged = false;
  bool constrained = false;
  double alpha_used = 0.0;
  double alpha_tilde_used = 0.0;
  double ell_used = 0.0;
  /// Constant of the certified descent inequality: α−1, or α̃−α−ℓ.
  double descent_constant = 0.0;
  double merit_x0 = 0.0;
  std::size_t retries = 0;
  std::size_t segment_steps = 0;
  std::size_t fallback_steps = 0;
  std::vector<double> merit_trace;
  /// |dist(u,R) − (dist(x,R) − t)| for each segment step.
  std::vector<double> segment_residuals;
};

/// Solver failure carrying the state reached.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, SolveResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

class NoDescentStep : public SolverError {
 public:
  using SolverError::SolverError;
};

class MaxItersExceeded : public SolverError {
 public:
  using SolverError::SolverError;
};

/// A problem frozen at one parameter value.
struct SolveInstance {
  SetMap map;
  PolyCone cone;
  ConstraintFamily constraint;
  double p = 0.0;
  /// Increase constant: α_{F,C} (unconstrained) or α̃ / α̲ (constrained).
  std::optional<double> alpha_bound;
  double ell_default = 0.0;
  /// Use the constrained scheme even when the constraint is the whole space.
  bool force_constrained = false;

  bool constrained() const { return force_constrained || !constraint.is_all_space(); }
};

SolveInstance make_instance(const SviProblem& problem, double p);

SolveResult solve(const SolveInstance& inst, const Vector& x0, const SolverConfig& cfg);
SolveResult solve(const SviProblem& problem, double p, const Vector& x0, const SolverConfig& cfg);

/// u = x + t·(proj_R(x) − x)/dist(x,R), with the identity dist(u,R) = dist(x,R) − t checked.
Vector segment_step(const Vector& x, const ConstraintFamily& R, double p, double t);

/// Default unconstrained α = min(1.5, 0.9·α_est), kept above 1.
double default_alpha(double alpha_est);

}  // namespace svi
