#pragma once

// Ideal efficiency for parametric vector optimization: Φ(p,x) = f(p,R(p)) − f(p,x).

#include <optional>
#include <variant>
#include <vector>

#include "svi/increase.hpp"
#include "svi/parametric.hpp"
#include "svi/setmaps.hpp"
#include "svi/solver.hpp"

namespace svi {

/// f(p,x) = λ·O_p x (clockwise: λ·O_pᵀ x).
struct LinearRotation {
  double lambda = 1.0;
  bool clockwise = true;
  friend bool operator==(const LinearRotation&, const LinearRotation&) = default;
};

/// f(p,x) = (|x − φ(p)|, …, |x − φ(p)|) ∈ ℝᵐ for scalar x; φ piecewise linear through knots.
struct AbsDeviation {
  std::vector<double> knots;
  std::vector<double> values;
  std::size_t m = 2;

  double phi(double p) const;
  friend bool operator==(const AbsDeviation&, const AbsDeviation&) = default;
};

/// f(p,x) = M(p)x + b(p); b piecewise linear through knots (empty means zero).
struct AffineFamily {
  ParamMatrixFamily matrix;
  std::vector<double> b_knots;
  std::vector<Vector> b_values;

  Vector b(double p) const;
  friend bool operator==(const AffineFamily& a, const AffineFamily& b);
};

struct VopSpec {
  std::variant<LinearRotation, AbsDeviation, AffineFamily> objective;
  ConstraintFamily constraint;
  PolyCone cone;
  double objective_lipschitz = 1.0;
  /// Bounding box used to sample R(p) = ℝⁿ for nonlinear objectives.
  std::optional<std::pair<Vector, Vector>> sampling_window;
  std::size_t image_sampling = 257;
  /// Lower bound for α̲ (the decrease constant); estimated when absent.
  std::optional<double> declared_alpha;

  void validate() const;
  std::size_t n() const;
  std::size_t m() const;
  bool affine() const { return !std::holds_alternative<AbsDeviation>(objective); }

  Vector f(double p, const Vector& x) const;
  Matrix jacobian(double p, const Vector& x) const;
  /// x ↦ {f(p,x)} as a set-valued map.
  SetMap objective_map(double p) const;

  friend bool operator==(const VopSpec& a, const VopSpec& b);
};

/// Φ(p,·) with the sample of R(p) it was built from.
struct VopProblem {
  SetMap phi_map;
  std::vector<Vector> samples;
  /// Extreme points of the image sample {f(p,s)}.
  std::vector<Vector> images;
  bool exact = false;
};

VopProblem build_vop_problem(const VopSpec& spec, double p, std::size_t image_sampling = 0);

enum class IdealStatus { Found, NotFoundAfterBudget, CertifiedEmpty };

struct IdealResult {
  IdealStatus status = IdealStatus::NotFoundAfterBudget;
  Vector x;
  Vector value;
  double merit_final = 0.0;
  SolveResult certificate;
  /// False when ℓ_f ≥ α̲ − 1 and the solver ran with a reduced ℓ (error bound not guaranteed).
  bool hypothesis_met = true;
};

struct IdealOptions {
  /// Cross-check a failed descent with the brute-force oracle.
  bool oracle_on_failure = false;
  std::size_t oracle_density = 129;
};

IdealResult solve_ideal(const VopSpec& spec, double p, const Vector& x0, const SolverConfig& cfg,
                        const IdealOptions& opts = {});

struct OracleResult {
  bool empty = true;
  /// All candidates passing the ideal test, best first.
  std::vector<Vector> ideal_points;
  std::vector<Vector> values;
  /// The empty/nonempty decision differs between density d and 2d.
  bool grid_too_coarse = false;
};

OracleResult brute_force_ideal(const VopSpec& spec, double p, std::size_t grid_density);

struct IdealSweepOptions {
  SweepOptions sweep;
  bool oracle = false;
  std::size_t oracle_density = 129;
};

/// Warm-started solve_ideal per p; extra columns val_1..val_m (and oracle_status).
SweepTable ideal_value_sweep(const VopSpec& spec, const std::vector<double>& grid,
                             const Vector& x_init, const SolverConfig& cfg,
                             const IdealSweepOptions& opts = {});

/// Sampled α̲: minimum Decrease-mode alpha_lo over x ∈ R(p) with Φ(p,x) ⊄ C.
InfimumResult lower_alpha_estimate(const VopSpec& spec, const std::vector<double>& p_grid,
                                   std::size_t points, const SamplingConfig& cfg = {});

}  // namespace svi
