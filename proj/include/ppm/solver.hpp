#pragma once

// Riemannian conjugate gradient on the beamformer/position product manifold
// (inner loop) wrapped in an exterior-penalty continuation on the placement
// constraints (outer loop).

#include <optional>
#include <vector>

#include "ppm/geometry.hpp"
#include "ppm/objective.hpp"

namespace ppm {

// How the first trial step of each line search is chosen.
enum class TrialStep {
  // psi = 2 (phi_{l-1} - phi_l) / |<grad_l, d_l>|, clamped.
  PreviousDecrease,
  // One probe at the PreviousDecrease step, then the vertex of the parabola
  // through phi(0), its slope and the probe value.
  QuadraticFit,
};

// Diagonal preconditioner applied to the gradient before it enters the
// search direction. Wavenumber scales the position block by
// (lambda / 2 pi)^2, so positions move in phase units rather than meters.
// HessianDiagonal divides every phase and position coordinate by the
// magnitude of its own curvature. Hessian applies the inverse of the full
// phase/position Hessian with eigenvalues replaced by their floored
// magnitudes (a modified Newton step).
enum class Preconditioner { None, Wavenumber, HessianDiagonal, Hessian };

struct PcgdConfig {
  double tau{0.5};            // backtracking ratio
  double armijo_coeff{1e-4};  // sufficient-decrease coefficient
  double psi0{1.0};           // first trial step
  int max_inner_iters{500};
  double eps_inner{1e-8};
  // consecutive iterations with |dphi| < eps_inner before declaring convergence
  int eps_patience{2};
  int max_backtracks{50};
  // Restart when |<g_new, P g_old>| >= restart_threshold * <g_new, P g_new>;
  // infinity never restarts on this test.
  double restart_threshold{0.2};
  bool adaptive_initial_step{true};
  TrialStep trial_step{TrialStep::QuadraticFit};
  Preconditioner preconditioner{Preconditioner::Hessian};
  // Hold positions fixed and optimize the beamformer only.
  bool freeze_positions{false};

  void validate() const;
};

struct PpmConfig {
  PenaltyStated penalty{};
  double eps_outer{1e-8};
  int max_outer_iters{100};

  void validate() const;
};

enum class InnerExit { Converged, MaxIterations, LineSearchFailure, Stationary };

struct InnerIterate {
  double phi;
  double grad_norm;
  double step;
  int backtracks;
};

struct InnerTrace {
  double phi_start{};
  std::vector<InnerIterate> iterates;
  InnerExit exit{InnerExit::MaxIterations};
  double final_grad_norm{};

  int iterations() const { return static_cast<int>(iterates.size()); }
};

struct OuterRecord {
  double phi;
  double secrecy_rate_unclamped;
  double secrecy_rate;
  double sigma;
  double rho;  // penalty factor used for this outer iteration's inner solve
  int inner_iterations;
  double grad_norm;
  double seconds;
};

struct SolveTrace {
  std::vector<OuterRecord> outer;
  bool feasible_at_tolerance{false};
  bool converged{false};

  int outer_iterations() const { return static_cast<int>(outer.size()); }
  int inner_iterations() const;
};

/// PR+ coefficient max(0, <g_new, g_new - T g_old> / |g_old|^2); nullopt
/// requests a steepest-descent restart.
std::optional<double> pr_beta(const TangentVectord& grad_new, const TangentVectord& grad_old_transported,
                              double grad_old_normsq);

/// Preconditioned PR+: max(0, <z_new, g_new - T g_old> / <z_old, g_old>)
/// with z = P g.
std::optional<double> pr_beta(const TangentVectord& grad_new, const TangentVectord& precond_grad_new,
                              const TangentVectord& grad_old_transported, double precond_grad_old_normsq);

/// -grad + beta * prev, reset to -grad if that is not a descent direction.
TangentVectord descent_direction(const TangentVectord& grad, const TangentVectord& prev_dir_transported, double beta);

/// Same with a preconditioned gradient z = P grad in place of grad.
TangentVectord descent_direction(const TangentVectord& grad, const TangentVectord& precond_grad,
                                 const TangentVectord& prev_dir_transported, double beta);

/// z = P grad for the chosen preconditioner at `point`.
TangentVectord apply_preconditioner(const ObjectiveContextd& ctx, const DesignPointd& point,
                                    const TangentVectord& grad, double rho, Preconditioner kind,
                                    bool freeze_positions = false);

struct ArmijoResult {
  bool accepted{false};
  double step{0};
  int backtracks{0};
  DesignPointd next;
  double phi_next{0};
};

/// Backtracks psi * tau^N until the retracted trial point satisfies the
/// sufficient-decrease test. Throws InvalidInput unless <grad, direction> < 0.
ArmijoResult armijo_search(const ObjectiveContextd& ctx, const DesignPointd& point, double phi_point,
                           const TangentVectord& direction, const TangentVectord& grad, const PcgdConfig& config,
                           double rho, double psi);

/// Riemannian gradient under the sum metric (2x the Wirtinger w-gradient).
TangentVectord manifold_gradient(const ObjectiveContextd& ctx, const DesignPointd& point, double rho,
                                 bool freeze_positions = false);

struct PcgdResult {
  DesignPointd point;
  InnerTrace trace;
};

PcgdResult pcgd_solve(const ObjectiveContextd& ctx, const DesignPointd& start, double rho, const PcgdConfig& config);

struct PpmResult {
  DesignPointd point;
  SolveTrace trace;
};

PpmResult ppm_solve(const ObjectiveContextd& ctx, const DesignPointd& start, const PpmConfig& ppm_config,
                    const PcgdConfig& pcgd_config);

enum class StartGeometry {
  CenteredUla,  // centered half-wavelength ULA
  GreedyGrid,   // greedy selection from the half-wavelength grid (see sfpa_select)
};

/// Matched-phase beamformer on the chosen start geometry.
DesignPointd default_start(const ObjectiveContextd& ctx, StartGeometry geometry = StartGeometry::GreedyGrid);

/// Squared distance between stacked real coordinates (Re w, Im w, p).
double stacked_displacement_sq(const DesignPointd& a, const DesignPointd& b);

}  // namespace ppm
