#include "ppm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ppm/baselines.hpp"

namespace ppm {

namespace {

constexpr double kStationaryGradNorm = 1e-12;
constexpr double kRestartNormSq = 1e-30;
constexpr double kMinTrialStep = 1e-6;
constexpr double kMaxTrialStep = 1e2;
// The parabola vertex may undercut the decrease-based guess by a lot when
// the position block is stiff.
constexpr double kMinFittedStep = 1e-9;

// Curvatures below this fraction of the largest are lifted to it.
constexpr double kCurvatureFloor = 1e-8;
// largest step per eigenmode, in radians
constexpr double kModeStepCap = 1.0;

}  // namespace

void PcgdConfig::validate() const {
  if (!(tau > 0 && tau < 1)) throw InvalidInput("tau must lie in (0,1)");
  if (!(armijo_coeff > 0 && armijo_coeff <= 1)) throw InvalidInput("armijo_coeff must lie in (0,1]");
  if (!(psi0 > 0)) throw InvalidInput("psi0 must be positive");
  if (max_inner_iters < 0) throw InvalidInput("max_inner_iters must be nonnegative");
  if (!(eps_inner > 0)) throw InvalidInput("eps_inner must be positive");
  if (max_backtracks < 1) throw InvalidInput("max_backtracks must be at least 1");
  if (eps_patience < 1) throw InvalidInput("eps_patience must be at least 1");
  if (!(restart_threshold > 0)) throw InvalidInput("restart_threshold must be positive");
}

void PpmConfig::validate() const {
  penalty.validate();
  if (!(eps_outer > 0)) throw InvalidInput("eps_outer must be positive");
  if (max_outer_iters < 1) throw InvalidInput("max_outer_iters must be at least 1");
}

int SolveTrace::inner_iterations() const {
  int total = 0;
  for (const auto& rec : outer) total += rec.inner_iterations;
  return total;
}

std::optional<double> pr_beta(const TangentVectord& grad_new, const TangentVectord& grad_old_transported,
                              double grad_old_normsq) {
  return pr_beta(grad_new, grad_new, grad_old_transported, grad_old_normsq);
}

std::optional<double> pr_beta(const TangentVectord& grad_new, const TangentVectord& precond_grad_new,
                              const TangentVectord& grad_old_transported, double precond_grad_old_normsq) {
  if (!(precond_grad_old_normsq > kRestartNormSq)) return std::nullopt;
  return std::max(0.0, inner(precond_grad_new, grad_new - grad_old_transported) / precond_grad_old_normsq);
}

TangentVectord descent_direction(const TangentVectord& grad, const TangentVectord& prev_dir_transported, double beta) {
  return descent_direction(grad, grad, prev_dir_transported, beta);
}

TangentVectord descent_direction(const TangentVectord& grad, const TangentVectord& precond_grad,
                                 const TangentVectord& prev_dir_transported, double beta) {
  if (beta == 0.0) return -precond_grad;
  TangentVectord d = -precond_grad + beta * prev_dir_transported;
  if (!(inner(grad, d) < 0)) return -precond_grad;
  return d;
}

TangentVectord apply_preconditioner(const ObjectiveContextd& ctx, const DesignPointd& point,
                                    const TangentVectord& grad, double rho, Preconditioner kind,
                                    bool freeze_positions) {
  const double k2 = std::pow(wavenumber(ctx.wavelength()), 2);
  switch (kind) {
    case Preconditioner::None:
      return grad;
    case Preconditioner::Wavenumber:
      return {grad.dw, grad.dp / k2};
    case Preconditioner::HessianDiagonal:
    case Preconditioner::Hessian: {
      const Eigen::Index M = point.size();
      const double k = std::sqrt(k2);
      // phase units throughout: positions scaled by k
      Eigen::MatrixXd h = ratio_hessian(ctx, point);
      h.bottomRightCorner(M, M) += rho * smoothed_penalty_hessian(point.p, ctx.wavelength(), ctx.aperture());
      h.rightCols(M) /= k;
      h.bottomRows(M) /= k;
      Eigen::VectorXd g(2 * M);
      g.head(M) = point.w.conjugate().cwiseProduct(grad.dw).imag();
      g.tail(M) = grad.dp / k;
      if (freeze_positions) {
        h.bottomRows(M).setZero();
        h.rightCols(M).setZero();
        h.bottomRightCorner(M, M).diagonal().setConstant(h.topLeftCorner(M, M).diagonal().cwiseAbs().maxCoeff());
        g.tail(M).setZero();
      }

      Eigen::VectorXd z;
      if (kind == Preconditioner::HessianDiagonal) {
        const Eigen::VectorXd d = h.diagonal().cwiseAbs();
        const double floor = std::max(kCurvatureFloor * d.maxCoeff(), std::numeric_limits<double>::min());
        z = g.cwiseQuotient(d.cwiseMax(floor));
      } else {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
        const Eigen::VectorXd lam = eig.eigenvalues().cwiseAbs();
        const double floor = std::max(kCurvatureFloor * lam.maxCoeff(), std::numeric_limits<double>::min());
        const Eigen::VectorXd c = eig.eigenvectors().transpose() * g;
        const Eigen::VectorXd scale = lam.cwiseMax(floor).cwiseMax(c.cwiseAbs() / kModeStepCap);
        z = eig.eigenvectors() * c.cwiseQuotient(scale);
      }
      TangentVectord out;
      out.dw = std::complex<double>(0, 1) * point.w.cwiseProduct(z.head(M).cast<std::complex<double>>());
      out.dp = z.tail(M) / k;
      return out;
    }
  }
  return grad;
}

TangentVectord manifold_gradient(const ObjectiveContextd& ctx, const DesignPointd& point, double rho,
                                 bool freeze_positions) {
  const auto egrad = euclidean_gradient(ctx, point, rho);
  TangentVectord grad = riemannian_gradient<double>(2.0 * egrad.w, egrad.p, point);
  if (freeze_positions) grad.dp.setZero();
  return grad;
}

ArmijoResult armijo_search(const ObjectiveContextd& ctx, const DesignPointd& point, double phi_point,
                           const TangentVectord& direction, const TangentVectord& grad, const PcgdConfig& config,
                           double rho, double psi) {
  const double slope = inner(grad, direction);
  if (!(slope < 0)) throw InvalidInput("line search needs a descent direction");

  ArmijoResult result;
  double step = psi;
  for (int n = 0; n <= config.max_backtracks; ++n, step *= config.tau) {
    DesignPointd trial;
    try {
      trial = step_and_retract(point, direction, step);
    } catch (const DegenerateRetraction&) {
      continue;
    }
    const double phi_trial = phi(ctx, trial, rho);
    if (phi_trial <= phi_point + config.armijo_coeff * step * slope) {
      result.accepted = true;
      result.step = step;
      result.backtracks = n;
      result.next = std::move(trial);
      result.phi_next = phi_trial;
      return result;
    }
  }
  result.backtracks = config.max_backtracks;
  return result;
}

namespace {

double fitted_trial_step(const ObjectiveContextd& ctx, const DesignPointd& point, double phi_point,
                         const TangentVectord& direction, double slope, double rho, double guess) {
  try {
    const double probe = phi(ctx, step_and_retract(point, direction, guess), rho);
    const double curvature = probe - phi_point - slope * guess;
    if (curvature > 0) return std::clamp(-slope * guess * guess / (2.0 * curvature), kMinFittedStep, kMaxTrialStep);
  } catch (const DegenerateRetraction&) {
  }
  return guess;
}

}  // namespace

PcgdResult pcgd_solve(const ObjectiveContextd& ctx, const DesignPointd& start, double rho, const PcgdConfig& config) {
  config.validate();
  PcgdResult out{start, {}};
  InnerTrace& trace = out.trace;

  DesignPointd& point = out.point;
  double phi_now = phi(ctx, point, rho);
  TangentVectord grad = manifold_gradient(ctx, point, rho, config.freeze_positions);
  TangentVectord z = apply_preconditioner(ctx, point, grad, rho, config.preconditioner, config.freeze_positions);
  trace.phi_start = phi_now;
  trace.final_grad_norm = norm(grad);
  if (trace.final_grad_norm < kStationaryGradNorm) {
    trace.exit = InnerExit::Stationary;
    return out;
  }

  TangentVectord dir = -z;
  double last_decrease = 0.0;
  int small_changes = 0;
  trace.exit = InnerExit::MaxIterations;
  for (int l = 0; l < config.max_inner_iters; ++l) {
    const double slope = inner(grad, dir);
    double psi = config.psi0;
    if (config.adaptive_initial_step && l > 0)
      psi = std::clamp(2.0 * last_decrease / std::abs(slope), kMinTrialStep, kMaxTrialStep);
    if (config.trial_step == TrialStep::QuadraticFit)
      psi = fitted_trial_step(ctx, point, phi_now, dir, slope, rho, psi);

    ArmijoResult ls = armijo_search(ctx, point, phi_now, dir, grad, config, rho, psi);
    if (!ls.accepted) {
      trace.exit = InnerExit::LineSearchFailure;
      break;
    }

    const double decrease = phi_now - ls.phi_next;
    TangentVectord grad_new = manifold_gradient(ctx, ls.next, rho, config.freeze_positions);
    TangentVectord z_new = apply_preconditioner(ctx, ls.next, grad_new, rho, config.preconditioner, config.freeze_positions);
    trace.iterates.push_back({ls.phi_next, norm(grad_new), ls.step, ls.backtracks});

    const TangentVectord grad_old_t = transport(grad, ls.next);
    const TangentVectord z_old_t = transport(z, ls.next);
    const TangentVectord dir_t = transport(dir, ls.next);
    const double old_normsq = inner(z, grad);

    point = std::move(ls.next);
    phi_now = ls.phi_next;
    grad = std::move(grad_new);
    z = std::move(z_new);
    trace.final_grad_norm = norm(grad);
    last_decrease = decrease;

    small_changes = std::abs(decrease) < config.eps_inner ? small_changes + 1 : 0;
    if (small_changes >= config.eps_patience) {
      trace.exit = InnerExit::Converged;
      break;
    }
    if (trace.final_grad_norm < kStationaryGradNorm) {
      trace.exit = InnerExit::Stationary;
      break;
    }
    auto beta = pr_beta(grad, z, grad_old_t, old_normsq);
    // successive preconditioned gradients far from orthogonal: restart
    if (std::abs(inner(grad, z_old_t)) >= config.restart_threshold * inner(grad, z)) beta.reset();
    dir = descent_direction(grad, z, dir_t, beta.value_or(0.0));
  }
  return out;
}

double stacked_displacement_sq(const DesignPointd& a, const DesignPointd& b) {
  return (a.w - b.w).squaredNorm() + (a.p - b.p).squaredNorm();
}

PpmResult ppm_solve(const ObjectiveContextd& ctx, const DesignPointd& start, const PpmConfig& ppm_config,
                    const PcgdConfig& pcgd_config) {
  ppm_config.validate();
  pcgd_config.validate();
  using Clock = std::chrono::steady_clock;

  const auto& pen = ppm_config.penalty;
  double rho = pen.rho;
  double eta = pen.eta;
  PpmResult out{start, {}};
  const double lambda = ctx.wavelength();
  const double aperture = ctx.aperture();

  for (int j = 0; j < ppm_config.max_outer_iters; ++j) {
    const auto t0 = Clock::now();
    PcgdResult inner_result = pcgd_solve(ctx, out.point, rho, pcgd_config);
    const double sigma = max_violation(inner_result.point.p, lambda, aperture);
    const double displacement = stacked_displacement_sq(inner_result.point, out.point);
    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    const double rate = secrecy_rate_unclamped(ctx.scenario(), inner_result.point);
    out.trace.outer.push_back({phi(ctx, inner_result.point, rho), rate, std::max(0.0, rate), sigma, rho,
                               inner_result.trace.iterations(), inner_result.trace.final_grad_norm, seconds});
    out.point = std::move(inner_result.point);

    if (sigma > eta) rho /= pen.c1;
    eta = pen.c2 * sigma;

    if (sigma <= pen.sigma_min && displacement < ppm_config.eps_outer) {
      out.trace.converged = true;
      break;
    }
  }
  out.trace.feasible_at_tolerance = max_violation(out.point.p, lambda, aperture) <= pen.sigma_min;
  return out;
}

DesignPointd default_start(const ObjectiveContextd& ctx, StartGeometry geometry) {
  const auto& sc = ctx.scenario();
  RVecd p;
  if (geometry == StartGeometry::GreedyGrid) {
    const RVecd grid = candidate_grid(sc.wavelength, sc.aperture);
    const auto chosen = sfpa_select(ctx);
    p.resize(sc.num_antennas);
    for (int m = 0; m < sc.num_antennas; ++m) p[m] = grid[chosen[m]];
  } else {
    p = centered_ula(sc.num_antennas, sc.wavelength, sc.aperture);
  }
  CVecd w = matched_phases(sc, p);
  return {std::move(w), std::move(p)};
}

}  // namespace ppm
