#include "ppm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ppm {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::FPA: return "FPA";
    case BaselineKind::RA: return "RA";
    case BaselineKind::SFPA: return "SFPA";
    case BaselineKind::GDMA: return "GDMA";
  }
  return "?";
}

std::optional<BaselineKind> parse_baseline(std::string_view tag) {
  for (auto kind : {BaselineKind::FPA, BaselineKind::RA, BaselineKind::SFPA, BaselineKind::GDMA})
    if (to_string(kind) == tag) return kind;
  return std::nullopt;
}

BaselineResult optimize_beamformer(const ObjectiveContextd& ctx, const RVecd& p, const PcgdConfig& config) {
  PcgdConfig frozen = config;
  frozen.freeze_positions = true;
  DesignPointd start{matched_phases(ctx.scenario(), p), p};
  // The penalty is constant in w; rho only has to satisfy phi's precondition.
  PcgdResult result = pcgd_solve(ctx, start, 1.0, frozen);
  return {std::move(result.point), std::move(result.trace)};
}

BaselineResult fpa_solve(const ObjectiveContextd& ctx, const PcgdConfig& config) {
  const auto& sc = ctx.scenario();
  return optimize_beamformer(ctx, centered_ula(sc.num_antennas, sc.wavelength, sc.aperture), config);
}

RVecd sample_feasible_positions(int num_antennas, double wavelength, double aperture, std::uint64_t seed) {
  const double spacing = wavelength / 2;
  const double slack = aperture - spacing * (num_antennas - 1);
  if (slack < 0) throw InvalidInput("aperture too short for the requested number of antennas");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> offsets(num_antennas);
  for (double& u : offsets) u = slack * uniform(rng);
  std::sort(offsets.begin(), offsets.end());

  RVecd p(num_antennas);
  for (int m = 0; m < num_antennas; ++m) p[m] = offsets[m] + spacing * m;
  // rounding in the offset sum can undercut a gap by an ulp
  return repair_positions(p, wavelength, aperture);
}

BaselineResult ra_solve(const ObjectiveContextd& ctx, const PcgdConfig& config, std::uint64_t seed) {
  const auto& sc = ctx.scenario();
  return optimize_beamformer(ctx, sample_feasible_positions(sc.num_antennas, sc.wavelength, sc.aperture, seed),
                             config);
}

RVecd candidate_grid(double wavelength, double aperture) {
  const double spacing = wavelength / 2;
  const int count = static_cast<int>(std::floor(aperture / spacing + 1e-9)) + 1;
  RVecd grid(count);
  for (int i = 0; i < count; ++i) grid[i] = std::min(spacing * i, aperture);
  // adjacent candidates must pass the spacing constraint exactly
  return repair_positions(grid, wavelength, aperture);
}

namespace {

constexpr double kTieTolerance = 1e-12;

double matched_rate(const ObjectiveContextd& ctx, const RVecd& p) {
  const DesignPointd point{matched_phases(ctx.scenario(), p), p};
  return secrecy_rate_unclamped(ctx.scenario(), point);
}

RVecd gather(const RVecd& grid, const std::vector<int>& idx) {
  RVecd p(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) p[static_cast<Eigen::Index>(i)] = grid[idx[i]];
  return p;
}

}  // namespace

std::vector<int> sfpa_select(const ObjectiveContextd& ctx) {
  const auto& sc = ctx.scenario();
  const RVecd grid = candidate_grid(sc.wavelength, sc.aperture);
  const int G = static_cast<int>(grid.size());
  if (G < sc.num_antennas) throw InvalidInput("candidate grid smaller than the number of antennas");
  // near-ties within rounding go to the earliest candidate
  const auto better = [](double rate, double best) {
    return std::isinf(best) || rate > best + kTieTolerance * std::max(1.0, std::abs(best));
  };

  std::vector<int> chosen{0};
  if (sc.num_antennas >= 2) {
    // every single antenna gives the same rate, so the search starts from the best pair
    double best_rate = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < G; ++a)
      for (int b = a + 1; b < G; ++b) {
        const double rate = matched_rate(ctx, gather(grid, {a, b}));
        if (better(rate, best_rate)) {
          best_rate = rate;
          chosen = {a, b};
        }
      }
  }

  std::vector<bool> used(G, false);
  for (int g : chosen) used[g] = true;
  while (static_cast<int>(chosen.size()) < sc.num_antennas) {
    int best = -1;
    double best_rate = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < G; ++g) {
      if (used[g]) continue;
      std::vector<int> trial = chosen;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), g), g);
      const double rate = matched_rate(ctx, gather(grid, trial));
      if (better(rate, best_rate)) {
        best_rate = rate;
        best = g;
      }
    }
    used[best] = true;
    chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best), best);
  }
  return chosen;
}

BaselineResult sfpa_solve(const ObjectiveContextd& ctx, const PcgdConfig& config) {
  const auto& sc = ctx.scenario();
  const RVecd grid = candidate_grid(sc.wavelength, sc.aperture);
  return optimize_beamformer(ctx, gather(grid, sfpa_select(ctx)), config);
}

RVecd repair_positions(const RVecd& p, double wavelength, double aperture) {
  const double spacing = wavelength / 2;
  const Eigen::Index M = p.size();
  const auto gap_ok = [spacing](double lo, double hi) { return lo - hi + spacing <= 0; };
  RVecd q = p.cwiseMax(0.0).cwiseMin(aperture);
  for (Eigen::Index m = 1; m < M; ++m) {
    if (gap_ok(q[m - 1], q[m])) continue;
    q[m] = q[m - 1] + spacing;
    while (!gap_ok(q[m - 1], q[m])) q[m] = std::nextafter(q[m], aperture + 1);
  }
  q[M - 1] = std::min(q[M - 1], aperture);
  for (Eigen::Index m = M - 1; m > 0; --m) {
    if (gap_ok(q[m - 1], q[m])) continue;
    q[m - 1] = std::max(q[m] - spacing, 0.0);
    while (!gap_ok(q[m - 1], q[m]) && q[m - 1] > 0) q[m - 1] = std::max(std::nextafter(q[m - 1], -1.0), 0.0);
  }
  return q;
}

BaselineResult gdma_solve(const ObjectiveContextd& ctx, const GdmaConfig& config,
                          const std::optional<DesignPointd>& start) {
  const double lambda = ctx.wavelength();
  const double aperture = ctx.aperture();
  DesignPointd point = start ? *start : default_start(ctx);
  point.p = repair_positions(point.p, lambda, aperture);
  point = retract(AmbientPointd{point.w, point.p});

  BaselineResult out{point, {}};
  InnerTrace& trace = out.trace;
  double value = ratio_objective(ctx, point);
  trace.phi_start = value;
  trace.exit = InnerExit::MaxIterations;

  for (int it = 0; it < config.max_iters; ++it) {
    const auto g = ratio_gradient(ctx, point);
    // real-coordinate gradient: 2x the Wirtinger part on w
    const CVecd dw = -2.0 * g.w;
    const RVecd dp = -g.p;
    const double slope = -(dw.squaredNorm() + dp.squaredNorm());
    if (!(slope < 0)) {
      trace.exit = InnerExit::Stationary;
      break;
    }

    bool accepted = false;
    double step = config.initial_step;
    int n = 0;
    DesignPointd trial;
    for (; n <= config.max_backtracks; ++n, step *= config.tau) {
      trial = DesignPointd{point.w + step * dw, point.p + step * dp};
      if (ratio_objective(ctx, trial) <= value + config.armijo_coeff * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      trace.exit = InnerExit::LineSearchFailure;
      break;
    }

    DesignPointd projected;
    try {
      projected = retract(AmbientPointd{trial.w, repair_positions(trial.p, lambda, aperture)});
    } catch (const DegenerateRetraction&) {
      trace.exit = InnerExit::LineSearchFailure;
      break;
    }
    const double next_value = ratio_objective(ctx, projected);
    const double change = next_value - value;
    point = std::move(projected);
    value = next_value;
    trace.iterates.push_back({value, std::sqrt(-slope), step, n});
    if (std::abs(change) < config.eps) {
      trace.exit = InnerExit::Converged;
      break;
    }
  }
  const auto g = ratio_gradient(ctx, point);
  trace.final_grad_norm = std::sqrt(4.0 * g.w.squaredNorm() + g.p.squaredNorm());
  out.point = std::move(point);
  return out;
}

}  // namespace ppm
