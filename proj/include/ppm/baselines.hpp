#pragma once

// Comparison schemes: fixed ULA (FPA), random feasible placement (RA),
// greedy sparse selection from a half-wavelength grid (SFPA), and projected
// joint gradient descent without manifold machinery (GDMA).

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ppm/solver.hpp"

namespace ppm {

enum class BaselineKind { FPA, RA, SFPA, GDMA };

std::string_view to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline(std::string_view tag);

struct BaselineResult {
  DesignPointd point;
  InnerTrace trace;
};

/// Beamformer-only PCGD with the positions held fixed at `p`.
BaselineResult optimize_beamformer(const ObjectiveContextd& ctx, const RVecd& p, const PcgdConfig& config);

BaselineResult fpa_solve(const ObjectiveContextd& ctx, const PcgdConfig& config);

/// Uniform sample from {p : p_1 >= 0, p_M <= L, p_{m+1} - p_m >= lambda/2}.
RVecd sample_feasible_positions(int num_antennas, double wavelength, double aperture, std::uint64_t seed);

BaselineResult ra_solve(const ObjectiveContextd& ctx, const PcgdConfig& config, std::uint64_t seed);

/// Half-wavelength grid {0, lambda/2, ...} covering [0, L].
RVecd candidate_grid(double wavelength, double aperture);

/// Greedy forward selection of grid indices (sorted ascending) under the
/// matched-phase secrecy rate.
std::vector<int> sfpa_select(const ObjectiveContextd& ctx);

BaselineResult sfpa_solve(const ObjectiveContextd& ctx, const PcgdConfig& config);

/// Clip to [0, L], push forward to enforce spacing, then clip the tail back.
RVecd repair_positions(const RVecd& p, double wavelength, double aperture);

struct GdmaConfig {
  double tau{0.5};
  double armijo_coeff{1e-4};
  double initial_step{1.0};
  int max_backtracks{50};
  int max_iters{500};
  double eps{1e-8};
};

BaselineResult gdma_solve(const ObjectiveContextd& ctx, const GdmaConfig& config,
                          const std::optional<DesignPointd>& start = std::nullopt);

}  // namespace ppm
