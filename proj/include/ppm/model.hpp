#pragma once

// Far-field linear-array channel model with movable element positions,
// and the secrecy rate of a constant-modulus beamformer over it.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ppm/errors.hpp"

namespace ppm {

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CVecd = CVec<double>;
using RVecd = RVec<double>;

enum class Side { Bob, Eve };

template <typename Scalar>
struct Path {
  std::complex<Scalar> gain;
  Scalar angle;  // radians, [0, pi]
};

template <typename Scalar>
struct ChannelScenario {
  Scalar wavelength{0.01};
  int num_antennas{2};
  Scalar aperture{0.3};
  Scalar power{1};
  Scalar noise_b{1};
  Scalar noise_e{1};
  std::vector<Path<Scalar>> paths_b;
  std::vector<Path<Scalar>> paths_e;
  // Apply the sqrt(1/L_i) prefactor on each channel (and the matching 1/L_i
  // inside the SNR constants). Disable for sensitivity studies only.
  bool path_count_normalization{true};

  const std::vector<Path<Scalar>>& paths(Side side) const {
    return side == Side::Bob ? paths_b : paths_e;
  }
  Scalar noise(Side side) const { return side == Side::Bob ? noise_b : noise_e; }

  Scalar half_wavelength() const { return wavelength / 2; }

  // Throws InvalidInput on the first violated invariant.
  void validate() const {
    using std::isfinite;
    if (!(wavelength > 0) || !isfinite(wavelength)) throw InvalidInput("wavelength must be positive");
    if (num_antennas < 2) throw InvalidInput("need at least two antennas");
    if (!(aperture >= half_wavelength() * Scalar(num_antennas - 1)))
      throw InvalidInput("aperture shorter than (M-1) half-wavelength spacing");
    if (!(power > 0)) throw InvalidInput("power must be positive");
    if (!(noise_b > 0) || !(noise_e > 0)) throw InvalidInput("noise powers must be positive");
    if (paths_b.empty() || paths_e.empty()) throw InvalidInput("path lists must be non-empty");
    for (const auto* list : {&paths_b, &paths_e}) {
      for (const auto& path : *list) {
        if (!(path.angle >= 0) || !(path.angle <= std::numbers::pi_v<Scalar>))
          throw InvalidInput("path angle outside [0, pi]");
        if (!isfinite(path.gain.real()) || !isfinite(path.gain.imag()))
          throw InvalidInput("non-finite path gain");
      }
    }
  }
};

/// A point on the product of the complex circle (beamformer) and the real
/// line (positions), one coordinate pair per antenna.
template <typename Scalar>
struct DesignPoint {
  CVec<Scalar> w;
  RVec<Scalar> p;

  Eigen::Index size() const { return w.size(); }
};

using Pathd = Path<double>;
using ChannelScenariod = ChannelScenario<double>;
using DesignPointd = DesignPoint<double>;

template <typename Scalar>
Scalar wavenumber(Scalar wavelength) {
  return Scalar(2) * std::numbers::pi_v<Scalar> / wavelength;
}

/// Entry m is exp(j (2 pi / lambda) cos(angle) p_m).
template <typename Scalar, typename Derived>
CVec<Scalar> steering_vector(Scalar angle, const Eigen::MatrixBase<Derived>& p, Scalar wavelength) {
  using std::isfinite;
  if (!isfinite(angle) || !p.allFinite()) throw InvalidInput("non-finite angle or positions");
  if (!(wavelength > 0)) throw InvalidInput("wavelength must be positive");
  const Scalar kappa = wavenumber(wavelength) * std::cos(angle);
  CVec<Scalar> a(p.size());
  for (Eigen::Index m = 0; m < p.size(); ++m) a[m] = std::polar(Scalar(1), kappa * p[m]);
  return a;
}

/// Per-side SNR scaling P / (L_i sigma_i^2).
template <typename Scalar>
Scalar snr_constant(const ChannelScenario<Scalar>& scenario, Side side) {
  const Scalar paths = scenario.path_count_normalization
                           ? Scalar(scenario.paths(side).size())
                           : Scalar(1);
  return scenario.power / (paths * scenario.noise(side));
}

/// Field-response channel sqrt(1/L_i) sum_l beta_l a(theta_l, p).
template <typename Scalar, typename Derived>
CVec<Scalar> channel(const ChannelScenario<Scalar>& scenario, Side side,
                     const Eigen::MatrixBase<Derived>& p) {
  const auto& paths = scenario.paths(side);
  if (paths.empty()) throw InvalidInput("empty path list");
  CVec<Scalar> h = CVec<Scalar>::Zero(p.size());
  for (const auto& path : paths) h += path.gain * steering_vector(path.angle, p, scenario.wavelength);
  if (scenario.path_count_normalization) h *= std::sqrt(Scalar(1) / Scalar(paths.size()));
  return h;
}

/// Sum over paths of |beta_l|^2 |a(theta_l, p)^H w|^2 (incoherent per-path power).
template <typename Scalar>
Scalar path_power(const ChannelScenario<Scalar>& scenario, Side side, const DesignPoint<Scalar>& point) {
  Scalar total = 0;
  for (const auto& path : scenario.paths(side)) {
    const auto a = steering_vector(path.angle, point.p, scenario.wavelength);
    total += std::norm(path.gain) * std::norm(a.dot(point.w));
  }
  return total;
}

/// Bob rate minus Eve rate in bits, without the positive-part clamp.
template <typename Scalar>
Scalar secrecy_rate_unclamped(const ChannelScenario<Scalar>& scenario, const DesignPoint<Scalar>& point) {
  const Scalar snr_b = snr_constant(scenario, Side::Bob) * path_power(scenario, Side::Bob, point);
  const Scalar snr_e = snr_constant(scenario, Side::Eve) * path_power(scenario, Side::Eve, point);
  return std::log2(Scalar(1) + snr_b) - std::log2(Scalar(1) + snr_e);
}

template <typename Scalar>
Scalar secrecy_rate(const ChannelScenario<Scalar>& scenario, const DesignPoint<Scalar>& point) {
  using std::max;
  return max(Scalar(0), secrecy_rate_unclamped(scenario, point));
}

/// Centered half-wavelength ULA inside [0, aperture].
template <typename Scalar>
RVec<Scalar> centered_ula(int num_antennas, Scalar wavelength, Scalar aperture) {
  const Scalar spacing = wavelength / 2;
  const Scalar offset = (aperture - spacing * Scalar(num_antennas - 1)) / 2;
  RVec<Scalar> p(num_antennas);
  for (int m = 0; m < num_antennas; ++m) {
    p[m] = offset + spacing * Scalar(m);
    // keep every spacing constraint nonpositive in floating point
    while (m > 0 && p[m - 1] - p[m] + spacing > Scalar(0))
      p[m] = std::nextafter(p[m], std::numeric_limits<Scalar>::infinity());
  }
  return p;
}

/// Constant-modulus phases of the Bob channel at p; entries with vanishing
/// channel magnitude fall back to 1.
template <typename Scalar, typename Derived>
CVec<Scalar> matched_phases(const ChannelScenario<Scalar>& scenario, const Eigen::MatrixBase<Derived>& p) {
  const CVec<Scalar> h = channel(scenario, Side::Bob, p);
  CVec<Scalar> w(h.size());
  for (Eigen::Index m = 0; m < h.size(); ++m) {
    const Scalar mag = std::abs(h[m]);
    w[m] = mag > Scalar(1e-300) ? h[m] / mag : std::complex<Scalar>(1);
  }
  return w;
}

}  // namespace ppm
