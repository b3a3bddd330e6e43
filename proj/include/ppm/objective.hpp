#pragma once

// Ratio form of the secrecy objective, the softplus-smoothed exterior
// penalty on antenna placement, and the analytic Euclidean gradient of
// their sum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ppm/model.hpp"

namespace ppm {

template <typename Scalar>
struct PenaltyState {
  Scalar rho{1};
  Scalar eta{std::numeric_limits<Scalar>::infinity()};
  Scalar c1{0.25};
  Scalar c2{0.9};
  Scalar sigma_min{1e-6};

  void validate() const {
    if (!(rho > 0)) throw InvalidInput("penalty factor must be positive");
    if (!(eta >= 0)) throw InvalidInput("violation threshold must be nonnegative");
    if (!(c1 > 0 && c1 < 1)) throw InvalidInput("c1 must lie in (0,1)");
    if (!(c2 > 0 && c2 < 1)) throw InvalidInput("c2 must lie in (0,1)");
    if (!(sigma_min >= 0)) throw InvalidInput("sigma_min must be nonnegative");
  }
};

/// Scenario plus the per-side SNR constants and per-path coefficients the
/// objective needs on every evaluation.
template <typename Scalar>
class ObjectiveContext {
 public:
  struct PathTerm {
    Scalar weight;  // |beta|^2
    Scalar kappa;   // (2 pi / lambda) cos(theta)
  };

  explicit ObjectiveContext(ChannelScenario<Scalar> scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    t_b_ = snr_constant(scenario_, Side::Bob);
    t_e_ = snr_constant(scenario_, Side::Eve);
    const Scalar k = wavenumber(scenario_.wavelength);
    for (const auto& path : scenario_.paths_b) terms_b_.push_back({std::norm(path.gain), k * std::cos(path.angle)});
    for (const auto& path : scenario_.paths_e) terms_e_.push_back({std::norm(path.gain), k * std::cos(path.angle)});
  }

  const ChannelScenario<Scalar>& scenario() const { return scenario_; }
  Scalar t_b() const { return t_b_; }
  Scalar t_e() const { return t_e_; }
  Scalar wavelength() const { return scenario_.wavelength; }
  Scalar aperture() const { return scenario_.aperture; }
  int num_antennas() const { return scenario_.num_antennas; }
  const std::vector<PathTerm>& terms(Side side) const { return side == Side::Bob ? terms_b_ : terms_e_; }

 private:
  ChannelScenario<Scalar> scenario_;
  Scalar t_b_{};
  Scalar t_e_{};
  std::vector<PathTerm> terms_b_;
  std::vector<PathTerm> terms_e_;
};

namespace detail {

// q = w^H A w with A = sum_l |beta_l|^2 a_l a_l^H, plus A w and dq/dp.
template <typename Scalar>
struct QuadraticTerms {
  Scalar q{0};
  CVec<Scalar> Aw;
  RVec<Scalar> dq_dp;
};

template <typename Scalar>
QuadraticTerms<Scalar> quadratic_terms(const std::vector<typename ObjectiveContext<Scalar>::PathTerm>& terms,
                                       const DesignPoint<Scalar>& point, bool with_gradient) {
  const Eigen::Index M = point.size();
  QuadraticTerms<Scalar> out;
  if (with_gradient) {
    out.Aw = CVec<Scalar>::Zero(M);
    out.dq_dp = RVec<Scalar>::Zero(M);
  }
  CVec<Scalar> a(M);
  for (const auto& term : terms) {
    for (Eigen::Index m = 0; m < M; ++m) a[m] = std::polar(Scalar(1), term.kappa * point.p[m]);
    const std::complex<Scalar> s = a.dot(point.w);  // a^H w
    out.q += term.weight * std::norm(s);
    if (!with_gradient) continue;
    out.Aw += (term.weight * s) * a;
    // d|s|^2/dp_m = 2 Re(conj(s) * (-j kappa) conj(a_m) w_m)
    const std::complex<Scalar> minus_j_kappa(0, -term.kappa);
    for (Eigen::Index m = 0; m < M; ++m) {
      out.dq_dp[m] += term.weight * Scalar(2) *
                      std::real(std::conj(s) * minus_j_kappa * std::conj(a[m]) * point.w[m]);
    }
  }
  return out;
}

}  // namespace detail

/// (1 + t_e q_e) / (1 + t_b q_b); log2 of its reciprocal is the unclamped
/// secrecy rate.
template <typename Scalar>
Scalar ratio_objective(const ObjectiveContext<Scalar>& ctx, const DesignPoint<Scalar>& point) {
  const auto bob = detail::quadratic_terms<Scalar>(ctx.terms(Side::Bob), point, false);
  const auto eve = detail::quadratic_terms<Scalar>(ctx.terms(Side::Eve), point, false);
  return (Scalar(1) + ctx.t_e() * eve.q) / (Scalar(1) + ctx.t_b() * bob.q);
}

/// [g_1, ..., g_{M-1}, f(p_1), f(p_M)]; every entry is <= 0 iff p is feasible.
template <typename Derived>
RVec<typename Derived::Scalar> constraint_values(const Eigen::MatrixBase<Derived>& p,
                                                 typename Derived::Scalar wavelength,
                                                 typename Derived::Scalar aperture) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index M = p.size();
  RVec<Scalar> c(M + 1);
  for (Eigen::Index m = 0; m + 1 < M; ++m) c[m] = p[m] - p[m + 1] + wavelength / 2;
  c[M - 1] = -p[0];
  c[M] = p[M - 1] - aperture;
  return c;
}

template <typename Derived>
typename Derived::Scalar max_violation(const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar wavelength,
                                       typename Derived::Scalar aperture) {
  using Scalar = typename Derived::Scalar;
  return std::max(Scalar(0), constraint_values(p, wavelength, aperture).maxCoeff());
}

/// log(1 + e^x) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  if (x > Scalar(30)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// d/dx softplus(x) = e^x / (1 + e^x).
template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
typename Derived::Scalar smoothed_penalty(const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar wavelength,
                                          typename Derived::Scalar aperture) {
  using Scalar = typename Derived::Scalar;
  const auto c = constraint_values(p, wavelength, aperture);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) total += softplus(c[i]);
  return total;
}

/// Gradient of smoothed_penalty with respect to the positions.
template <typename Derived>
RVec<typename Derived::Scalar> smoothed_penalty_gradient(const Eigen::MatrixBase<Derived>& p,
                                                         typename Derived::Scalar wavelength,
                                                         typename Derived::Scalar aperture) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index M = p.size();
  const auto c = constraint_values(p, wavelength, aperture);
  RVec<Scalar> grad = RVec<Scalar>::Zero(M);
  for (Eigen::Index m = 0; m + 1 < M; ++m) {
    const Scalar s = logistic(c[m]);
    grad[m] += s;
    grad[m + 1] -= s;
  }
  grad[0] -= logistic(c[M - 1]);
  grad[M - 1] += logistic(c[M]);
  return grad;
}

template <typename Scalar>
Scalar phi(const ObjectiveContext<Scalar>& ctx, const DesignPoint<Scalar>& point, Scalar rho) {
  if (!(rho > 0)) throw InvalidInput("penalty factor must be positive");
  return ratio_objective(ctx, point) + rho * smoothed_penalty(point.p, ctx.wavelength(), ctx.aperture());
}

/// Euclidean gradient of phi. The w part is in conjugate (Wirtinger)
/// coordinates: phi(w + d) ~ phi(w) + 2 Re(grad_w^H d).
template <typename Scalar>
struct EuclideanGradient {
  CVec<Scalar> w;
  RVec<Scalar> p;
};

/// Gradient of the ratio objective alone (no penalty), same conventions.
template <typename Scalar>
EuclideanGradient<Scalar> ratio_gradient(const ObjectiveContext<Scalar>& ctx, const DesignPoint<Scalar>& point) {
  const auto bob = detail::quadratic_terms<Scalar>(ctx.terms(Side::Bob), point, true);
  const auto eve = detail::quadratic_terms<Scalar>(ctx.terms(Side::Eve), point, true);
  const Scalar u = Scalar(1) + ctx.t_e() * eve.q;
  const Scalar v = Scalar(1) + ctx.t_b() * bob.q;
  const Scalar inv_v2 = Scalar(1) / (v * v);

  EuclideanGradient<Scalar> g;
  g.w = (ctx.t_e() * v * inv_v2) * eve.Aw - (ctx.t_b() * u * inv_v2) * bob.Aw;
  g.p = (ctx.t_e() * v * inv_v2) * eve.dq_dp - (ctx.t_b() * u * inv_v2) * bob.dq_dp;
  return g;
}

template <typename Scalar>
EuclideanGradient<Scalar> euclidean_gradient(const ObjectiveContext<Scalar>& ctx, const DesignPoint<Scalar>& point,
                                             Scalar rho) {
  if (!(rho > 0)) throw InvalidInput("penalty factor must be positive");
  EuclideanGradient<Scalar> g = ratio_gradient(ctx, point);
  g.p += rho * smoothed_penalty_gradient(point.p, ctx.wavelength(), ctx.aperture());
  return g;
}

/// Hessian of the ratio objective in the coordinates
/// (theta_1..theta_M, p_1..p_M) with w_m = exp(j theta_m).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ratio_hessian(const ObjectiveContext<Scalar>& ctx,
                                                                   const DesignPoint<Scalar>& point) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index M = point.size();
  struct Side2 {
    Scalar q{0};
    RVec<Scalar> grad;
    Mat hess;
  };
  auto side = [&](Side which) {
    Side2 out{0, RVec<Scalar>::Zero(2 * M), Mat::Zero(2 * M, 2 * M)};
    CVec<Scalar> b(M), D(2 * M);
    for (const auto& term : ctx.terms(which)) {
      for (Eigen::Index m = 0; m < M; ++m) b[m] = std::polar(Scalar(1), -term.kappa * point.p[m]) * point.w[m];
      const std::complex<Scalar> s = b.sum();
      const std::complex<Scalar> j(0, 1);
      // ds/dtheta_m = j b_m, ds/dp_m = -j kappa b_m
      D.head(M) = j * b;
      D.tail(M) = (-term.kappa) * D.head(M);
      out.q += term.weight * std::norm(s);
      out.grad += (Scalar(2) * term.weight) * (std::conj(s) * D.array()).real().matrix();
      out.hess += (Scalar(2) * term.weight) * (D.conjugate() * D.transpose()).real();
      const Scalar g[2] = {Scalar(1), -term.kappa};
      for (Eigen::Index m = 0; m < M; ++m) {
        const Scalar c = Scalar(2) * term.weight * std::real(std::conj(s) * b[m]);
        for (int a = 0; a < 2; ++a)
          for (int e = 0; e < 2; ++e) out.hess(a * M + m, e * M + m) -= g[a] * g[e] * c;
      }
    }
    return out;
  };
  const Side2 bob = side(Side::Bob);
  const Side2 eve = side(Side::Eve);
  const Scalar u = Scalar(1) + ctx.t_e() * eve.q;
  const Scalar v = Scalar(1) + ctx.t_b() * bob.q;
  const RVec<Scalar> u1 = ctx.t_e() * eve.grad, v1 = ctx.t_b() * bob.grad;
  // (u/v)'' = u''/v - (u' v'^T + v' u'^T)/v^2 + u (2 v' v'^T / v^3 - v''/v^2)
  return (ctx.t_e() / v) * eve.hess - (u1 * v1.transpose() + v1 * u1.transpose()) / (v * v) +
         u * (Scalar(2) / (v * v * v) * v1 * v1.transpose() - (ctx.t_b() / (v * v)) * bob.hess);
}

/// Hessian of the smoothed penalty in the positions (tridiagonal).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> smoothed_penalty_hessian(
    const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar wavelength, typename Derived::Scalar aperture) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index M = p.size();
  const auto c = constraint_values(p, wavelength, aperture);
  auto curv = [](Scalar x) {
    const Scalar s = logistic(x);
    return s * (Scalar(1) - s);
  };
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(M, M);
  for (Eigen::Index m = 0; m + 1 < M; ++m) {
    const Scalar k = curv(c[m]);
    h(m, m) += k;
    h(m + 1, m + 1) += k;
    h(m, m + 1) -= k;
    h(m + 1, m) -= k;
  }
  h(0, 0) += curv(c[M - 1]);
  h(M - 1, M - 1) += curv(c[M]);
  return h;
}

using ObjectiveContextd = ObjectiveContext<double>;
using PenaltyStated = PenaltyState<double>;

}  // namespace ppm
