#pragma once

// Product of the complex circle manifold (unit-modulus beamformer) and
// Euclidean space (positions), with the sum metric
// <u, v> = Re(u_w^H v_w) + u_p^T v_p.

#include <cmath>
#include <complex>

#include "ppm/model.hpp"

namespace ppm {

template <typename Scalar>
struct TangentVector {
  CVec<Scalar> dw;
  RVec<Scalar> dp;

  static TangentVector Zero(Eigen::Index M) { return {CVec<Scalar>::Zero(M), RVec<Scalar>::Zero(M)}; }

  TangentVector operator-() const { return {-dw, -dp}; }
  TangentVector operator+(const TangentVector& o) const { return {dw + o.dw, dp + o.dp}; }
  TangentVector operator-(const TangentVector& o) const { return {dw - o.dw, dp - o.dp}; }
  friend TangentVector operator*(Scalar s, const TangentVector& v) { return {s * v.dw, s * v.dp}; }
};

/// Ambient (unconstrained) coordinates, e.g. a point after a linear step.
template <typename Scalar>
struct AmbientPoint {
  CVec<Scalar> w;
  RVec<Scalar> p;
};

/// Removes the radial component Re(v .* conj(w)) .* w from every entry.
template <typename Scalar>
CVec<Scalar> project_to_circle_tangent(const CVec<Scalar>& v, const CVec<Scalar>& w) {
  return v - v.cwiseProduct(w.conjugate()).real().template cast<std::complex<Scalar>>().cwiseProduct(w);
}

template <typename Scalar>
TangentVector<Scalar> riemannian_gradient(const CVec<Scalar>& egrad_w, const RVec<Scalar>& egrad_p,
                                          const DesignPoint<Scalar>& point) {
  return {project_to_circle_tangent(egrad_w, point.w), egrad_p};
}

/// Re-projection onto the tangent space at to_point; identity on positions.
template <typename Scalar>
TangentVector<Scalar> transport(const TangentVector<Scalar>& vec, const DesignPoint<Scalar>& to_point) {
  return {project_to_circle_tangent(vec.dw, to_point.w), vec.dp};
}

inline constexpr double kRetractionFloor = 1e-14;

/// w_i <- w_i / |w_i|, p unchanged.
template <typename Scalar>
DesignPoint<Scalar> retract(const AmbientPoint<Scalar>& x) {
  DesignPoint<Scalar> out{CVec<Scalar>(x.w.size()), x.p};
  for (Eigen::Index i = 0; i < x.w.size(); ++i) {
    const Scalar mag = std::abs(x.w[i]);
    if (!(mag >= Scalar(kRetractionFloor))) throw DegenerateRetraction("beamformer entry vanished during retraction");
    out.w[i] = x.w[i] / mag;
  }
  return out;
}

/// The point reached by moving from `point` along `dir` by `step`, retracted.
template <typename Scalar>
DesignPoint<Scalar> step_and_retract(const DesignPoint<Scalar>& point, const TangentVector<Scalar>& dir,
                                     Scalar step) {
  return retract(AmbientPoint<Scalar>{point.w + step * dir.dw, point.p + step * dir.dp});
}

template <typename Scalar>
Scalar inner(const TangentVector<Scalar>& a, const TangentVector<Scalar>& b) {
  return std::real(a.dw.dot(b.dw)) + a.dp.dot(b.dp);
}

template <typename Scalar>
Scalar norm(const TangentVector<Scalar>& v) {
  return std::sqrt(inner(v, v));
}

using TangentVectord = TangentVector<double>;
using AmbientPointd = AmbientPoint<double>;

}  // namespace ppm
