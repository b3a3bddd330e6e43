#include "ppm/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace ppm {

namespace {

// Central difference of f along one real coordinate, optionally refined by
// one Richardson step (h, h/2).
template <typename F>
double central_difference(const F& f, double h, bool richardson) {
  const auto d = [&](double s) { return (f(s) - f(-s)) / (2 * s); };
  const double coarse = d(h);
  if (!richardson) return coarse;
  return (4 * d(h / 2) - coarse) / 3;
}

}  // namespace

GradcheckReport gradcheck(const ScenarioParams& params, const GradcheckOptions& options, const GradientFn& gradient) {
  if (options.count < 1) throw InvalidInput("gradcheck count must be at least 1");
  if (options.antenna_counts.empty()) throw InvalidInput("gradcheck needs antenna counts");
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradcheckReport report;

  for (int n = 0; n < options.count; ++n) {
    const int M = options.antenna_counts[n % options.antenna_counts.size()];
    const ObjectiveContextd ctx(generate_scenario(params, M, rng()));
    const double lambda = ctx.wavelength();
    const double L = ctx.aperture();
    const double rho = std::pow(10.0, -1.0 + 2.0 * unit(rng));

    DesignPointd x;
    x.w.resize(M);
    x.p.resize(M);
    for (int m = 0; m < M; ++m) x.w[m] = std::polar(1.0, 2 * std::numbers::pi * unit(rng));
    // sorted draws over a slightly widened aperture: both feasible and violated regimes
    std::vector<double> pos(M);
    for (double& v : pos) v = -0.05 * L + 1.1 * L * unit(rng);
    std::sort(pos.begin(), pos.end());
    for (int m = 0; m < M; ++m) x.p[m] = pos[m];

    const auto g = gradient(ctx, x, rho);
    // phi = ratio + rho * penalty; the parts are differenced separately so
    // the penalty's magnitude does not swamp the ratio's rounding.
    auto phi_along = [&](auto perturb) {
      return [&, perturb](double s) {
        DesignPointd y = x;
        perturb(y, s);
        return ratio_objective(ctx, y);
      };
    };
    auto pen_along = [&](int m) {
      return [&, m](double s) {
        RVecd p = x.p;
        p[m] += s;
        return smoothed_penalty(p, lambda, L);
      };
    };

    auto check = [&](double analytic, double fd) {
      ++report.components;
      const double err = std::abs(analytic - fd);
      const double mag = std::max(std::abs(analytic), std::abs(fd));
      if (mag < options.small_magnitude) {
        report.max_abs_error = std::max(report.max_abs_error, err);
        if (err >= options.abs_tol) ++report.failures;
      } else {
        const double rel = err / mag;
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= options.rel_tol) ++report.failures;
      }
    };

    for (int m = 0; m < M; ++m) {
      const double d_re = central_difference(phi_along([m](DesignPointd& y, double s) { y.w[m] += s; }),
                                             options.step, options.richardson);
      const double d_im = central_difference(
          phi_along([m](DesignPointd& y, double s) { y.w[m] += std::complex<double>(0, s); }), options.step,
          options.richardson);
      const double d_p = central_difference(phi_along([m](DesignPointd& y, double s) { y.p[m] += s; }),
                                            options.step, options.richardson) +
                         rho * central_difference(pen_along(m), options.step, options.richardson);
      // phi(w + d) ~ phi + 2 Re(g^H d): real part 2 Re g, imaginary part 2 Im g
      check(2 * g.w[m].real(), d_re);
      check(2 * g.w[m].imag(), d_im);
      check(g.p[m], d_p);
    }
    ++report.tuples;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace ppm
