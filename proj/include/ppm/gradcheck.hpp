#pragma once

// Finite-difference check of the analytic Euclidean gradient of phi on
// random (scenario, point, rho) tuples.

#include <cstdint>
#include <functional>
#include <vector>

#include "ppm/experiment.hpp"

namespace ppm {

using GradientFn =
    std::function<EuclideanGradient<double>(const ObjectiveContextd&, const DesignPointd&, double rho)>;

struct GradcheckOptions {
  int count{100};
  std::uint64_t seed{1};
  std::vector<int> antenna_counts{2, 4, 8};
  double step{1e-6};
  double rel_tol{1e-6};
  double abs_tol{1e-8};
  double small_magnitude{1e-2};  // below this the absolute tolerance applies
  bool richardson{true};
};

struct GradcheckReport {
  int tuples{};
  int components{};
  int failures{};
  double max_rel_error{};  // over components at or above small_magnitude
  double max_abs_error{};  // over components below small_magnitude
  double seconds{};
  bool pass() const { return failures == 0; }
};

GradcheckReport gradcheck(const ScenarioParams& params, const GradcheckOptions& options,
                          const GradientFn& gradient = euclidean_gradient<double>);

}  // namespace ppm
