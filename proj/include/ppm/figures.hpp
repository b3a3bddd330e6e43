#pragma once

// Figure data tables derived from experiment records and traces.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppm/experiment.hpp"

namespace ppm {

struct SummaryRow {
  Method method;
  int num_antennas;
  int cells;     // records with a usable rate (ok or infeasible)
  int failures;  // error-tagged records
  double mean_rate;
  double median_rate;
  double median_outer_iterations;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records);

/// Largest sorted gap over the median gap.
double gap_ratio(std::vector<double> positions);

/// Fraction of cells whose gap ratio exceeds 2.
std::optional<double> cluster_fraction(const std::vector<ResultRecord>& records, Method method, int num_antennas);

enum class EmitStatus { Written, EmptyInput };

/// Writes summary.csv, positions_<method>_<M>.csv, convergence.csv and
/// clusters.csv into out_dir.
EmitStatus emit_figures(const std::vector<ResultRecord>& records,
                        const std::map<std::string, std::vector<TraceRow>>& traces,
                        const std::filesystem::path& out_dir);

}  // namespace ppm
