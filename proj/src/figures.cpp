#include "ppm/figures.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

namespace ppm {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

bool usable(const ResultRecord& r) { return r.status != CellStatus::Error; }

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
  std::map<std::pair<Method, int>, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[{r.method, r.num_antennas}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    std::vector<double> rates, outer;
    int failures = 0;
    for (const auto* r : group) {
      if (!usable(*r)) {
        ++failures;
        continue;
      }
      rates.push_back(r->secrecy_rate);
      outer.push_back(r->outer_iterations);
    }
    const double mean = rates.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
    rows.push_back({key.first, key.second, static_cast<int>(rates.size()), failures, mean, median(rates),
                    median(outer)});
  }
  return rows;
}

double gap_ratio(std::vector<double> positions) {
  if (positions.size() < 3) return 1.0;
  std::sort(positions.begin(), positions.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < positions.size(); ++i) gaps.push_back(positions[i] - positions[i - 1]);
  const double largest = *std::max_element(gaps.begin(), gaps.end());
  const double mid = median(gaps);
  return mid > 0 ? largest / mid : std::numeric_limits<double>::infinity();
}

std::optional<double> cluster_fraction(const std::vector<ResultRecord>& records, Method method, int num_antennas) {
  int total = 0, clustered = 0;
  for (const auto& r : records) {
    if (r.method != method || r.num_antennas != num_antennas || !usable(r)) continue;
    ++total;
    if (gap_ratio(r.positions) > 2.0) ++clustered;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(clustered) / total;
}

EmitStatus emit_figures(const std::vector<ResultRecord>& records,
                        const std::map<std::string, std::vector<TraceRow>>& traces,
                        const std::filesystem::path& out_dir) {
  if (records.empty()) return EmitStatus::EmptyInput;
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "summary.csv");
    out << "method,M,cells,failures,mean_rate,median_rate,median_outer_iters\n";
    for (const auto& s : summarize(records))
      out << to_string(s.method) << ',' << s.num_antennas << ',' << s.cells << ',' << s.failures << ','
          << num(s.mean_rate) << ',' << num(s.median_rate) << ',' << num(s.median_outer_iterations) << '\n';
  }

  std::set<std::pair<Method, int>> keys;
  for (const auto& r : records) keys.insert({r.method, r.num_antennas});
  for (const auto& [method, M] : keys) {
    std::ofstream out(out_dir / ("positions_" + std::string(to_string(method)) + "_" + std::to_string(M) + ".csv"));
    out << "replicate";
    for (int m = 1; m <= M; ++m) out << ",p" << m;
    out << '\n';
    for (const auto& r : records) {
      if (r.method != method || r.num_antennas != M || !usable(r)) continue;
      out << r.replicate;
      for (double p : r.positions) out << ',' << num(p);
      out << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "convergence.csv");
    out << "M,replicate,outer_iter,secrecy_rate,sigma\n";
    for (const auto& r : records) {
      if (r.method != Method::PPM) continue;
      const auto it = traces.find(trace_file_name(r.method, r.num_antennas, r.replicate));
      if (it == traces.end()) continue;
      for (const auto& row : it->second)
        out << r.num_antennas << ',' << r.replicate << ',' << row.outer_iter << ',' << num(row.secrecy_rate) << ','
            << num(row.sigma) << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "clusters.csv");
    out << "method,M,fraction_gap_ratio_above_2\n";
    for (const auto& [method, M] : keys)
      if (const auto f = cluster_fraction(records, method, M))
        out << to_string(method) << ',' << M << ',' << num(*f) << '\n';
  }
  return EmitStatus::Written;
}

}  // namespace ppm
