#pragma once

// Seeded Monte-Carlo experiment harness: scenario generation, per-cell
// execution of PPM and the baselines, and flat-file result records.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppm/baselines.hpp"
#include "ppm/solver.hpp"

namespace ppm {

enum class Method { PPM, FPA, RA, SFPA, GDMA };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view tag);
const std::vector<Method>& all_methods();

struct ScenarioParams {
  double wavelength{0.01};
  double aperture_wavelengths{30.0};  // L / lambda
  double power{1.0};
  double noise_b{1.0};
  double noise_e{1.0};
  int paths_b{4};
  int paths_e{4};
  bool path_count_normalization{true};

  double aperture() const { return aperture_wavelengths * wavelength; }
};

struct ExperimentSpec {
  ScenarioParams scenario{};
  std::vector<int> antenna_counts{4, 8, 16};
  std::vector<Method> methods{all_methods()};
  std::uint64_t seed{1};
  int replicates{50};
  PcgdConfig pcgd{};
  PpmConfig ppm{};
  GdmaConfig gdma{};
  StartGeometry start{StartGeometry::GreedyGrid};
  int threads{0};  // 0: hardware concurrency
  std::filesystem::path out_dir{};

  void validate() const;
};

/// splitmix64-based mixing of the experiment seed with a cell key.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, int num_antennas, int replicate);

/// Channel realization for one (M, replicate) cell. Identical for every
/// method so that comparisons are paired.
std::uint64_t scenario_seed(const ExperimentSpec& spec, int num_antennas, int replicate);

ChannelScenariod generate_scenario(const ScenarioParams& params, int num_antennas, std::uint64_t seed);

enum class CellStatus { Ok, Infeasible, Error };

struct ResultRecord {
  Method method{Method::PPM};
  int num_antennas{};
  int replicate{};
  std::uint64_t seed{};  // scenario seed
  CellStatus status{CellStatus::Ok};
  std::string error;
  double secrecy_rate{};
  double sigma{};
  int outer_iterations{};
  int inner_iterations{};
  double wall_clock{};
  std::vector<double> positions;
  std::vector<double> phases;
};

struct TraceRow {
  int outer_iter;
  double phi;
  double secrecy_rate;
  double sigma;
  double rho;
  double grad_norm;
};

struct CellResult {
  ResultRecord record;
  std::vector<TraceRow> trace;
};

CellResult run_cell(const ExperimentSpec& spec, Method method, int num_antennas, int replicate);

struct ExperimentResult {
  std::vector<ResultRecord> records;  // sorted by (method, M, replicate)
  // keyed by trace file name
  std::map<std::string, std::vector<TraceRow>> traces;

  bool any_infeasible() const;
};

/// Runs every (method, M, replicate) cell; writes outputs when out_dir is set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

std::string trace_file_name(Method method, int num_antennas, int replicate);

// CSV I/O
void write_records(const std::filesystem::path& path, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

}  // namespace ppm
