#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ppm/config.hpp"
#include "ppm/experiment.hpp"
#include "ppm/figures.hpp"
#include "ppm/gradcheck.hpp"

using namespace ppm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppm_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.antenna_counts = {4};
  spec.methods = {Method::PPM};
  spec.replicates = 1;
  spec.threads = 1;
  return spec;
}

std::string records_without_clock(const fs::path& path) {
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    for (int col = 0; std::getline(ss, field, ','); ++col)
      if (col != 10) out += field + ',';
    out += '\n';
  }
  return out;
}

}  // namespace

TEST(Method, RoundTrip) {
  for (Method m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_FALSE(parse_method("ppm"));
  EXPECT_EQ(all_methods().size(), 5u);
}

TEST(Seeds, DistinctAcrossKeys) {
  std::set<std::uint64_t> seen;
  for (const char* stream : {"scenario", "RA"})
    for (int M : {4, 8, 16})
      for (int r = 0; r < 50; ++r) seen.insert(derive_seed(1, stream, M, r));
  EXPECT_EQ(seen.size(), 2u * 3 * 50);
  EXPECT_NE(derive_seed(1, "scenario", 4, 0), derive_seed(2, "scenario", 4, 0));
}

TEST(Scenario, Deterministic) {
  const auto a = generate_scenario(ScenarioParams{}, 8, 99);
  const auto b = generate_scenario(ScenarioParams{}, 8, 99);
  ASSERT_EQ(a.paths_b.size(), 4u);
  ASSERT_EQ(a.paths_e.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.paths_b[i].gain, b.paths_b[i].gain);
    EXPECT_EQ(a.paths_b[i].angle, b.paths_b[i].angle);
    EXPECT_EQ(a.paths_e[i].gain, b.paths_e[i].gain);
    EXPECT_EQ(a.paths_e[i].angle, b.paths_e[i].angle);
  }
  const auto c = generate_scenario(ScenarioParams{}, 8, 100);
  EXPECT_NE(a.paths_b[0].gain, c.paths_b[0].gain);
}

TEST(Scenario, DefaultsMatchExperimentSetup) {
  const auto sc = generate_scenario(ScenarioParams{}, 6, 1);
  EXPECT_EQ(sc.wavelength, 0.01);
  EXPECT_NEAR(sc.aperture, 0.3, 1e-15);
  EXPECT_EQ(sc.power, 1.0);
  EXPECT_EQ(sc.noise_b, 1.0);
  EXPECT_EQ(sc.noise_e, 1.0);
  EXPECT_EQ(sc.num_antennas, 6);
}

TEST(Scenario, GainSecondMomentAndAngleRange) {
  ScenarioParams params;
  params.paths_b = 4;
  params.paths_e = 2;
  double sum_b = 0, sum_e = 0;
  int n_b = 0, n_e = 0;
  double lo = 10, hi = -10;
  for (std::uint64_t seed = 0; n_b < 10000; ++seed) {
    const auto sc = generate_scenario(params, 4, seed);
    for (const auto& path : sc.paths_b) {
      sum_b += std::norm(path.gain);
      ++n_b;
      lo = std::min(lo, path.angle);
      hi = std::max(hi, path.angle);
    }
    for (const auto& path : sc.paths_e) {
      sum_e += std::norm(path.gain);
      ++n_e;
    }
  }
  // |beta|^2 is exponential: standard deviation equals the mean
  EXPECT_NEAR(sum_b / n_b, 0.25, 3 * 0.25 / std::sqrt(n_b));
  EXPECT_NEAR(sum_e / n_e, 0.5, 3 * 0.5 / std::sqrt(n_e));
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, std::numbers::pi);
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, std::numbers::pi - 0.01);
}

TEST(Scenario, PairedAcrossMethods) {
  ExperimentSpec spec = small_spec();
  spec.methods = {Method::PPM, Method::FPA};
  spec.replicates = 3;
  const auto result = run_experiment(spec);
  ASSERT_EQ(result.records.size(), 6u);
  for (int r = 0; r < 3; ++r) {
    const auto& a = result.records[r];
    const auto& b = result.records[3 + r];
    EXPECT_EQ(a.method, Method::PPM);
    EXPECT_EQ(b.method, Method::FPA);
    EXPECT_EQ(a.replicate, b.replicate);
    EXPECT_EQ(a.seed, b.seed);
  }
}

TEST(ExperimentSpec, Validation) {
  ExperimentSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.antenna_counts = {};
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = ExperimentSpec{};
  spec.antenna_counts = {64};
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = ExperimentSpec{};
  spec.scenario.noise_e = 0;
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = ExperimentSpec{};
  spec.replicates = 0;
  EXPECT_THROW(spec.validate(), InvalidInput);
}

TEST(RunExperiment, SingleCellWritesOneRecordAndOneTrace) {
  ExperimentSpec spec = small_spec();
  spec.out_dir = scratch_dir("single");
  const auto result = run_experiment(spec);
  ASSERT_EQ(result.records.size(), 1u);
  const auto& rec = result.records.front();
  EXPECT_EQ(rec.status, CellStatus::Ok);
  EXPECT_GE(rec.secrecy_rate, 0.0);
  EXPECT_GE(rec.sigma, 0.0);
  EXPECT_EQ(rec.positions.size(), 4u);
  EXPECT_EQ(rec.phases.size(), 4u);

  int traces = 0;
  for (const auto& entry : fs::directory_iterator(spec.out_dir))
    if (entry.path().filename().string().starts_with("trace_")) ++traces;
  EXPECT_EQ(traces, 1);
  const fs::path trace = spec.out_dir / trace_file_name(Method::PPM, 4, 0);
  ASSERT_TRUE(fs::exists(trace));
  EXPECT_EQ(count_lines(trace), static_cast<std::size_t>(rec.outer_iterations) + 1);
  EXPECT_EQ(count_lines(spec.out_dir / "records.csv"), 2u);
  EXPECT_TRUE(fs::exists(spec.out_dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(spec.out_dir / "positions_PPM_4.csv"));
}

TEST(RunExperiment, EveryCellYieldsOneRecord) {
  ExperimentSpec spec = small_spec();
  spec.methods = all_methods();
  spec.antenna_counts = {3, 5};
  spec.replicates = 2;
  spec.threads = 2;
  const auto result = run_experiment(spec);
  ASSERT_EQ(result.records.size(), 5u * 2 * 2);
  for (std::size_t i = 1; i < result.records.size(); ++i) {
    const auto& a = result.records[i - 1];
    const auto& b = result.records[i];
    EXPECT_LT(std::tuple(static_cast<int>(a.method), a.num_antennas, a.replicate),
              std::tuple(static_cast<int>(b.method), b.num_antennas, b.replicate));
  }
}

TEST(RunCell, FailureIsRecordedNotThrown) {
  ExperimentSpec spec = small_spec();
  CellResult cell;
  ASSERT_NO_THROW(cell = run_cell(spec, Method::SFPA, 64, 0));
  EXPECT_EQ(cell.record.status, CellStatus::Error);
  EXPECT_FALSE(cell.record.error.empty());
  EXPECT_EQ(cell.record.num_antennas, 64);
}

TEST(RunExperiment, SigmaTraceSettlesAfterEscalation) {
  ExperimentSpec spec = small_spec();
  spec.antenna_counts = {8};
  spec.replicates = 10;
  const auto result = run_experiment(spec);
  for (const auto& [name, rows] : result.traces) {
    ASSERT_FALSE(rows.empty());
    EXPECT_LE(rows.back().sigma, 1e-6) << name;
    std::size_t first = 0;
    while (first < rows.size() && rows[first].rho == rows.front().rho) ++first;
    for (std::size_t i = first + 1; i < rows.size(); ++i) EXPECT_LE(rows[i].sigma, rows[i - 1].sigma) << name;
  }
}

TEST(RunExperiment, FpaPositionsAreHalfWavelengthProgression) {
  ExperimentSpec spec = small_spec();
  spec.methods = {Method::FPA};
  spec.antenna_counts = {6};
  spec.out_dir = scratch_dir("fpa");
  run_experiment(spec);
  std::ifstream in(spec.out_dir / "positions_FPA_6.csv");
  std::string header, row;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, row));
  std::vector<double> values;
  std::stringstream ss(row);
  for (std::string field; std::getline(ss, field, ',');) values.push_back(std::stod(field));
  const std::vector<double> p(values.end() - 6, values.end());
  for (int m = 1; m < 6; ++m) EXPECT_NEAR(p[m] - p[m - 1], 0.005, 1e-15);
  EXPECT_NEAR(p.front() + p.back(), 0.3, 1e-15);
}

TEST(RunExperiment, DeterministicAcrossThreadCounts) {
  ExperimentSpec spec = small_spec();
  spec.methods = all_methods();
  spec.antenna_counts = {4, 6};
  spec.replicates = 3;
  spec.out_dir = scratch_dir("det_a");
  spec.threads = 1;
  run_experiment(spec);
  const fs::path first = spec.out_dir;
  spec.out_dir = scratch_dir("det_b");
  spec.threads = 3;
  run_experiment(spec);
  EXPECT_EQ(records_without_clock(first / "records.csv"), records_without_clock(spec.out_dir / "records.csv"));
}

TEST(Csv, RecordsRoundTrip) {
  ExperimentSpec spec = small_spec();
  spec.methods = {Method::PPM, Method::RA};
  spec.replicates = 2;
  const auto result = run_experiment(spec);
  const fs::path dir = scratch_dir("csv");
  fs::create_directories(dir);
  write_records(dir / "r.csv", result.records);
  const auto back = read_records(dir / "r.csv");
  ASSERT_EQ(back.size(), result.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = result.records[i];
    const auto& b = back[i];
    EXPECT_EQ(a.method, b.method);
    EXPECT_EQ(a.num_antennas, b.num_antennas);
    EXPECT_EQ(a.replicate, b.replicate);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.secrecy_rate, b.secrecy_rate);
    EXPECT_EQ(a.sigma, b.sigma);
    EXPECT_EQ(a.outer_iterations, b.outer_iterations);
    EXPECT_EQ(a.inner_iterations, b.inner_iterations);
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_EQ(a.phases, b.phases);
  }

  const auto& rows = result.traces.begin()->second;
  write_trace(dir / "t.csv", rows);
  const auto trace = read_trace(dir / "t.csv");
  ASSERT_EQ(trace.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(trace[i].outer_iter, rows[i].outer_iter);
    EXPECT_EQ(trace[i].phi, rows[i].phi);
    EXPECT_EQ(trace[i].sigma, rows[i].sigma);
    EXPECT_EQ(trace[i].rho, rows[i].rho);
  }
}

TEST(Csv, ErrorMessagesSurviveRoundTrip) {
  ResultRecord rec;
  rec.method = Method::GDMA;
  rec.num_antennas = 3;
  rec.status = CellStatus::Error;
  rec.error = "bad, \"quoted\" input";
  const fs::path dir = scratch_dir("csv_err");
  fs::create_directories(dir);
  write_records(dir / "r.csv", {rec});
  const auto back = read_records(dir / "r.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].status, CellStatus::Error);
  EXPECT_EQ(back[0].error, rec.error);
}

TEST(Figures, EmptyInputIsNoOp) {
  const fs::path dir = scratch_dir("empty");
  EXPECT_EQ(emit_figures({}, {}, dir), EmitStatus::EmptyInput);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Figures, SummaryStatistics) {
  std::vector<ResultRecord> records;
  for (double rate : {1.0, 2.0, 6.0}) {
    ResultRecord r;
    r.method = Method::SFPA;
    r.num_antennas = 4;
    r.secrecy_rate = rate;
    r.outer_iterations = 1;
    records.push_back(r);
  }
  ResultRecord failed;
  failed.method = Method::SFPA;
  failed.num_antennas = 4;
  failed.status = CellStatus::Error;
  records.push_back(failed);
  const auto rows = summarize(records);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].cells, 3);
  EXPECT_EQ(rows[0].failures, 1);
  EXPECT_DOUBLE_EQ(rows[0].mean_rate, 3.0);
  EXPECT_DOUBLE_EQ(rows[0].median_rate, 2.0);
}

TEST(Figures, GapRatio) {
  EXPECT_DOUBLE_EQ(gap_ratio({0.0, 1.0, 2.0, 3.0}), 1.0);
  // gaps 1, 1, 5, 1: median 1
  EXPECT_DOUBLE_EQ(gap_ratio({9.0, 0.0, 1.0, 2.0, 8.0}), 6.0);
}

TEST(Figures, ClusterFraction) {
  std::vector<ResultRecord> records(2);
  for (auto& r : records) {
    r.method = Method::PPM;
    r.num_antennas = 4;
  }
  records[0].positions = {0, 1, 2, 3};
  records[1].positions = {0, 1, 10, 11};
  EXPECT_DOUBLE_EQ(cluster_fraction(records, Method::PPM, 4).value(), 0.5);
  EXPECT_FALSE(cluster_fraction(records, Method::PPM, 8));
}

TEST(Config, ParsesSectionsAndLists) {
  std::istringstream in(R"([scenario]
wavelength = 0.02
aperture_wavelengths = 20
paths_b = 3

[experiment]
antenna_counts = "4,8"
methods = "PPM,FPA"
seed = 17
replicates = 5

[pcgd]
eps_inner = 1e-9
preconditioner = "diagonal"
restart_threshold = 0.5

[ppm]
rho = 2
)");
  const auto spec = parse_config(in);
  EXPECT_EQ(spec.scenario.wavelength, 0.02);
  EXPECT_EQ(spec.scenario.aperture_wavelengths, 20);
  EXPECT_EQ(spec.scenario.paths_b, 3);
  EXPECT_EQ(spec.antenna_counts, (std::vector<int>{4, 8}));
  EXPECT_EQ(spec.methods, (std::vector<Method>{Method::PPM, Method::FPA}));
  EXPECT_EQ(spec.seed, 17u);
  EXPECT_EQ(spec.replicates, 5);
  EXPECT_EQ(spec.pcgd.eps_inner, 1e-9);
  EXPECT_EQ(spec.pcgd.preconditioner, Preconditioner::HessianDiagonal);
  EXPECT_EQ(spec.pcgd.restart_threshold, 0.5);
  EXPECT_EQ(spec.ppm.penalty.rho, 2.0);
}

TEST(Config, UnknownKeysAndSectionsAreErrors) {
  for (const char* text : {"[scenario]\nwavelenght = 0.01\n", "[solver]\neps = 1\n", "[pcgd]\ntrial_step = \"newton\"\n",
                           "[experiment]\nmethods = \"PPM,XYZ\"\n", "[experiment]\nreplicates = many\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in), ConfigError) << text;
  }
}

TEST(Config, MissingFileIsError) { EXPECT_THROW(load_config("/nonexistent/ppm.ini"), ConfigError); }

TEST(Gradcheck, PassesOnAnalyticGradient) {
  GradcheckOptions options;
  options.count = 100;
  const auto report = gradcheck(ScenarioParams{}, options);
  EXPECT_TRUE(report.pass()) << report.failures << " failures, max rel " << report.max_rel_error;
  EXPECT_EQ(report.tuples, 100);
}

TEST(Gradcheck, SignFlipIsCaught) {
  GradcheckOptions options;
  options.count = 5;
  const GradientFn flipped = [](const ObjectiveContextd& ctx, const DesignPointd& point, double rho) {
    auto g = euclidean_gradient<double>(ctx, point, rho);
    g.p[0] = -g.p[0];
    return g;
  };
  EXPECT_FALSE(gradcheck(ScenarioParams{}, options, flipped).pass());
}
