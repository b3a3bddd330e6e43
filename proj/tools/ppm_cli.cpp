#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "ppm/config.hpp"
#include "ppm/experiment.hpp"
#include "ppm/figures.hpp"
#include "ppm/gradcheck.hpp"

namespace {

enum ExitCode { kOk = 0, kInvalidConfig = 1, kGradcheckFailure = 2, kInfeasible = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string methods;
  std::string antenna_counts;
  std::optional<int> replicates;
  std::optional<int> threads;
  std::optional<double> eps_inner;
  std::optional<double> eps_outer;
  std::optional<double> sigma_min;
  std::optional<int> max_inner;
  std::optional<int> max_outer;
  std::optional<double> gdma_eps;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Experiment seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--methods", o.methods, "Comma-separated methods (PPM,GDMA,SFPA,FPA,RA)");
  cmd->add_option("--m", o.antenna_counts, "Comma-separated antenna counts");
  cmd->add_option("--replicates", o.replicates, "Replicates per (method, M)");
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  cmd->add_option("--eps-inner", o.eps_inner, "PCGD objective-change tolerance");
  cmd->add_option("--eps-outer", o.eps_outer, "Outer displacement tolerance");
  cmd->add_option("--sigma-min", o.sigma_min, "Feasibility tolerance");
  cmd->add_option("--max-inner", o.max_inner, "PCGD iteration cap");
  cmd->add_option("--max-outer", o.max_outer, "Outer iteration cap");
  cmd->add_option("--gdma-eps", o.gdma_eps, "GDMA objective-change tolerance");
}

ppm::ExperimentSpec build_spec(const Overrides& o) {
  ppm::ExperimentSpec spec = o.config.empty() ? ppm::ExperimentSpec{} : ppm::load_config(o.config);
  if (o.seed) spec.seed = *o.seed;
  if (!o.out.empty()) spec.out_dir = o.out;
  if (!o.methods.empty()) spec.methods = ppm::parse_method_list(o.methods);
  if (!o.antenna_counts.empty()) spec.antenna_counts = ppm::parse_int_list(o.antenna_counts);
  if (o.replicates) spec.replicates = *o.replicates;
  if (o.threads) spec.threads = *o.threads;
  if (o.eps_inner) spec.pcgd.eps_inner = *o.eps_inner;
  if (o.eps_outer) spec.ppm.eps_outer = *o.eps_outer;
  if (o.sigma_min) spec.ppm.penalty.sigma_min = *o.sigma_min;
  if (o.max_inner) spec.pcgd.max_inner_iters = *o.max_inner;
  if (o.max_outer) spec.ppm.max_outer_iters = *o.max_outer;
  if (o.gdma_eps) spec.gdma.eps = *o.gdma_eps;
  try {
    spec.validate();
  } catch (const ppm::InvalidInput& e) {
    throw ppm::ConfigError(e.what());
  }
  return spec;
}

int report_experiment(const ppm::ExperimentResult& result, bool print_records) {
  if (print_records) {
    for (const auto& r : result.records) {
      std::printf("%-5s M=%-3d rep=%-3d rate=%.6f sigma=%.3g outer=%d inner=%d %s\n",
                  std::string(ppm::to_string(r.method)).c_str(), r.num_antennas, r.replicate, r.secrecy_rate,
                  r.sigma, r.outer_iterations, r.inner_iterations,
                  r.status == ppm::CellStatus::Error ? r.error.c_str() : "");
    }
  }
  for (const auto& s : ppm::summarize(result.records))
    std::printf("%-5s M=%-3d mean=%.6f median=%.6f cells=%d errors=%d\n",
                std::string(ppm::to_string(s.method)).c_str(), s.num_antennas, s.mean_rate, s.median_rate, s.cells,
                s.failures);
  if (result.any_infeasible()) {
    std::fprintf(stderr, "warning: at least one cell ended infeasible at tolerance\n");
    return kInfeasible;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint beamformer and movable-antenna placement optimizer"};
  app.require_subcommand(1);

  Overrides solve_flags;
  auto* solve = app.add_subcommand("solve", "Run one replicate for each method and M");
  add_experiment_flags(solve, solve_flags);

  Overrides sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Run the full Monte-Carlo experiment");
  add_experiment_flags(sweep, sweep_flags);

  ppm::GradcheckOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradient");
  grad->add_option("--count", gc.count, "Number of random tuples")->check(CLI::PositiveNumber);
  grad->add_option("--seed", gc.seed, "Random seed");
  grad->add_flag("!--no-richardson", gc.richardson, "Plain central differences only");

  std::string figures_in, figures_out;
  auto* figures = app.add_subcommand("emit-figures", "Rebuild figure tables from a results directory");
  figures->add_option("--in", figures_in, "Directory holding records.csv and trace files")->required();
  figures->add_option("--out", figures_out, "Output directory (defaults to --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidConfig;
  }

  try {
    if (*solve) {
      ppm::ExperimentSpec spec = build_spec(solve_flags);
      if (!solve_flags.replicates) spec.replicates = 1;
      if (solve_flags.antenna_counts.empty()) spec.antenna_counts = {8};
      return report_experiment(ppm::run_experiment(spec), true);
    }
    if (*sweep) return report_experiment(ppm::run_experiment(build_spec(sweep_flags)), false);
    if (*grad) {
      const auto report = ppm::gradcheck(ppm::ScenarioParams{}, gc);
      std::printf("gradcheck: tuples=%d components=%d failures=%d max_rel=%.3e max_abs=%.3e time=%.2fs\n",
                  report.tuples, report.components, report.failures, report.max_rel_error, report.max_abs_error,
                  report.seconds);
      return report.pass() ? kOk : kGradcheckFailure;
    }
    if (*figures) {
      const std::filesystem::path in_dir = figures_in;
      const std::filesystem::path out_dir = figures_out.empty() ? in_dir : std::filesystem::path(figures_out);
      const auto records = ppm::read_records(in_dir / "records.csv");
      std::map<std::string, std::vector<ppm::TraceRow>> traces;
      for (const auto& r : records) {
        const auto name = ppm::trace_file_name(r.method, r.num_antennas, r.replicate);
        if (std::filesystem::exists(in_dir / name)) traces[name] = ppm::read_trace(in_dir / name);
      }
      if (ppm::emit_figures(records, traces, out_dir) == ppm::EmitStatus::EmptyInput)
        std::fprintf(stderr, "warning: no records, nothing written\n");
      return kOk;
    }
  } catch (const ppm::ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidConfig;
  }
  return kOk;
}
