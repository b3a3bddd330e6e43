// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failing criterion other than the informational complexity check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ppm/baselines.hpp"
#include "ppm/experiment.hpp"
#include "ppm/gradcheck.hpp"

using namespace ppm;
using cd = std::complex<double>;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail, bool informational = false) {
  const char* verdict = pass ? "PASS" : "FAIL";
  std::printf("criterion %2d: %s%s  %s\n", id, verdict, informational ? " (informational)" : "", detail.c_str());
  std::fflush(stdout);
  if (!pass && !informational) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ObjectiveContextd instance(int M, std::uint64_t seed) {
  return ObjectiveContextd(generate_scenario(ScenarioParams{}, M, derive_seed(2024, "acceptance", M, static_cast<int>(seed))));
}

void gradient_oracle() {
  GradcheckOptions options;
  options.count = 100;
  options.antenna_counts = {2, 4, 8};
  const auto refined = gradcheck(ScenarioParams{}, options);
  options.richardson = false;
  const auto plain = gradcheck(ScenarioParams{}, options);
  std::printf("  plain central differences: %d/%d components over tolerance, max rel %.2e\n", plain.failures,
              plain.components, plain.max_rel_error);
  report(1, refined.pass() && refined.seconds < 30,
         fmt("%d tuples, %d components, max rel %.2e, max abs %.2e, %.2f s (central differences h=1e-6 with one "
             "Richardson step)",
             refined.tuples, refined.components, refined.max_rel_error, refined.max_abs_error, refined.seconds));
}

void tangency_and_retraction() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const auto random_w = [&](int M) {
    CVecd w(M);
    for (auto& x : w) x = std::polar(1.0, phase(rng));
    return w;
  };
  const auto random_c = [&](int M, double scale) {
    CVecd v(M);
    for (auto& x : v) x = scale * cd(n(rng), n(rng));
    return v;
  };

  double max_radial = 0, max_modulus = 0, max_growth = -1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    const int M = 2 + trial % 15;
    const double scale = std::pow(10.0, -3.0 + 6.0 * (trial % 7) / 6.0);
    const DesignPointd point{random_w(M), RVecd::Zero(M)};
    const auto g = riemannian_gradient<double>(random_c(M, scale), RVecd::Zero(M), point);
    max_radial = std::max(max_radial, g.dw.cwiseProduct(point.w.conjugate()).real().cwiseAbs().maxCoeff());

    const auto next = retract(AmbientPointd{point.w + random_c(M, scale), RVecd::Zero(M)});
    for (const auto& x : next.w) max_modulus = std::max(max_modulus, std::abs(std::abs(x) - 1.0));

    const DesignPointd other{random_w(M), RVecd::Zero(M)};
    const auto moved = transport(g, other);
    max_growth = std::max(max_growth, moved.dw.norm() - g.dw.norm());
  }
  const bool pass = max_radial < 1e-12 && max_modulus < 1e-14 && max_growth <= 1e-12;
  report(2, pass,
         fmt("1000 draws: max |Re(grad_w conj(w))| %.2e, max ||w|-1| %.2e, max transport growth %.2e", max_radial,
             max_modulus, max_growth));
}

void inner_monotonicity() {
  int violations = 0, converged = 0, stationary_ok = 0;
  double worst_grad = 0;
  for (int s = 0; s < 20; ++s) {
    const auto ctx = instance(8, s);
    PcgdConfig config;
    config.eps_inner = 1e-10;
    config.max_inner_iters = 5000;
    const auto res = pcgd_solve(ctx, default_start(ctx), 1.0, config);
    double prev = res.trace.phi_start;
    for (const auto& it : res.trace.iterates) {
      if (!(it.phi <= prev)) ++violations;
      prev = it.phi;
    }
    if (res.trace.exit == InnerExit::Converged) {
      ++converged;
      worst_grad = std::max(worst_grad, res.trace.final_grad_norm);
      if (res.trace.final_grad_norm < 1e-3) ++stationary_ok;
    }
  }
  report(3, violations == 0 && stationary_ok == converged && converged > 0,
         fmt("20 instances M=8: %d monotonicity violations; %d/%d delta-phi exits with grad < 1e-3 (worst %.2e)",
             violations, stationary_ok, converged, worst_grad));
}

void feasibility_convergence() {
  const double lambda = 0.01;
  int ok = 0;
  double worst_sigma = 0, worst_gap = 1, worst_outer = 0;
  int monotone = 0;
  double worst_excess = 0;
  for (int s = 0; s < 20; ++s) {
    const auto ctx = instance(8, 100 + s);
    // centered array compressed to 75% of the minimum spacing
    const double spacing = 0.75 * lambda / 2;
    RVecd p(8);
    for (int m = 0; m < 8; ++m) p[m] = ctx.aperture() / 2 + spacing * (m - 3.5);
    const DesignPointd start{matched_phases(ctx.scenario(), p), p};
    const auto res = ppm_solve(ctx, start, PpmConfig{}, PcgdConfig{});
    const auto& outer = res.trace.outer;
    const double sigma = outer.back().sigma;
    double min_gap = 1;
    for (int m = 0; m + 1 < 8; ++m) min_gap = std::min(min_gap, res.point.p[m + 1] - res.point.p[m]);
    const int iters = static_cast<int>(outer.size());

    std::size_t first = 0;
    while (first < outer.size() && outer[first].rho == outer.front().rho) ++first;
    bool settled = true;
    for (std::size_t j = first; j < outer.size(); ++j) {
      settled = settled && outer[j].sigma <= outer[first].sigma;
      worst_excess = std::max(worst_excess, outer[j].sigma - outer[first].sigma);
    }
    monotone += settled;

    worst_sigma = std::max(worst_sigma, sigma);
    worst_gap = std::min(worst_gap, min_gap);
    worst_outer = std::max(worst_outer, static_cast<double>(iters));
    if (sigma <= 1e-6 && min_gap >= lambda / 2 - 2e-6 && iters <= 100 && settled) ++ok;
  }
  report(4, ok == 20,
         fmt("20 instances M=8 from 25%%-violating starts: %d/20 ok; worst sigma %.2e, min gap %.7f, max outer %.0f; "
             "sigma bounded by its first-escalation value in %d/20 (largest excess %.2e)",
             ok, worst_sigma, worst_gap, worst_outer, monotone, worst_excess));
}

struct SweepOutcome {
  std::vector<ResultRecord> records;
  double seconds;
};

SweepOutcome run_sweep(const fs::path& out_dir) {
  ExperimentSpec spec;
  spec.antenna_counts = {4, 8, 16};
  spec.replicates = 50;
  spec.seed = 1;
  spec.out_dir = out_dir;
  const auto start = Clock::now();
  auto result = run_experiment(spec);
  return {std::move(result.records), seconds_since(start)};
}

std::map<std::pair<Method, int>, std::vector<const ResultRecord*>> by_cell(const std::vector<ResultRecord>& records) {
  std::map<std::pair<Method, int>, std::vector<const ResultRecord*>> out;
  for (const auto& r : records) out[{r.method, r.num_antennas}].push_back(&r);
  return out;
}

double mean_rate(const std::vector<const ResultRecord*>& rows) {
  double sum = 0;
  for (const auto* r : rows) sum += r->secrecy_rate;
  return rows.empty() ? 0 : sum / static_cast<double>(rows.size());
}

void outer_speed(const std::vector<ResultRecord>& records) {
  const auto cells = by_cell(records);
  bool pass = true;
  std::string detail;
  for (int M : {4, 8, 16}) {
    std::vector<double> outer;
    double slowest = 0;
    int bad = 0;
    for (const auto* r : cells.at({Method::PPM, M})) {
      outer.push_back(r->outer_iterations);
      slowest = std::max(slowest, r->wall_clock);
      bad += r->status != CellStatus::Ok;
    }
    const double med = median(outer);
    pass = pass && med <= 30 && bad == 0 && (M != 16 || slowest < 10);
    detail += fmt("M=%d median %.1f max %.0f slowest %.2f s; ", M, med, *std::max_element(outer.begin(), outer.end()),
                  slowest);
  }
  report(5, pass, detail);
}

void architecture_ordering(const std::vector<ResultRecord>& records) {
  const auto cells = by_cell(records);
  bool pass = true;
  std::string detail;
  for (int M : {8, 16}) {
    const double ppm = mean_rate(cells.at({Method::PPM, M}));
    detail += fmt("M=%d PPM %.3f", M, ppm);
    for (Method m : {Method::GDMA, Method::SFPA, Method::FPA, Method::RA}) {
      const double other = mean_rate(cells.at({m, M}));
      pass = pass && ppm > other;
      detail += fmt(" %s %.3f", std::string(to_string(m)).c_str(), other);
    }
    detail += "; ";
  }
  report(6, pass, detail);
}

void dof_benefit(const std::vector<ResultRecord>& records) {
  const auto cells = by_cell(records);
  const double r4 = mean_rate(cells.at({Method::PPM, 4}));
  const double r8 = mean_rate(cells.at({Method::PPM, 8}));
  const double r16 = mean_rate(cells.at({Method::PPM, 16}));
  report(7, r4 <= r8 && r8 <= r16, fmt("mean PPM rate M=4 %.3f, M=8 %.3f, M=16 %.3f", r4, r8, r16));
}

void small_instance_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> n(0.0, 1.0);
  int ok = 0;
  double worst = 1e300;
  const int instances = 10;
  for (int s = 0; s < instances; ++s) {
    ChannelScenariod sc;
    sc.num_antennas = 2;
    sc.aperture = 0.3;
    sc.paths_b = {{cd(n(rng), n(rng)), angle(rng)}};
    sc.paths_e = {{cd(0, 0), angle(rng)}};
    const ObjectiveContextd ctx(sc);

    double grid_best = -1e300;
    const double lo = sc.wavelength / 2;
    for (int i = 0; i < 720; ++i) {
      const double dphase = 2 * std::numbers::pi * i / 720;
      for (int j = 0; j < 200; ++j) {
        const double gap = lo + (sc.aperture - lo) * j / 199;
        CVecd w(2);
        w << 1.0, std::polar(1.0, dphase);
        RVecd p(2);
        p << 0.0, gap;
        grid_best = std::max(grid_best, secrecy_rate_unclamped(sc, DesignPointd{w, p}));
      }
    }
    const auto res = ppm_solve(ctx, default_start(ctx), PpmConfig{}, PcgdConfig{});
    const double rate = secrecy_rate_unclamped(sc, res.point);
    worst = std::min(worst, rate - grid_best);
    if (rate >= grid_best - 1e-2) ++ok;
  }
  report(8, ok == instances,
         fmt("%d/%d M=2 instances within 1e-2 of the 720x200 grid optimum (worst margin %+.2e)", ok, instances, worst));
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

void determinism(const fs::path& a, const fs::path& b) {
  const std::string first = records_without_clock(a / "records.csv");
  const std::string second = records_without_clock(b / "records.csv");
  report(9, !first.empty() && first == second,
         fmt("records.csv of two identical sweeps: %zu bytes each, %s", first.size(),
             first == second ? "identical" : "different"));
}

double time_per_call(const std::function<void()>& fn) {
  int reps = 1;
  for (;;) {
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const double t = seconds_since(start);
    if (t > 0.2) return t / reps;
    reps *= 2;
  }
}

void complexity_scaling() {
  ScenarioParams params;
  params.aperture_wavelengths = 100;
  std::map<int, double> grad_cost, iter_cost;
  for (int M : {16, 64}) {
    const ObjectiveContextd ctx(generate_scenario(params, M, 5));
    const DesignPointd point = default_start(ctx, StartGeometry::CenteredUla);
    volatile double sink = 0;
    grad_cost[M] = time_per_call([&] { sink = sink + euclidean_gradient<double>(ctx, point, 1.0).p[0]; });
    iter_cost[M] = time_per_call([&] {
      const auto g = manifold_gradient(ctx, point, 1.0, false);
      sink = sink + apply_preconditioner(ctx, point, g, 1.0, Preconditioner::Hessian).dp[0];
    });
  }
  const double slope = std::log(grad_cost[64] / grad_cost[16]) / std::log(4.0);
  const double iter_slope = std::log(iter_cost[64] / iter_cost[16]) / std::log(4.0);
  report(10, slope < 3,
         fmt("gradient cost %.2e s (M=16) -> %.2e s (M=64), log-log slope %.2f; gradient plus Hessian "
             "preconditioner slope %.2f",
             grad_cost[16], grad_cost[64], slope, iter_slope),
         true);
}

}  // namespace

int main() {
  const auto start = Clock::now();
  gradient_oracle();
  tangency_and_retraction();
  inner_monotonicity();
  feasibility_convergence();

  const fs::path root = fs::temp_directory_path() / "ppm_acceptance";
  fs::remove_all(root);
  const auto sweep = run_sweep(root / "a");
  std::printf("  sweep M in {4,8,16}, 5 methods, 50 seeds: %.1f s\n", sweep.seconds);
  outer_speed(sweep.records);
  architecture_ordering(sweep.records);
  dof_benefit(sweep.records);
  small_instance_oracle();
  run_sweep(root / "b");
  determinism(root / "a", root / "b");
  complexity_scaling();

  std::printf("%s: %d failing criteria, %.1f s total\n", failures ? "FAIL" : "PASS", failures, seconds_since(start));
  return failures ? 1 : 0;
}
