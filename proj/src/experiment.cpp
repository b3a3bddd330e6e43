#include "ppm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "ppm/figures.hpp"

namespace ppm {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::PPM: return "PPM";
    case Method::FPA: return "FPA";
    case Method::RA: return "RA";
    case Method::SFPA: return "SFPA";
    case Method::GDMA: return "GDMA";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::PPM, Method::GDMA, Method::SFPA, Method::FPA, Method::RA};
  return methods;
}

std::optional<Method> parse_method(std::string_view tag) {
  for (Method m : all_methods())
    if (to_string(m) == tag) return m;
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  const auto& s = scenario;
  if (!(s.wavelength > 0) || !(s.aperture_wavelengths > 0) || !(s.power > 0) || !(s.noise_b > 0) ||
      !(s.noise_e > 0))
    throw InvalidInput("physical parameters must be positive");
  if (s.paths_b < 1 || s.paths_e < 1) throw InvalidInput("path counts must be at least 1");
  if (antenna_counts.empty()) throw InvalidInput("antenna count list is empty");
  for (int M : antenna_counts) {
    if (M < 2) throw InvalidInput("antenna counts must be at least 2");
    if (s.aperture() < s.wavelength / 2 * (M - 1)) throw InvalidInput("aperture too short for M antennas");
  }
  if (methods.empty()) throw InvalidInput("method list is empty");
  if (replicates < 1) throw InvalidInput("replicates must be at least 1");
  if (threads < 0) throw InvalidInput("threads must be nonnegative");
  pcgd.validate();
  ppm.validate();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, int num_antennas, int replicate) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ fnv1a(stream));
  h = splitmix64(h ^ static_cast<std::uint64_t>(num_antennas));
  return splitmix64(h ^ static_cast<std::uint64_t>(replicate));
}

std::uint64_t scenario_seed(const ExperimentSpec& spec, int num_antennas, int replicate) {
  return derive_seed(spec.seed, "scenario", num_antennas, replicate);
}

ChannelScenariod generate_scenario(const ScenarioParams& params, int num_antennas, std::uint64_t seed) {
  ChannelScenariod sc;
  sc.wavelength = params.wavelength;
  sc.num_antennas = num_antennas;
  sc.aperture = params.aperture();
  sc.power = params.power;
  sc.noise_b = params.noise_b;
  sc.noise_e = params.noise_e;
  sc.path_count_normalization = params.path_count_normalization;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  auto draw = [&](int count, std::vector<Pathd>& out) {
    // CN(0, 1/count): each quadrature has variance 1/(2 count)
    std::normal_distribution<double> quad(0.0, std::sqrt(0.5 / count));
    for (int l = 0; l < count; ++l) {
      const double re = quad(rng);
      const double im = quad(rng);
      out.push_back({{re, im}, angle(rng)});
    }
  };
  draw(params.paths_b, sc.paths_b);
  draw(params.paths_e, sc.paths_e);
  return sc;
}

namespace {

void fill_point(ResultRecord& rec, const DesignPointd& point) {
  rec.positions.assign(point.p.data(), point.p.data() + point.p.size());
  rec.phases.resize(point.w.size());
  for (Eigen::Index m = 0; m < point.w.size(); ++m) rec.phases[m] = std::arg(point.w[m]);
}

}  // namespace

CellResult run_cell(const ExperimentSpec& spec, Method method, int num_antennas, int replicate) {
  using Clock = std::chrono::steady_clock;
  CellResult out;
  ResultRecord& rec = out.record;
  rec.method = method;
  rec.num_antennas = num_antennas;
  rec.replicate = replicate;
  rec.seed = scenario_seed(spec, num_antennas, replicate);

  const auto t0 = Clock::now();
  try {
    const ObjectiveContextd ctx(generate_scenario(spec.scenario, num_antennas, rec.seed));
    const auto& sc = ctx.scenario();

    if (method == Method::PPM) {
      const PpmResult r = ppm_solve(ctx, default_start(ctx, spec.start), spec.ppm, spec.pcgd);
      int j = 0;
      for (const auto& o : r.trace.outer)
        out.trace.push_back({++j, o.phi, o.secrecy_rate, o.sigma, o.rho, o.grad_norm});
      fill_point(rec, r.point);
      rec.secrecy_rate = secrecy_rate(sc, r.point);
      rec.sigma = max_violation(r.point.p, sc.wavelength, sc.aperture);
      rec.outer_iterations = r.trace.outer_iterations();
      rec.inner_iterations = r.trace.inner_iterations();
      rec.status = r.trace.feasible_at_tolerance ? CellStatus::Ok : CellStatus::Infeasible;
    } else {
      BaselineResult r;
      switch (method) {
        case Method::FPA: r = fpa_solve(ctx, spec.pcgd); break;
        case Method::RA: r = ra_solve(ctx, spec.pcgd, derive_seed(spec.seed, "RA", num_antennas, replicate)); break;
        case Method::SFPA: r = sfpa_solve(ctx, spec.pcgd); break;
        case Method::GDMA: r = gdma_solve(ctx, spec.gdma, default_start(ctx, spec.start)); break;
        case Method::PPM: break;
      }
      fill_point(rec, r.point);
      rec.secrecy_rate = secrecy_rate(sc, r.point);
      rec.sigma = max_violation(r.point.p, sc.wavelength, sc.aperture);
      rec.outer_iterations = 1;
      rec.inner_iterations = r.trace.iterations();
      rec.status = CellStatus::Ok;
      out.trace.push_back(
          {1, ratio_objective(ctx, r.point), secrecy_rate_unclamped(sc, r.point), rec.sigma, 0.0, r.trace.final_grad_norm});
    }
  } catch (const std::exception& e) {
    rec.status = CellStatus::Error;
    rec.error = e.what();
  }
  rec.wall_clock = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

bool ExperimentResult::any_infeasible() const {
  return std::any_of(records.begin(), records.end(),
                     [](const ResultRecord& r) { return r.status == CellStatus::Infeasible; });
}

std::string trace_file_name(Method method, int num_antennas, int replicate) {
  return "trace_" + std::string(to_string(method)) + "_" + std::to_string(num_antennas) + "_" +
         std::to_string(replicate) + ".csv";
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  struct Cell {
    Method method;
    int M;
    int replicate;
  };
  std::vector<Cell> cells;
  for (Method method : spec.methods)
    for (int M : spec.antenna_counts)
      for (int r = 0; r < spec.replicates; ++r) cells.push_back({method, M, r});

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      results[i] = run_cell(spec, cells[i].method, cells[i].M, cells[i].replicate);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads = std::min<std::size_t>(spec.threads > 0 ? spec.threads : hw, cells.size());
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  ExperimentResult out;
  for (auto& cell : results) {
    const auto& rec = cell.record;
    out.traces[trace_file_name(rec.method, rec.num_antennas, rec.replicate)] = std::move(cell.trace);
    out.records.push_back(std::move(cell.record));
  }
  std::sort(out.records.begin(), out.records.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return std::tuple(a.method, a.num_antennas, a.replicate) < std::tuple(b.method, b.num_antennas, b.replicate);
  });

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    write_records(spec.out_dir / "records.csv", out.records);
    for (const auto& [name, rows] : out.traces) write_trace(spec.out_dir / name, rows);
    emit_figures(out.records, out.traces, spec.out_dir);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ';';
    s += num(xs[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ';'))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::string_view status_tag(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Infeasible: return "infeasible";
    case CellStatus::Error: return "error";
  }
  return "?";
}

// one physical line per record; fields with commas or quotes are quoted
std::string quote(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_quoted(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') out.back() += c;
      else if (i + 1 < line.size() && line[i + 1] == '"') out.back() += line[++i];
      else quoted = false;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw InvalidInput("unterminated quote in row: " + line);
  return out;
}

constexpr const char* kRecordHeader =
    "method,M,replicate,seed,status,error,secrecy_rate,sigma,outer_iters,inner_iters,wall_clock_s,positions,phases";
constexpr const char* kTraceHeader = "outer_iter,phi,secrecy_rate,sigma,rho,grad_norm";

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return in;
}

}  // namespace

void write_records(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  std::ofstream out(path);
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << to_string(r.method) << ',' << r.num_antennas << ',' << r.replicate << ',' << r.seed << ','
        << status_tag(r.status) << ',' << quote(r.error) << ',' << num(r.secrecy_rate) << ',' << num(r.sigma)
        << ',' << r.outer_iterations << ',' << r.inner_iterations << ',' << num(r.wall_clock) << ','
        << join(r.positions) << ',' << join(r.phases) << '\n';
  }
}

std::vector<ResultRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  std::getline(in, line);
  if (line != kRecordHeader) throw InvalidInput("unexpected records header in " + path.string());
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_quoted(line);
    if (f.size() != 13) throw InvalidInput("malformed record row: " + line);
    ResultRecord r;
    const auto method = parse_method(f[0]);
    if (!method) throw InvalidInput("unknown method tag " + f[0]);
    r.method = *method;
    r.num_antennas = std::stoi(f[1]);
    r.replicate = std::stoi(f[2]);
    r.seed = std::stoull(f[3]);
    r.status = f[4] == "ok" ? CellStatus::Ok : f[4] == "infeasible" ? CellStatus::Infeasible : CellStatus::Error;
    r.error = f[5];
    r.secrecy_rate = std::stod(f[6]);
    r.sigma = std::stod(f[7]);
    r.outer_iterations = std::stoi(f[8]);
    r.inner_iterations = std::stoi(f[9]);
    r.wall_clock = std::stod(f[10]);
    r.positions = parse_list(f[11]);
    r.phases = parse_list(f[12]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  out << kTraceHeader << '\n';
  for (const auto& t : rows)
    out << t.outer_iter << ',' << num(t.phi) << ',' << num(t.secrecy_rate) << ',' << num(t.sigma) << ','
        << num(t.rho) << ',' << num(t.grad_norm) << '\n';
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  std::getline(in, line);
  if (line != kTraceHeader) throw InvalidInput("unexpected trace header in " + path.string());
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw InvalidInput("malformed trace row: " + line);
    rows.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                    std::stod(f[5])});
  }
  return rows;
}

}  // namespace ppm
