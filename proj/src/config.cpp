#include "ppm/config.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ppm {

namespace {

using Values = std::vector<std::string>;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"'");
  const auto e = s.find_last_not_of(" \t\"'");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

const std::string& single(const std::string& key, const Values& v) {
  if (v.size() != 1) throw ConfigError(key + ": expected a single value");
  return v.front();
}

double as_double(const std::string& key, const Values& v) {
  const std::string s = trim(single(key, v));
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": not a number: " + s);
}

long long as_int(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(key + ": not an integer: " + s);
  return x;
}

int as_int(const std::string& key, const Values& v) { return static_cast<int>(as_int(key, single(key, v))); }

std::uint64_t as_u64(const std::string& key, const Values& v) {
  const std::string s = trim(single(key, v));
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(key + ": not an unsigned integer: " + s);
  return x;
}

bool as_bool(const std::string& key, const Values& v) {
  const std::string s = trim(single(key, v));
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw ConfigError(key + ": not a boolean: " + s);
}

std::string as_string(const std::string& key, const Values& v) { return trim(single(key, v)); }

// Lists may arrive as several inputs ([4, 8]) or one comma-joined string.
Values flatten(const Values& v) {
  Values out;
  for (const auto& item : v) {
    std::string field;
    std::istringstream in(item);
    while (std::getline(in, field, ',')) {
      field = trim(field);
      if (!field.empty() && field != "[" && field != "]") out.push_back(field);
    }
  }
  return out;
}

using Setter = std::function<void(ExperimentSpec&, const std::string&, const Values&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.wavelength", [](auto& s, auto& k, auto& v) { s.scenario.wavelength = as_double(k, v); }},
      {"scenario.aperture_wavelengths",
       [](auto& s, auto& k, auto& v) { s.scenario.aperture_wavelengths = as_double(k, v); }},
      {"scenario.power", [](auto& s, auto& k, auto& v) { s.scenario.power = as_double(k, v); }},
      {"scenario.noise_b", [](auto& s, auto& k, auto& v) { s.scenario.noise_b = as_double(k, v); }},
      {"scenario.noise_e", [](auto& s, auto& k, auto& v) { s.scenario.noise_e = as_double(k, v); }},
      {"scenario.paths_b", [](auto& s, auto& k, auto& v) { s.scenario.paths_b = as_int(k, v); }},
      {"scenario.paths_e", [](auto& s, auto& k, auto& v) { s.scenario.paths_e = as_int(k, v); }},
      {"scenario.path_count_normalization",
       [](auto& s, auto& k, auto& v) { s.scenario.path_count_normalization = as_bool(k, v); }},

      {"experiment.antenna_counts",
       [](auto& s, auto& k, auto& v) {
         s.antenna_counts.clear();
         for (const auto& item : flatten(v)) s.antenna_counts.push_back(static_cast<int>(as_int(k, item)));
       }},
      {"experiment.methods",
       [](auto& s, auto& k, auto& v) {
         s.methods.clear();
         for (const auto& item : flatten(v)) {
           const auto m = parse_method(item);
           if (!m) throw ConfigError(k + ": unknown method " + item);
           s.methods.push_back(*m);
         }
       }},
      {"experiment.seed", [](auto& s, auto& k, auto& v) { s.seed = as_u64(k, v); }},
      {"experiment.replicates", [](auto& s, auto& k, auto& v) { s.replicates = as_int(k, v); }},
      {"experiment.threads", [](auto& s, auto& k, auto& v) { s.threads = as_int(k, v); }},
      {"experiment.out_dir", [](auto& s, auto& k, auto& v) { s.out_dir = as_string(k, v); }},
      {"experiment.start",
       [](auto& s, auto& k, auto& v) {
         const auto tag = as_string(k, v);
         if (tag == "greedy") s.start = StartGeometry::GreedyGrid;
         else if (tag == "ula") s.start = StartGeometry::CenteredUla;
         else throw ConfigError(k + ": expected greedy or ula");
       }},

      {"pcgd.tau", [](auto& s, auto& k, auto& v) { s.pcgd.tau = as_double(k, v); }},
      {"pcgd.armijo_coeff", [](auto& s, auto& k, auto& v) { s.pcgd.armijo_coeff = as_double(k, v); }},
      {"pcgd.psi0", [](auto& s, auto& k, auto& v) { s.pcgd.psi0 = as_double(k, v); }},
      {"pcgd.max_inner_iters", [](auto& s, auto& k, auto& v) { s.pcgd.max_inner_iters = as_int(k, v); }},
      {"pcgd.eps_inner", [](auto& s, auto& k, auto& v) { s.pcgd.eps_inner = as_double(k, v); }},
      {"pcgd.eps_patience", [](auto& s, auto& k, auto& v) { s.pcgd.eps_patience = as_int(k, v); }},
      {"pcgd.restart_threshold", [](auto& s, auto& k, auto& v) { s.pcgd.restart_threshold = as_double(k, v); }},
      {"pcgd.max_backtracks", [](auto& s, auto& k, auto& v) { s.pcgd.max_backtracks = as_int(k, v); }},
      {"pcgd.adaptive_initial_step",
       [](auto& s, auto& k, auto& v) { s.pcgd.adaptive_initial_step = as_bool(k, v); }},
      {"pcgd.trial_step",
       [](auto& s, auto& k, auto& v) {
         const auto tag = as_string(k, v);
         if (tag == "quadratic") s.pcgd.trial_step = TrialStep::QuadraticFit;
         else if (tag == "previous") s.pcgd.trial_step = TrialStep::PreviousDecrease;
         else throw ConfigError(k + ": expected quadratic or previous");
       }},
      {"pcgd.preconditioner",
       [](auto& s, auto& k, auto& v) {
         const auto tag = as_string(k, v);
         if (tag == "hessian") s.pcgd.preconditioner = Preconditioner::Hessian;
         else if (tag == "diagonal") s.pcgd.preconditioner = Preconditioner::HessianDiagonal;
         else if (tag == "wavenumber") s.pcgd.preconditioner = Preconditioner::Wavenumber;
         else if (tag == "none") s.pcgd.preconditioner = Preconditioner::None;
         else throw ConfigError(k + ": expected hessian, diagonal, wavenumber or none");
       }},

      {"ppm.rho", [](auto& s, auto& k, auto& v) { s.ppm.penalty.rho = as_double(k, v); }},
      {"ppm.eta", [](auto& s, auto& k, auto& v) { s.ppm.penalty.eta = as_double(k, v); }},
      {"ppm.c1", [](auto& s, auto& k, auto& v) { s.ppm.penalty.c1 = as_double(k, v); }},
      {"ppm.c2", [](auto& s, auto& k, auto& v) { s.ppm.penalty.c2 = as_double(k, v); }},
      {"ppm.sigma_min", [](auto& s, auto& k, auto& v) { s.ppm.penalty.sigma_min = as_double(k, v); }},
      {"ppm.eps_outer", [](auto& s, auto& k, auto& v) { s.ppm.eps_outer = as_double(k, v); }},
      {"ppm.max_outer_iters", [](auto& s, auto& k, auto& v) { s.ppm.max_outer_iters = as_int(k, v); }},

      {"gdma.tau", [](auto& s, auto& k, auto& v) { s.gdma.tau = as_double(k, v); }},
      {"gdma.armijo_coeff", [](auto& s, auto& k, auto& v) { s.gdma.armijo_coeff = as_double(k, v); }},
      {"gdma.initial_step", [](auto& s, auto& k, auto& v) { s.gdma.initial_step = as_double(k, v); }},
      {"gdma.max_backtracks", [](auto& s, auto& k, auto& v) { s.gdma.max_backtracks = as_int(k, v); }},
      {"gdma.max_iters", [](auto& s, auto& k, auto& v) { s.gdma.max_iters = as_int(k, v); }},
      {"gdma.eps", [](auto& s, auto& k, auto& v) { s.gdma.eps = as_double(k, v); }},
  };
  return table;
}

}  // namespace

ExperimentSpec parse_config(std::istream& in, ExperimentSpec base) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.parents.size() != 1) throw ConfigError("key outside a known section: " + item.fullname());
    const std::string key = item.parents.front() + "." + item.name;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: " + key);
    it->second(base, key, item.inputs);
  }
  try {
    base.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return base;
}

ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> out;
  for (const auto& item : flatten({text})) {
    const auto m = parse_method(item);
    if (!m) throw ConfigError("unknown method " + item);
    out.push_back(*m);
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : flatten({text})) out.push_back(static_cast<int>(as_int("list", item)));
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

}  // namespace ppm
