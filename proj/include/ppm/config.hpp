#pragma once

// INI/TOML-style experiment configuration. Sections: [scenario],
// [experiment], [pcgd], [ppm], [gdma]. Unknown sections or keys are errors.

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "ppm/experiment.hpp"

namespace ppm {

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

ExperimentSpec parse_config(std::istream& in, ExperimentSpec base = {});
ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base = {});

/// Comma-separated list helpers shared with the command line.
std::vector<Method> parse_method_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace ppm
