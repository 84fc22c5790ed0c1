#pragma once

#include "evmcv/harness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace evmcv {

// Experiment files use a small TOML subset: [experiment] or [[experiment]]
// headers, dotted sub-tables ([experiment.search], [experiment.basket],
// [experiment.cost], [experiment.reference]), and key = value lines where a
// value is a string, integer, float, boolean or (nested) array. Comments
// start with '#'. The accepted keys are listed in the README.

std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& origin = "<config>");
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

}  // namespace evmcv
