#pragma once

// Scenario execution: builds the configured geometry/module/operator stack,
// runs the requested verification suite, and emits a RunReport.

#include <string>
#include <vector>

#include "diracforge/config.hpp"
#include "diracforge/report.hpp"

namespace df {

struct PresetInfo {
  std::string name;
  std::string equation_ref;  // identity the preset exercises
  std::string description;
};

const std::vector<PresetInfo>& preset_catalog();
// returns the preset's config; throws ConfigError for unknown names
Config preset_config(const std::string& name);

// full algebra / module suite over all signatures with n <= max_dim, both
// product sign conventions
RunReport run_verify_algebra(int max_dim, unsigned long long seed);

// dispatch on [scenario] kind
RunReport run_scenario(const Config& cfg, unsigned long long seed_override,
                       bool has_seed_override);

// refinement study: reruns the scenario's primary error measure per grid and
// fits the convergence order
RunReport run_convergence(const Config& cfg, const std::vector<int>& grids,
                          unsigned long long seed_override,
                          bool has_seed_override);

}  // namespace df
