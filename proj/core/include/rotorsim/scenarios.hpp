#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rotorsim/config.hpp"

namespace rotorsim {

struct ScenarioOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> j_max;
  bool quiet = false;
};

const std::vector<std::string>& scenario_names();

// Runs one named scenario, writing its CSV outputs, summary.json and
// plots.json into the output directory. Throws ConfigError for semantic
// configuration problems and NumericalError (or subclasses) for aborted
// runs; outputs are deterministic for a fixed (config, seed).
void run_scenario(const std::string& name, RunConfig cfg,
                  const ScenarioOverrides& overrides = {});

// Worker count for scenario sweeps: ROTORSIM_THREADS when set, otherwise
// min(hardware_concurrency, 4). Results never depend on it.
int scenario_thread_count();

}  // namespace rotorsim
