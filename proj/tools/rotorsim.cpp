// rotorsim command-line scenario runner

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "rotorsim/config.hpp"
#include "rotorsim/constants.hpp"
#include "rotorsim/dynamics.hpp"
#include "rotorsim/scenarios.hpp"

namespace {

struct Args {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int j_max = -1;
  bool quiet = false;
};

int run(const std::string& scenario, const Args& args) {
  using namespace rotorsim;
  try {
    RunConfig cfg = parse_config_file(args.config_path);
    ScenarioOverrides ov;
    if (!args.out_dir.empty()) ov.out_dir = args.out_dir;
    if (args.seed >= 0) ov.seed = static_cast<std::uint64_t>(args.seed);
    if (args.j_max >= 0) ov.j_max = args.j_max;
    ov.quiet = args.quiet;

    // warn (not fail) when an envelope pulse is too long for the sudden picture
    if (!args.quiet) {
      for (const auto& p : cfg.pulses) {
        if (!sudden_limit_ok(p, cfg.rotor)) {
          std::fprintf(stderr,
                       "warning: a pulse is not short against the rotational "
                       "period; the sudden picture does not apply\n");
        }
      }
    }

    run_scenario(scenario, std::move(cfg), ov);
    if (!args.quiet) {
      std::fprintf(stderr, "%s: done\n", scenario.c_str());
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigid-rotor dynamics and control toolkit"};
  app.set_version_flag("--version",
                       std::string(rotorsim::kToolName) + " " + rotorsim::kVersion);
  app.require_subcommand(1);

  Args args;
  std::string chosen;
  for (const std::string& name : rotorsim::scenario_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "scenario configuration file")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", args.seed, "random seed (overrides config)");
    sub->add_option("--jmax", args.j_max, "basis truncation (overrides config)");
    sub->add_flag("--quiet", args.quiet, "suppress progress messages");
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);
  return run(chosen, args);
}
