#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "insh/app.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration")->required();
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--workers", c.workers, "evaluation threads (overrides the config)");
  sub->add_option("--out", c.out, "output directory (overrides the config)");
  sub->add_option("--override", c.overrides, "dotted key=value override, repeatable");
}

insh::RunConfig load(const Common& c) {
  auto overrides = c.overrides;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  if (c.workers) overrides.push_back("workers=" + std::to_string(*c.workers));
  if (!c.out.empty()) overrides.push_back("output=" + nlohmann::json(c.out).dump());
  return insh::load_config(c.config, overrides);
}

void report(const nlohmann::ordered_json& j) {
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Induced natural selection heuristic for Bayesian optimal design"};
  app.require_subcommand(1);

  Common common;
  bool resume = false;
  std::string trace;

  auto* insh_cmd = app.add_subcommand("insh", "run the optimizer; writes result.json, trace.csv and box-plot data");
  add_common(insh_cmd, common);
  insh_cmd->add_flag("--resume", resume, "reuse evaluations from an existing trace in the output directory");

  auto* grid_cmd = app.add_subcommand("grid", "exhaustive lattice search; writes surface.csv and grid_result.json");
  add_common(grid_cmd, common);

  auto* mcmc_cmd = app.add_subcommand("mcmc", "augmented-space MCMC; writes chain.csv and mcmc_result.json");
  add_common(mcmc_cmd, common);

  auto* win_cmd = app.add_subcommand("windows", "sampling windows and bootstrap designs from a trace");
  add_common(win_cmd, common);
  win_cmd->add_option("--trace", trace, "trace CSV (default: <out>/trace.csv)");

  auto* eval_cmd = app.add_subcommand("evaluate", "re-score configured designs at the evaluate budget");
  add_common(eval_cmd, common);

  auto* cmp_cmd = app.add_subcommand("compare", "replicate utilities of named designs for side-by-side box plots");
  add_common(cmp_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  insh::RunConfig cfg;
  try {
    cfg = load(common);
  } catch (const insh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*insh_cmd) {
      report(insh::command_insh(cfg, {resume}));
    } else if (*grid_cmd) {
      report(insh::command_grid(cfg));
    } else if (*mcmc_cmd) {
      report(insh::command_mcmc(cfg));
    } else if (*win_cmd) {
      report(insh::command_windows(cfg, trace));
    } else if (*eval_cmd) {
      report(insh::command_evaluate(cfg));
    } else if (*cmp_cmd) {
      report(insh::command_compare(cfg));
    }
  } catch (const insh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
