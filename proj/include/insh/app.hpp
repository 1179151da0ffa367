#pragma once

// Orchestration behind the command-line tool: builds models, spaces and
// utility functions from a RunConfig, runs one command and writes its
// artifacts into the output directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "insh/baselines.hpp"
#include "insh/config.hpp"
#include "insh/insh.hpp"
#include "insh/io.hpp"
#include "insh/models.hpp"
#include "insh/parallel.hpp"
#include "insh/utility.hpp"
#include "insh/windows.hpp"

namespace insh {

inline ModelSpec make_model(const ModelConfig& m) {
  if (m.name == "death") return DeathModel(m.death);
  if (m.name == "pk") return PkModel(m.pk);
  if (m.name == "logistic") return LogisticModel(m.logistic);
  if (m.name == "conjugate-normal") return ConjugateNormalModel(m.conjugate);
  throw ConfigError("model.name: unknown model '" + m.name + "'");
}

inline DesignSpace make_space(const RunConfig& c) { return DesignSpace(c.space.dimension, constraint_set(c)); }

inline AbcConfig make_abc_config(const RunConfig& c, const DeathModel& model) {
  AbcConfig a;
  a.bank_size = c.estimator.bank_size;
  a.tolerance = c.estimator.tolerance ? *c.estimator.tolerance : death_default_tolerance(c.space.dimension);
  a.discrepancy = Discrepancy::from_name(c.estimator.discrepancy);
  a.grid = death_param_grid(model, c.estimator.grid_cells, c.estimator.grid_mass);
  return a;
}

/// Utility used during a search. Nested MC draws a fresh stream per call;
/// ABCdE shares one simulation bank (seeded from the master seed) across all
/// designs, so differences between designs are not swamped by bank noise.
inline UtilityFn make_search_utility(const RunConfig& c) {
  const ModelSpec model = make_model(c.model);
  if (c.estimator.kind == EstimatorKind::NestedMc) {
    const std::size_t b = c.estimator.b_outer, bt = c.estimator.b_inner;
    return [model, b, bt](const Design& d, std::uint64_t seed) { return sig_nested_mc(model, d, b, bt, seed); };
  }
  const auto& death = std::get<DeathModel>(model);
  auto abc = std::make_shared<AbcConfig>(make_abc_config(c, death));
  Rng rng = make_rng(derive_seed(c.seed, {stream::kBank}));
  auto bank = std::make_shared<DeathPathBank>(death, c.estimator.bank_size, rng);
  return [death, abc, bank](const Design& d, std::uint64_t) { return abcde_utility(death, d, *bank, *abc); };
}

/// Utility for independent re-scoring: every call is a fresh estimate. ABCdE
/// builds a new bank from the call's seed.
inline UtilityFn make_rescore_utility(const RunConfig& c, const Budget& budget) {
  const ModelSpec model = make_model(c.model);
  if (c.estimator.kind == EstimatorKind::NestedMc) {
    const std::size_t b = budget.b_outer, bt = budget.b_inner;
    return [model, b, bt](const Design& d, std::uint64_t seed) { return sig_nested_mc(model, d, b, bt, seed); };
  }
  const auto& death = std::get<DeathModel>(model);
  auto abc = std::make_shared<AbcConfig>(make_abc_config(c, death));
  return [death, abc](const Design& d, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    DeathPathBank bank(death, abc->bank_size, rng);
    auto u = abcde_utility(death, d, bank, *abc);
    u.seed = seed;
    return u;
  };
}

inline std::filesystem::path output_dir(const RunConfig& c) {
  std::filesystem::path p(c.output);
  std::filesystem::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

struct InshCommandOptions {
  bool resume = false;
};

inline nlohmann::ordered_json command_insh(const RunConfig& c, const InshCommandOptions& opt = {}) {
  const auto dir = output_dir(c);
  const auto trace_path = dir / "trace.csv";
  const DesignSpace space = make_space(c);
  const UtilityFn fn = make_search_utility(c);

  std::map<std::pair<int, std::uint64_t>, ScoredDesign> memo;
  int complete = 0;
  const bool resuming = opt.resume && std::filesystem::exists(trace_path);
  if (resuming) {
    auto prior = read_trace(trace_path);
    memo = resume_memo(prior);
    // The last generation on disk may be partial; keep only those before it.
    int last = 0;
    for (const auto& r : prior) last = std::max(last, r.generation);
    complete = std::max(0, last - 1);
    std::erase_if(prior, [&](const TraceRecord& r) { return r.generation > complete; });
    const auto tmp = dir / "trace.csv.tmp";
    write_trace(tmp, prior);
    std::filesystem::rename(tmp, trace_path);
  }

  TraceWriter writer(trace_path, !resuming);
  InshOptions options;
  options.workers = c.workers;
  options.on_generation = [&](const GenerationRecord& g) {
    if (g.generation > complete) writer.append(records_of(g));
  };
  options.resume = resuming ? &memo : nullptr;

  const InshResult result = run_insh(space, fn, c.schedule, c.acceptance, c.kernel, c.seed, options);

  auto j = result_to_json(result, c.model.name, c.seed);
  write_json(dir / "result.json", j);
  write_text(dir / "convergence.csv", convergence_boxplot_csv(result.trace));
  write_text(dir / "coordinates.csv", coordinate_boxplot_csv(result.trace));
  return j;
}

inline nlohmann::ordered_json command_grid(const RunConfig& c) {
  const auto dir = output_dir(c);
  const GridSearchResult g =
      run_grid_search(make_space(c), c.grid.spacing, make_search_utility(c), c.seed, c.workers, c.grid.max_points);
  write_text(dir / "surface.csv", surface_csv(g.surface));
  nlohmann::ordered_json j;
  j["command"] = "grid";
  j["model"] = c.model.name;
  j["seed"] = c.seed;
  j["spacing"] = c.grid.spacing;
  j["points"] = g.surface.size();
  j["best"] = scored_to_json(g.best);
  write_json(dir / "grid_result.json", j);
  return j;
}

inline nlohmann::ordered_json command_mcmc(const RunConfig& c) {
  if (c.model.name != "death")
    throw ConfigError("model.name: the mcmc command needs per-sample utilities, available for the death model only");
  const auto dir = output_dir(c);
  const DeathModel model(c.model.death);
  const auto grid = death_param_grid(model, c.estimator.grid_cells, c.estimator.grid_mass);
  const auto prior = prior_cell_masses(model, grid);
  UtilitySampleFn sample = [&](const ParamDraw&, const Dataset& y, const Design& d) {
    return death_grid_kld(model, grid, prior, d, y);
  };
  std::vector<double> scale = c.mcmc.scale.empty() ? std::vector<double>(c.space.dimension, 0.1) : c.mcmc.scale;
  Rng rng = make_rng(derive_seed(c.seed, {stream::kChain}));
  const auto r = run_muller(make_space(c), model, sample, RandomWalkProposal{scale}, c.mcmc.chain_length,
                            c.mcmc.burn_in, rng);

  std::string csv = "step";
  for (std::size_t k = 0; k < c.space.dimension; ++k) csv += ",x" + std::to_string(k + 1);
  csv += '\n';
  for (std::size_t s = 0; s < r.chain.size(); ++s) {
    csv += std::to_string(s + 1);
    for (double v : r.chain[s].values) csv += ',' + format_double(v);
    csv += '\n';
  }
  write_text(dir / "chain.csv", csv);

  nlohmann::ordered_json j;
  j["command"] = "mcmc";
  j["model"] = c.model.name;
  j["seed"] = c.seed;
  std::vector<double> mode;
  for (std::size_t k = 0; k < c.space.dimension; ++k) mode.push_back(chain_mode(r.chain, k, c.mcmc.smoothing_bins));
  j["mode"] = mode;
  j["chain_length"] = c.mcmc.chain_length;
  j["burn_in"] = c.mcmc.burn_in;
  j["proposals"] = r.proposals;
  j["accepted"] = r.accepted;
  j["infeasible"] = r.infeasible;
  j["acceptance_rate"] = r.acceptance_rate();
  write_json(dir / "mcmc_result.json", j);
  return j;
}

/// Scores each design `replicates` times; replicate r of design i uses the
/// stream derive_seed(seed, {kReplicate, i, r}).
inline std::vector<std::vector<UtilityEstimate>> replicate_utilities(const std::vector<Design>& designs,
                                                                     const UtilityFn& fn, std::size_t replicates,
                                                                     std::uint64_t seed, std::size_t workers) {
  std::vector<std::vector<UtilityEstimate>> out(designs.size(), std::vector<UtilityEstimate>(replicates));
  parallel_for(designs.size() * replicates, workers, [&](std::size_t k) {
    const std::size_t i = k / replicates, r = k % replicates;
    out[i][r] = fn(designs[i], derive_seed(seed, {stream::kReplicate, i, r}));
  });
  return out;
}

inline double mean_value(const std::vector<UtilityEstimate>& us) {
  double s = 0.0;
  for (const auto& u : us) s += u.value;
  return s / static_cast<double>(us.size());
}

inline double sd_value(const std::vector<UtilityEstimate>& us) {
  if (us.size() < 2) return 0.0;
  const double m = mean_value(us);
  double s = 0.0;
  for (const auto& u : us) s += (u.value - m) * (u.value - m);
  return std::sqrt(s / static_cast<double>(us.size() - 1));
}

inline std::vector<Design> configured_designs(const RunConfig& c) {
  if (c.evaluate.designs.empty()) throw ConfigError("evaluate.designs: at least one design is required");
  const DesignSpace space = make_space(c);
  std::vector<Design> out;
  for (std::size_t i = 0; i < c.evaluate.designs.size(); ++i) {
    Design d{c.evaluate.designs[i].values, i + 1, 0, 0};
    if (!satisfies(space, d))
      throw ConfigError("evaluate.designs: '" + c.evaluate.designs[i].name + "' violates the design constraints");
    out.push_back(std::move(d));
  }
  return out;
}

// evaluate and compare share the scoring; they differ in the tables written.
inline nlohmann::ordered_json command_rescore(const RunConfig& c, bool comparison) {
  const auto dir = output_dir(c);
  const auto designs = configured_designs(c);
  const auto fn = make_rescore_utility(c, c.evaluate.budget);
  const auto us = replicate_utilities(designs, fn, c.evaluate.budget.replicates, c.seed, c.workers);

  nlohmann::ordered_json j;
  j["command"] = comparison ? "compare" : "evaluate";
  j["model"] = c.model.name;
  j["seed"] = c.seed;
  j["b_outer"] = c.evaluate.budget.b_outer;
  j["b_inner"] = c.evaluate.budget.b_inner;
  j["replicates"] = c.evaluate.budget.replicates;
  auto& arr = j["designs"] = nlohmann::ordered_json::array();
  std::vector<NamedReplicates> groups;
  std::string table = "design,replicate,utility,std_error\n";
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto& name = c.evaluate.designs[i].name;
    NamedReplicates g{name, {}};
    for (std::size_t r = 0; r < us[i].size(); ++r) {
      g.utilities.push_back(us[i][r].value);
      table += name + ',' + std::to_string(r + 1) + ',' + format_double(us[i][r].value) + ',' +
               format_double(us[i][r].std_error) + '\n';
    }
    const auto f = five_number(g.utilities);
    nlohmann::ordered_json dj;
    dj["name"] = name;
    dj["values"] = designs[i].values;
    dj["mean"] = mean_value(us[i]);
    dj["sd"] = sd_value(us[i]);
    dj["min"] = f.min;
    dj["median"] = f.median;
    dj["max"] = f.max;
    arr.push_back(std::move(dj));
    groups.push_back(std::move(g));
  }
  if (comparison) {
    write_text(dir / "comparison.csv", comparison_csv(groups));
    write_json(dir / "compare_result.json", j);
  } else {
    write_text(dir / "evaluate.csv", table);
    write_json(dir / "evaluate_result.json", j);
  }
  return j;
}

inline nlohmann::ordered_json command_evaluate(const RunConfig& c) { return command_rescore(c, false); }
inline nlohmann::ordered_json command_compare(const RunConfig& c) { return command_rescore(c, true); }

/// Top designs of a trace by recorded utility, failed evaluations excluded.
inline std::vector<ScoredDesign> top_designs(const std::vector<TraceRecord>& records, std::size_t count) {
  auto scored = scored_from_records(records);
  std::erase_if(scored, [](const ScoredDesign& s) { return s.failed; });
  std::stable_sort(scored.begin(), scored.end(), detail::better);
  if (scored.size() > count) scored.resize(count);
  return scored;
}

inline nlohmann::ordered_json command_windows(const RunConfig& c, const std::filesystem::path& trace_override = {}) {
  const auto dir = output_dir(c);
  std::filesystem::path trace_path = trace_override;
  if (trace_path.empty()) trace_path = c.windows.trace.empty() ? dir / "trace.csv" : std::filesystem::path(c.windows.trace);
  const auto records = read_trace(trace_path);
  const auto top = top_designs(records, c.windows.top);
  if (top.size() < c.windows.top)
    throw InputError("windows: trace holds " + std::to_string(top.size()) + " usable designs, need " +
                     std::to_string(c.windows.top));
  const SamplingWindows w = build_windows(top, c.windows.top);

  // The optimum is the top design with the highest mean re-scored utility.
  const auto fn = make_rescore_utility(c, c.windows.rescore);
  std::vector<Design> top_designs_only;
  for (const auto& s : top) top_designs_only.push_back(s.design);
  const auto rescored = replicate_utilities(top_designs_only, fn, c.windows.rescore.replicates, c.seed, c.workers);
  std::size_t best = 0;
  for (std::size_t i = 1; i < rescored.size(); ++i)
    if (mean_value(rescored[i]) > mean_value(rescored[best])) best = i;
  ScoredDesign optimum = top[best];
  optimum.utility.value = mean_value(rescored[best]);
  optimum.utility.std_error = sd_value(rescored[best]) / std::sqrt(double(rescored[best].size()));

  const ConstraintSet cs = constraint_set(c);
  Rng rng = make_rng(derive_seed(c.seed, {stream::kBootstrap}));
  std::vector<ScoredDesign> boot(c.windows.bootstrap);
  for (std::size_t b = 0; b < boot.size(); ++b) {
    boot[b].design = bootstrap_design(w, cs, rng, c.windows.mode);
    boot[b].design.id = b + 1;
  }
  parallel_for(boot.size(), c.workers, [&](std::size_t b) {
    boot[b].utility = fn(boot[b].design, derive_seed(c.seed, {stream::kBootstrap, b}));
  });
  std::size_t feasible = 0;
  for (const auto& s : boot) feasible += satisfies(cs, s.design.values);
  const double efficiency = window_efficiency(boot, optimum);

  write_text(dir / "windows.csv", windows_csv(w, optimum.design));
  std::string bcsv = "bootstrap,values,utility,std_error,feasible\n";
  for (const auto& s : boot)
    bcsv += std::to_string(s.design.id) + ',' + join_values(s.design.values) + ',' + format_double(s.utility.value) +
            ',' + format_double(s.utility.std_error) + ',' + (satisfies(cs, s.design.values) ? "1" : "0") + '\n';
  write_text(dir / "bootstrap.csv", bcsv);

  nlohmann::ordered_json j;
  j["command"] = "windows";
  j["model"] = c.model.name;
  j["seed"] = c.seed;
  j["top"] = c.windows.top;
  j["low"] = w.low;
  j["high"] = w.high;
  j["optimum"] = scored_to_json(optimum);
  j["bootstrap"] = boot.size();
  j["feasible"] = feasible;
  j["mean_efficiency"] = efficiency;
  write_json(dir / "windows_result.json", j);
  return j;
}

}  // namespace insh
