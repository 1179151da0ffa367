#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/parallel.hpp"
#include "insh/random.hpp"
#include "insh/utility.hpp"

namespace insh {

/// Per-generation control sequences. Entry w-1 of retain/offspring/scale
/// drives the spawn step that follows the evaluation of generation w, so
/// the last entry is never used for spawning; it is kept so every sequence
/// has length W.
struct Schedule {
  std::size_t generations = 1;
  std::vector<std::size_t> retain;
  std::vector<std::size_t> offspring;
  std::vector<std::vector<double>> scale;
  std::size_t initial_count = 1;
  double boundary_prob = 0.0;

  void validate(std::size_t dimension) const {
    if (generations == 0) throw ConfigError("schedule: W must be at least 1");
    if (retain.size() != generations || offspring.size() != generations || scale.size() != generations)
      throw ConfigError("schedule: retain, offspring and scale must each have W entries");
    if (initial_count == 0) throw ConfigError("schedule: initial_count must be at least 1");
    if (!(boundary_prob >= 0.0 && boundary_prob <= 1.0)) throw ConfigError("schedule: boundary_prob must lie in [0,1]");
    for (std::size_t w = 0; w < generations; ++w) {
      if (retain[w] == 0 || offspring[w] == 0) throw ConfigError("schedule: retain and offspring entries must be positive");
      if (scale[w].size() != dimension) throw ConfigError("schedule: scale vectors must match the design dimension");
      for (double s : scale[w])
        if (!(s > 0.0)) throw ConfigError("schedule: scale entries must be positive");
    }
  }

  /// Builds a schedule where value k of each list is held for
  /// `hold[k]` consecutive generations.
  static Schedule stepped(const std::vector<std::size_t>& hold, const std::vector<std::size_t>& retain_values,
                          const std::vector<std::size_t>& offspring_values, const std::vector<double>& scale_values,
                          std::size_t dimension, std::size_t initial_count, double boundary_prob = 0.0) {
    if (hold.size() != retain_values.size() || hold.size() != offspring_values.size() ||
        hold.size() != scale_values.size())
      throw ConfigError("stepped schedule: value lists must have equal length");
    Schedule s;
    s.generations = 0;
    for (std::size_t k = 0; k < hold.size(); ++k) {
      for (std::size_t h = 0; h < hold[k]; ++h) {
        s.retain.push_back(retain_values[k]);
        s.offspring.push_back(offspring_values[k]);
        s.scale.emplace_back(dimension, scale_values[k]);
        ++s.generations;
      }
    }
    s.initial_count = initial_count;
    s.boundary_prob = boundary_prob;
    return s;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class AcceptanceKind { TopRCurrent, TopRCurrentAndPrevious, ThresholdFraction };

inline std::string to_string(AcceptanceKind k) {
  switch (k) {
    case AcceptanceKind::TopRCurrent: return "top-r-current";
    case AcceptanceKind::TopRCurrentAndPrevious: return "top-r-current-and-previous";
    case AcceptanceKind::ThresholdFraction: return "threshold-fraction";
  }
  return "?";
}

inline AcceptanceKind parse_acceptance_kind(const std::string& s) {
  if (s == "top-r-current") return AcceptanceKind::TopRCurrent;
  if (s == "top-r-current-and-previous") return AcceptanceKind::TopRCurrentAndPrevious;
  if (s == "threshold-fraction") return AcceptanceKind::ThresholdFraction;
  throw ConfigError("unknown acceptance rule '" + s + "'");
}

struct AcceptanceRule {
  AcceptanceKind kind = AcceptanceKind::TopRCurrent;
  std::optional<double> threshold;
  // Threshold rule only: cap on designs spawned per generation (0 = none).
  std::size_t population_ceiling = 0;

  void validate() const {
    const bool wants = kind == AcceptanceKind::ThresholdFraction;
    if (wants != threshold.has_value())
      throw ConfigError("acceptance: threshold is required by, and only by, the threshold-fraction rule");
    if (threshold && !(*threshold > 0.0 && *threshold <= 1.0))
      throw ConfigError("acceptance: threshold must lie in (0,1]");
  }

  friend bool operator==(const AcceptanceRule&, const AcceptanceRule&) = default;
};

struct ScoredDesign {
  Design design;
  UtilityEstimate utility;
  int generation = 0;
  bool failed = false;
  double eval_seconds = 0.0;
  std::string failure;
};

namespace detail {

// Descending utility; equal utilities keep the older (smaller id) first.
inline bool better(const ScoredDesign& a, const ScoredDesign& b) {
  if (a.utility.value != b.utility.value) return a.utility.value > b.utility.value;
  return a.design.id < b.design.id;
}

}  // namespace detail

/// Selects the designs that seed the next generation. The global best is
/// appended when the rule did not already keep it.
inline std::vector<ScoredDesign> accept(const std::vector<ScoredDesign>& scored,
                                        const std::vector<ScoredDesign>& previous_accepted,
                                        const AcceptanceRule& rule, std::size_t r,
                                        const std::optional<ScoredDesign>& best_so_far) {
  if (scored.empty()) throw InputError("accept: no scored designs");
  if (r == 0) throw InputError("accept: r must be at least 1");

  std::vector<ScoredDesign> pool;
  pool.reserve(scored.size() + previous_accepted.size());
  for (const auto& s : scored)
    if (!s.failed) pool.push_back(s);
  if (rule.kind == AcceptanceKind::TopRCurrentAndPrevious) {
    for (const auto& p : previous_accepted) {
      if (p.failed) continue;
      const bool present =
          std::any_of(pool.begin(), pool.end(), [&](const ScoredDesign& s) { return s.design.id == p.design.id; });
      if (!present) pool.push_back(p);
    }
  }
  if (pool.empty()) throw InputError("accept: every scored design failed");
  std::stable_sort(pool.begin(), pool.end(), detail::better);

  std::vector<ScoredDesign> out;
  if (rule.kind == AcceptanceKind::ThresholdFraction) {
    double top = pool.front().utility.value;
    if (best_so_far && !best_so_far->failed) top = std::max(top, best_so_far->utility.value);
    const double cut = top - (1.0 - *rule.threshold) * std::abs(top);
    for (const auto& s : pool)
      if (s.utility.value >= cut) out.push_back(s);
    if (out.empty()) out.push_back(pool.front());
  } else {
    const std::size_t k = std::min(r, pool.size());
    const double cut = pool[k - 1].utility.value;
    for (const auto& s : pool) {
      if (s.utility.value < cut) break;
      out.push_back(s);
    }
  }
  if (best_so_far && !best_so_far->failed) {
    const bool present =
        std::any_of(out.begin(), out.end(), [&](const ScoredDesign& s) { return s.design.id == best_so_far->design.id; });
    if (!present) out.push_back(*best_so_far);
  }
  return out;
}

struct SpawnReport {
  std::size_t skipped_parents = 0;
};

/// m offspring per accepted design, each perturbed independently from its
/// own parent. Parent k draws from the stream derive_seed(seed, {k}).
/// A parent whose perturbation budget runs out is skipped and counted.
inline std::vector<Design> spawn(const std::vector<ScoredDesign>& accepted, std::size_t m,
                                 const PerturbationKernel& kernel, const ConstraintSet& constraints, std::uint64_t seed,
                                 SpawnReport* report = nullptr) {
  if (m == 0) throw InputError("spawn: m must be at least 1");
  std::vector<Design> out;
  out.reserve(accepted.size() * m);
  for (std::size_t k = 0; k < accepted.size(); ++k) {
    Rng rng = make_rng(derive_seed(seed, {k}));
    std::vector<Design> children;
    children.reserve(m);
    try {
      for (std::size_t j = 0; j < m; ++j) children.push_back(perturb(accepted[k].design, kernel, constraints, rng));
    } catch (const PerturbationError&) {
      if (report != nullptr) ++report->skipped_parents;
      continue;
    }
    for (auto& c : children) out.push_back(std::move(c));
  }
  return out;
}

struct GenerationRecord {
  int generation = 0;
  std::vector<ScoredDesign> scored;
  std::vector<std::uint64_t> accepted_ids;  // empty for the final generation
  ScoredDesign best_so_far;
  double wall_seconds = 0.0;
  std::size_t skipped_parents = 0;
};

struct RunTrace {
  std::vector<GenerationRecord> generations;

  std::size_t evaluated() const {
    std::size_t n = 0;
    for (const auto& g : generations) n += g.scored.size();
    return n;
  }

  /// The k highest-utility distinct designs evaluated anywhere in the run.
  std::vector<ScoredDesign> top(std::size_t k) const {
    std::vector<ScoredDesign> all;
    for (const auto& g : generations)
      for (const auto& s : g.scored)
        if (!s.failed) all.push_back(s);
    std::stable_sort(all.begin(), all.end(), detail::better);
    if (all.size() > k) all.resize(k);
    return all;
  }
};

struct InshResult {
  ScoredDesign best;
  RunTrace trace;
};

/// Utility callback: evaluates one design with a stream seeded by `seed`.
using UtilityFn = std::function<UtilityEstimate(const Design&, std::uint64_t seed)>;

struct InshOptions {
  std::size_t workers = 1;
  // Called after each generation is evaluated (and, except for the last,
  // after acceptance), so traces can be streamed.
  std::function<void(const GenerationRecord&)> on_generation;
  // Previously recorded evaluations keyed by (generation, design id); a
  // match with identical values is reused instead of re-evaluated.
  const std::map<std::pair<int, std::uint64_t>, ScoredDesign>* resume = nullptr;
};

/// Induced natural selection: evaluate, accept, re-inject the best, spawn.
/// All randomness derives from `master_seed`:
///   initial designs  {kInitial}
///   evaluation       {kEvaluate, generation, ordinal}
///   spawning         {kSpawn, generation} then parent ordinal
/// so the result does not depend on `options.workers`.
inline InshResult run_insh(const DesignSpace& space, const UtilityFn& utility_fn, const Schedule& schedule,
                           const AcceptanceRule& rule, KernelKind kernel_kind, std::uint64_t master_seed,
                           const InshOptions& options = {}) {
  schedule.validate(space.dimension());
  rule.validate();
  using clock = std::chrono::steady_clock;

  std::uint64_t next_id = 1;
  auto number = [&](std::vector<Design>& ds, int generation) {
    for (auto& d : ds) {
      d.id = next_id++;
      d.generation = generation;
    }
  };

  Rng init_rng = make_rng(derive_seed(master_seed, {stream::kInitial}));
  std::vector<Design> current = sample_initial(space, schedule.initial_count, schedule.boundary_prob, init_rng);
  number(current, 1);

  InshResult result;
  std::optional<ScoredDesign> best;
  std::vector<ScoredDesign> previous_accepted;

  for (std::size_t w = 1; w <= schedule.generations; ++w) {
    const auto gen_start = clock::now();
    const int gen = static_cast<int>(w);
    std::vector<ScoredDesign> scored(current.size());
    parallel_for(current.size(), options.workers, [&](std::size_t i) {
      ScoredDesign& s = scored[i];
      s.design = current[i];
      s.generation = gen;
      if (options.resume != nullptr) {
        auto it = options.resume->find({gen, s.design.id});
        if (it != options.resume->end() && it->second.design.values == s.design.values) {
          s.utility = it->second.utility;
          s.failed = it->second.failed;
          s.eval_seconds = it->second.eval_seconds;
          return;
        }
      }
      const auto t0 = clock::now();
      try {
        s.utility = utility_fn(s.design, derive_seed(master_seed, {stream::kEvaluate, w, i}));
      } catch (const std::exception& e) {
        s.failed = true;
        s.failure = e.what();
      }
      s.eval_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    });
    if (std::all_of(scored.begin(), scored.end(), [](const ScoredDesign& s) { return s.failed; }))
      throw Error("generation " + std::to_string(w) + ": every utility evaluation failed");

    for (const auto& s : scored) {
      if (s.failed) continue;
      if (!best || s.utility.value > best->utility.value) best = s;
    }

    GenerationRecord rec;
    rec.generation = gen;
    rec.best_so_far = *best;

    if (w < schedule.generations) {
      auto accepted = accept(scored, previous_accepted, rule, schedule.retain[w - 1], best);
      if (rule.kind == AcceptanceKind::ThresholdFraction && rule.population_ceiling > 0) {
        const std::size_t cap = std::max<std::size_t>(1, rule.population_ceiling / schedule.offspring[w - 1]);
        if (accepted.size() > cap) {
          // Keep the best when trimming so re-injection survives.
          std::stable_sort(accepted.begin(), accepted.end(), detail::better);
          accepted.resize(cap);
        }
      }
      for (const auto& a : accepted) rec.accepted_ids.push_back(a.design.id);
      PerturbationKernel kernel{kernel_kind, schedule.scale[w - 1]};
      SpawnReport report;
      current = spawn(accepted, schedule.offspring[w - 1], kernel, space.constraints(),
                      derive_seed(master_seed, {stream::kSpawn, w}), &report);
      if (current.empty()) throw Error("generation " + std::to_string(w) + ": no offspring could be spawned");
      rec.skipped_parents = report.skipped_parents;
      number(current, gen + 1);
      previous_accepted = std::move(accepted);
    }
    rec.scored = std::move(scored);
    rec.wall_seconds = std::chrono::duration<double>(clock::now() - gen_start).count();
    if (options.on_generation) options.on_generation(rec);
    result.trace.generations.push_back(std::move(rec));
  }
  result.best = *best;
  return result;
}

}  // namespace insh
