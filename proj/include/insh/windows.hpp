#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/insh.hpp"
#include "insh/random.hpp"

namespace insh {

/// Per-coordinate ranges spanned by the K best designs, plus the K source
/// values of each coordinate (kept for candidate bootstrapping).
struct SamplingWindows {
  std::vector<double> low;
  std::vector<double> high;
  std::vector<std::vector<double>> candidates;
  std::size_t k = 0;

  std::size_t dimension() const noexcept { return low.size(); }
};

inline SamplingWindows build_windows(std::vector<ScoredDesign> top, std::size_t k) {
  if (k == 0) throw InputError("build_windows: K must be at least 1");
  if (top.size() < k) throw InputError("build_windows: fewer than K designs supplied");
  std::stable_sort(top.begin(), top.end(), detail::better);
  const std::size_t dim = top.front().design.dimension();
  SamplingWindows w;
  w.k = k;
  w.candidates.assign(dim, {});
  for (std::size_t j = 0; j < k; ++j) {
    if (top[j].design.dimension() != dim) throw InputError("build_windows: designs have mixed dimensions");
    for (std::size_t c = 0; c < dim; ++c) w.candidates[c].push_back(top[j].design.values[c]);
  }
  for (const auto& cand : w.candidates) {
    const auto [lo, hi] = std::minmax_element(cand.begin(), cand.end());
    w.low.push_back(*lo);
    w.high.push_back(*hi);
  }
  return w;
}

enum class BootstrapMode { Candidates, UniformInWindow };

inline std::string to_string(BootstrapMode m) {
  return m == BootstrapMode::Candidates ? "candidates" : "uniform";
}

inline BootstrapMode parse_bootstrap_mode(const std::string& s) {
  if (s == "candidates") return BootstrapMode::Candidates;
  if (s == "uniform") return BootstrapMode::UniformInWindow;
  throw ConfigError("unknown bootstrap mode '" + s + "'");
}

inline constexpr std::size_t kMaxRepairAttempts = 10000;

/// Draws each coordinate from its window, then re-draws only the
/// coordinates involved in a violated bound, ordering or spacing constraint
/// until the design is feasible.
inline Design bootstrap_design(const SamplingWindows& w, const ConstraintSet& constraints, Rng& rng,
                               BootstrapMode mode = BootstrapMode::Candidates,
                               std::size_t max_attempts = kMaxRepairAttempts) {
  if (w.dimension() == 0 || w.k == 0) throw InputError("bootstrap_design: empty windows");
  if (constraints.lower.size() != w.dimension()) throw InputError("bootstrap_design: windows do not match constraints");
  auto draw = [&](std::size_t c) {
    if (mode == BootstrapMode::Candidates) {
      std::uniform_int_distribution<std::size_t> pick(0, w.candidates[c].size() - 1);
      return w.candidates[c][pick(rng)];
    }
    if (w.low[c] == w.high[c]) return w.low[c];
    return std::uniform_real_distribution<double>(w.low[c], w.high[c])(rng);
  };

  Design d;
  d.values.resize(w.dimension());
  for (std::size_t c = 0; c < w.dimension(); ++c) d.values[c] = draw(c);

  const bool ordered = constraints.strictly_increasing || constraints.min_spacing > 0.0;
  std::vector<char> bad(w.dimension());
  for (std::size_t attempt = 0; attempt <= max_attempts; ++attempt) {
    std::fill(bad.begin(), bad.end(), 0);
    bool any = false;
    for (std::size_t c = 0; c < w.dimension(); ++c) {
      if (d.values[c] < constraints.lower[c] || d.values[c] > constraints.upper[c]) bad[c] = 1, any = true;
      if (ordered && c > 0) {
        const double gap = d.values[c] - d.values[c - 1];
        const bool ok = constraints.min_spacing > 0.0 ? gap >= constraints.min_spacing - kSpacingSlack : gap > 0.0;
        if (!ok) bad[c] = bad[c - 1] = 1, any = true;
      }
    }
    if (!any) return d;
    if (attempt == max_attempts) break;
    for (std::size_t c = 0; c < w.dimension(); ++c)
      if (bad[c]) d.values[c] = draw(c);
  }
  throw InfeasibleError("bootstrap_design: could not repair a feasible design within " +
                        std::to_string(max_attempts) + " attempts");
}

/// Mean utility of the window designs relative to the optimum.
inline double window_efficiency(const std::vector<ScoredDesign>& window_designs, const ScoredDesign& optimum) {
  if (window_designs.empty()) throw InputError("window_efficiency: no window designs");
  if (!(optimum.utility.value > 0.0)) throw InputError("window_efficiency: optimum utility must be positive");
  double sum = 0.0;
  for (const auto& s : window_designs) sum += s.utility.value;
  return sum / static_cast<double>(window_designs.size()) / optimum.utility.value;
}

}  // namespace insh
