#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/insh.hpp"
#include "insh/models.hpp"
#include "insh/parallel.hpp"
#include "insh/random.hpp"

namespace insh {

// ---------------------------------------------------------------------------
// Müller's augmented-space MCMC. The chain runs on (theta, y, d) with target
// proportional to u(d, theta, y) p(theta) p(y | theta, d); fresh (theta, y)
// are drawn from the model at every proposal, so the acceptance ratio only
// involves the single utility samples and the design proposal density.

/// Gaussian random walk on the design, untruncated. Proposals that leave the
/// feasible region are rejected by the chain, which keeps the proposal
/// symmetric and the Hastings ratio equal to the utility ratio.
struct RandomWalkProposal {
  std::vector<double> scale;

  Design propose(const Design& from, Rng& rng) const {
    Design to = from;
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < to.values.size(); ++i) to.values[i] += scale[i] * z(rng);
    return to;
  }

  // log q(to | from); any constant works for a symmetric proposal.
  double log_density(const Design&, const Design&) const { return 0.0; }
};

template <class P>
concept DesignProposal = requires(const P& p, const Design& d, Rng& rng) {
  { p.propose(d, rng) } -> std::same_as<Design>;
  { p.log_density(d, d) } -> std::convertible_to<double>;
};

struct MullerConfig {
  std::size_t chain_length = 10000;
  std::size_t burn_in = 1000;
  PerturbationKernel proposal{KernelKind::TruncatedGaussian, {0.1}};

  void validate() const {
    if (chain_length <= burn_in) throw ConfigError("muller: chain_length must exceed burn_in");
  }
};

struct MullerResult {
  std::vector<Design> chain;  // post burn-in
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t infeasible = 0;

  double acceptance_rate() const { return proposals == 0 ? 0.0 : double(accepted) / double(proposals); }
};

/// Utility of one (theta, y, d) triple; must be non-negative.
using UtilitySampleFn = std::function<double(const ParamDraw&, const Dataset&, const Design&)>;

template <GenerativeModel M, DesignProposal P>
MullerResult run_muller(const DesignSpace& space, const M& model, const UtilitySampleFn& utility_sample,
                        const P& proposal, std::size_t chain_length, std::size_t burn_in, Rng& rng,
                        std::optional<Design> start = std::nullopt) {
  if (chain_length <= burn_in) throw ConfigError("muller: chain_length must exceed burn_in");
  auto checked = [](double u) {
    if (!(u >= 0.0))
      throw InputError("muller: utility samples must be non-negative; shift the utility before sampling");
    return u;
  };
  auto draw_utility = [&](const Design& d) {
    const auto params = model.sample_prior(rng);
    const auto data = model.simulate(params, d, rng);
    return checked(utility_sample(params, data, d));
  };

  Design current = start ? *start : sample_initial(space, 1, 0.0, rng).front();
  if (!satisfies(space, current)) throw InputError("muller: starting design is infeasible");
  double u = draw_utility(current);

  MullerResult out;
  out.chain.reserve(chain_length - burn_in);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t step = 0; step < chain_length; ++step) {
    Design cand = proposal.propose(current, rng);
    ++out.proposals;
    if (!satisfies(space, cand)) {
      ++out.infeasible;
    } else {
      const double u_new = draw_utility(cand);
      // alpha = min{1, u~ q(d|d~) / (u q(d~|d))}; 0/0 counts as 1.
      double alpha = 1.0;
      if (u > 0.0) {
        alpha = u_new / u * std::exp(proposal.log_density(current, cand) - proposal.log_density(cand, current));
      } else if (u_new == 0.0) {
        alpha = std::exp(proposal.log_density(current, cand) - proposal.log_density(cand, current));
      }
      if (alpha >= 1.0 || unif(rng) < alpha) {
        current = std::move(cand);
        u = u_new;
        ++out.accepted;
      }
    }
    if (step >= burn_in) out.chain.push_back(current);
  }
  return out;
}

template <GenerativeModel M>
MullerResult run_muller(const DesignSpace& space, const M& model, const UtilitySampleFn& utility_sample,
                        const MullerConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.proposal.scale.size() != space.dimension()) throw ConfigError("muller: proposal scale must match dimension");
  return run_muller(space, model, utility_sample, RandomWalkProposal{cfg.proposal.scale}, cfg.chain_length,
                    cfg.burn_in, rng);
}

struct Histogram {
  double origin = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;

  double centre(std::size_t k) const { return origin + width * (static_cast<double>(k) + 0.5); }
};

/// Freedman–Diaconis bin width 2 IQR n^(-1/3) (type-7 quartiles).
inline double freedman_diaconis_width(std::vector<double> xs) {
  if (xs.size() < 2) return 1.0;
  std::sort(xs.begin(), xs.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(xs.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  const double iqr = q(0.75) - q(0.25);
  const double w = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(xs.size()));
  return w > 0.0 ? w : std::max(1e-12, (xs.back() - xs.front()) / 10.0);
}

inline Histogram histogram(const std::vector<double>& xs, double width) {
  if (xs.empty()) throw InputError("histogram: no samples");
  if (!(width > 0.0)) throw InputError("histogram: bin width must be positive");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  Histogram h;
  h.origin = *lo;
  h.width = width;
  h.counts.assign(static_cast<std::size_t>(std::floor((*hi - *lo) / width)) + 1, 0);
  for (double x : xs) ++h.counts[std::min(h.counts.size() - 1, static_cast<std::size_t>((x - *lo) / width))];
  return h;
}

/// Mode of one coordinate of a chain: the centre of the fullest
/// Freedman–Diaconis bin. With `smoothing_bins` > 0 the bin counts are first
/// convolved with a Gaussian of that many bins' standard deviation, which
/// steadies the estimate on flat utility surfaces.
inline double chain_mode(const std::vector<Design>& chain, std::size_t coordinate, double smoothing_bins = 0.0) {
  std::vector<double> xs;
  xs.reserve(chain.size());
  for (const auto& d : chain) xs.push_back(d.values.at(coordinate));
  const auto h = histogram(xs, freedman_diaconis_width(xs));
  std::vector<double> dens(h.counts.begin(), h.counts.end());
  if (smoothing_bins > 0.0) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * smoothing_bins));
    std::vector<double> sm(dens.size(), 0.0);
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(dens.size()); ++k) {
      double num = 0.0, den = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        const auto idx = k + j;
        if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(dens.size())) continue;
        const double w = std::exp(-0.5 * double(j * j) / (smoothing_bins * smoothing_bins));
        num += w * dens[static_cast<std::size_t>(idx)];
        den += w;
      }
      sm[static_cast<std::size_t>(k)] = num / den;
    }
    dens = std::move(sm);
  }
  const auto k = static_cast<std::size_t>(std::max_element(dens.begin(), dens.end()) - dens.begin());
  return h.centre(k);
}

// ---------------------------------------------------------------------------
// Exhaustive grid search.

struct GridSearchResult {
  ScoredDesign best;
  std::vector<ScoredDesign> surface;
};

/// Evaluates every lattice point; point i gets the stream
/// derive_seed(seed, {kEvaluate, 0, i}). Ties go to the first point in
/// enumeration order.
inline GridSearchResult run_grid_search(const DesignSpace& space, double spacing, const UtilityFn& utility_fn,
                                        std::uint64_t seed, std::size_t workers = 1,
                                        std::size_t max_points = kDefaultGridCap) {
  auto grid = enumerate_grid(space, spacing, max_points);
  if (grid.empty()) throw InfeasibleError("grid search: no feasible lattice point");
  GridSearchResult out;
  out.surface.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i].id = i + 1;
    out.surface[i].design = grid[i];
  }
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    out.surface[i].utility = utility_fn(grid[i], derive_seed(seed, {stream::kEvaluate, 0, i}));
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.surface.size(); ++i)
    if (out.surface[i].utility.value > out.surface[best].utility.value) best = i;
  out.best = out.surface[best];
  return out;
}

}  // namespace insh
