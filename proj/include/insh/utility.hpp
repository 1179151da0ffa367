#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/models.hpp"
#include "insh/random.hpp"

namespace insh {

/// An expected-utility estimate in nats.
///
/// `degenerate` counts samples that could not contribute: outer samples whose
/// inner marginal underflowed (nested MC) or simulated data whose ABC
/// posterior was empty or fell outside the parameter grid (ABCdE).
struct UtilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t b_outer = 1;
  std::size_t b_inner = 1;
  std::uint64_t seed = 0;
  std::size_t degenerate = 0;

  friend bool operator==(const UtilityEstimate&, const UtilityEstimate&) = default;
};

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

namespace detail {

inline void mean_and_se(std::span<const double> xs, double& mean, double& se) {
  const auto n = static_cast<double>(xs.size());
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Nested Monte-Carlo estimate of the expected Shannon information gain
//
//   u(d) ~ 1/B sum_l [ log p~(y_l | theta_l, d) - log p~(y_l | d) ],
//
// with one inner sample of B~ prior draws shared by every outer sample.
// Inner sums are evaluated in log space. When the model has no nuisance
// parameters, p~(y | theta, d) is the exact likelihood.

template <GenerativeModel M>
UtilityEstimate sig_nested_mc(const M& model, const Design& d, std::size_t b_outer,
                              std::size_t b_inner, std::uint64_t seed) {
  if (b_outer == 0 || b_inner == 0) throw InputError("sig_nested_mc: B and B~ must be at least 1");
  Rng rng = make_rng(seed);

  std::vector<ParamDraw> outer(b_outer);
  std::vector<Dataset> data(b_outer);
  std::vector<double> log_cond(b_outer);
  for (std::size_t l = 0; l < b_outer; ++l) {
    outer[l] = model.sample_prior(rng);
    auto c = model.condition(outer[l], d);
    data[l] = c.simulate(rng);
    log_cond[l] = c.log_likelihood(data[l]);
  }

  std::vector<ParamDraw> inner_params(b_inner);
  for (auto& p : inner_params) p = model.sample_prior(rng);
  using Conditional = decltype(model.condition(inner_params[0], d));
  std::vector<Conditional> inner;
  inner.reserve(b_inner);
  for (const auto& p : inner_params) inner.push_back(model.condition(p, d));

  const double log_b_inner = std::log(static_cast<double>(b_inner));
  const bool has_nuisance = !outer.front().gamma.empty();
  std::vector<double> scratch(b_inner);
  std::vector<double> terms;
  terms.reserve(b_outer);
  std::size_t degenerate = 0;
  for (std::size_t l = 0; l < b_outer; ++l) {
    double log_given_theta = log_cond[l];
    if (has_nuisance) {
      for (std::size_t b = 0; b < b_inner; ++b) {
        ParamDraw mixed{outer[l].theta, inner_params[b].gamma};
        scratch[b] = model.condition(mixed, d).log_likelihood(data[l]);
      }
      log_given_theta = log_sum_exp(scratch) - log_b_inner;
    }
    for (std::size_t b = 0; b < b_inner; ++b) scratch[b] = inner[b].log_likelihood(data[l]);
    const double log_marginal = log_sum_exp(scratch) - log_b_inner;
    const double term = log_given_theta - log_marginal;
    if (!std::isfinite(term)) {
      ++degenerate;
      continue;
    }
    terms.push_back(term);
  }
  if (terms.empty()) throw Error("sig_nested_mc: every outer sample was degenerate");

  UtilityEstimate est;
  detail::mean_and_se(terms, est.value, est.std_error);
  est.b_outer = b_outer;
  est.b_inner = b_inner;
  est.seed = seed;
  est.degenerate = degenerate;
  return est;
}

inline UtilityEstimate sig_nested_mc(const ModelSpec& model, const Design& d, std::size_t b_outer,
                                     std::size_t b_inner, std::uint64_t seed) {
  return std::visit([&](const auto& m) { return sig_nested_mc(m, d, b_outer, b_inner, seed); }, model);
}

// ---------------------------------------------------------------------------
// Parameter grids for histogram KLD.

struct GridAxis {
  std::size_t coordinate = 0;  // index into ParamDraw::theta
  double lower = 0.0;
  double upper = 1.0;
  std::size_t cells = 1;

  friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

/// Product of equal-width axes; cells are numbered row-major over the axes.
struct ParamGrid {
  std::vector<GridAxis> axes;

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.cells;
    return n;
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t cell_of(std::span<const double> theta) const {
    std::size_t idx = 0;
    for (const auto& a : axes) {
      const double x = theta[a.coordinate];
      if (!(x >= a.lower && x < a.upper)) return npos;
      auto k = static_cast<std::size_t>((x - a.lower) / (a.upper - a.lower) * static_cast<double>(a.cells));
      k = std::min(k, a.cells - 1);
      idx = idx * a.cells + k;
    }
    return idx;
  }

  friend bool operator==(const ParamGrid&, const ParamGrid&) = default;
};

/// Prior probability of every grid cell, renormalised over the grid, for a
/// prior that is independent across the gridded coordinates.
/// `marginal_cdf(coordinate, x)` is the prior CDF of theta[coordinate].
inline std::vector<double> prior_cell_masses(const ParamGrid& grid,
                                             const std::function<double(std::size_t, double)>& marginal_cdf) {
  std::vector<double> masses{1.0};
  for (const auto& a : grid.axes) {
    std::vector<double> axis(a.cells);
    const double width = (a.upper - a.lower) / static_cast<double>(a.cells);
    for (std::size_t k = 0; k < a.cells; ++k)
      axis[k] = marginal_cdf(a.coordinate, a.lower + width * static_cast<double>(k + 1)) -
                marginal_cdf(a.coordinate, a.lower + width * static_cast<double>(k));
    std::vector<double> next;
    next.reserve(masses.size() * a.cells);
    for (double m : masses)
      for (double w : axis) next.push_back(m * w);
    masses = std::move(next);
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (!(total > 0.0)) throw CoverageError("parameter grid carries no prior mass");
  for (auto& m : masses) m /= total;
  return masses;
}

/// Default death-model grid: equal-width cells over the central `mass` of the
/// b1 prior.
inline ParamGrid death_param_grid(const DeathModel& model, std::size_t cells = 100, double mass = 0.999) {
  const double tail = 0.5 * (1.0 - mass);
  return ParamGrid{{GridAxis{0, model.prior_quantile(tail), model.prior_quantile(1.0 - tail), cells}}};
}

inline std::vector<double> prior_cell_masses(const DeathModel& model, const ParamGrid& grid) {
  return prior_cell_masses(grid, [&](std::size_t, double x) { return model.prior_cdf(x); });
}

/// KL(q || p) in nats between a histogram (unnormalised weights per cell)
/// and prior cell masses.
inline double kld_from_histogram(std::span<const double> hist, std::span<const double> prior) {
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  if (!(total > 0.0)) throw CoverageError("posterior has no mass inside the parameter grid");
  double kl = 0.0;
  for (std::size_t c = 0; c < hist.size(); ++c) {
    if (hist[c] <= 0.0) continue;
    const double q = hist[c] / total;
    kl += q * std::log(q / prior[c]);
  }
  return kl;
}

struct WeightedDraw {
  ParamDraw params;
  double weight = 0.0;
};

/// KLD from the prior to the grid-histogram of a weighted posterior sample.
inline double kld_utility(std::span<const WeightedDraw> posterior, std::span<const double> prior_masses,
                          const ParamGrid& grid) {
  if (posterior.empty()) throw InputError("kld_utility: empty posterior");
  if (prior_masses.size() != grid.cell_count()) throw InputError("kld_utility: prior masses do not match grid");
  std::vector<double> hist(grid.cell_count(), 0.0);
  for (const auto& w : posterior) {
    const auto c = grid.cell_of(w.params.theta);
    if (c != ParamGrid::npos) hist[c] += w.weight;
  }
  return kld_from_histogram(hist, prior_masses);
}

// ---------------------------------------------------------------------------
// ABC machinery.

using DiscrepancyFn = std::function<double(std::span<const double>, std::span<const double>)>;

struct Discrepancy {
  std::string name;
  DiscrepancyFn fn;

  double operator()(std::span<const double> a, std::span<const double> b) const { return fn(a, b); }

  static Discrepancy euclidean() {
    return {"euclidean", [](std::span<const double> a, std::span<const double> b) {
              double s = 0.0;
              for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
              return std::sqrt(s);
            }};
  }

  static Discrepancy manhattan() {
    return {"manhattan", [](std::span<const double> a, std::span<const double> b) {
              double s = 0.0;
              for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
              return s;
            }};
  }

  static Discrepancy from_name(const std::string& name) {
    if (name == "euclidean") return euclidean();
    if (name == "manhattan") return manhattan();
    throw InputError("unknown discrepancy '" + name + "'");
  }
};

/// ABC acceptance: rho < epsilon, and an exact match is always accepted (so
/// epsilon = 0 gives the exact-match posterior).
inline bool abc_accepts(double rho, double epsilon) { return rho < epsilon || rho == 0.0; }

struct AbcConfig {
  std::size_t bank_size = 50000;
  double tolerance = 0.5;
  Discrepancy discrepancy = Discrepancy::euclidean();
  ParamGrid grid;
};

/// Published tolerances for the death model, keyed by the number of
/// observation times; other sizes interpolate to 0.25 per observation,
/// capped at 1.5.
inline double death_default_tolerance(std::size_t observations) {
  switch (observations) {
    case 1: return 0.25;
    case 2: return 0.50;
    case 3: return 0.75;
    case 4: return 1.00;
    case 6: return 1.50;
    case 8: return 1.50;
    default: return std::min(1.5, 0.25 * static_cast<double>(observations));
  }
}

/// Prior draws shared by every design, with one simulated dataset per
/// (draw, design). data[i][j] is the dataset of draw i under designs[j].
struct SimulationBank {
  std::vector<ParamDraw> params;
  std::vector<Design> designs;
  std::vector<std::vector<Dataset>> data;

  std::size_t size() const noexcept { return params.size(); }

  std::size_t design_index(const Design& d) const {
    for (std::size_t j = 0; j < designs.size(); ++j)
      if (designs[j].values == d.values) return j;
    throw InputError("design is not part of the simulation bank");
  }

  friend bool operator==(const SimulationBank&, const SimulationBank&) = default;
};

inline constexpr std::size_t kDefaultBankCapBytes = std::size_t{4} << 30;

template <GenerativeModel M>
SimulationBank build_bank(const M& model, const std::vector<Design>& designs, std::size_t n_pre, Rng& rng,
                          std::size_t cap_bytes = kDefaultBankCapBytes) {
  if (n_pre == 0) throw InputError("build_bank: N_pre must be at least 1");
  std::size_t values = 0;
  for (const auto& d : designs) values += d.values.size();
  if (static_cast<double>(values) * static_cast<double>(n_pre) * sizeof(double) > static_cast<double>(cap_bytes))
    throw SizeLimitError("simulation bank would exceed " + std::to_string(cap_bytes) + " bytes");
  SimulationBank bank;
  bank.designs = designs;
  bank.params.reserve(n_pre);
  bank.data.reserve(n_pre);
  for (std::size_t i = 0; i < n_pre; ++i) {
    bank.params.push_back(model.sample_prior(rng));
    std::vector<Dataset> row;
    row.reserve(designs.size());
    for (const auto& d : designs) row.push_back(model.simulate(bank.params.back(), d, rng));
    bank.data.push_back(std::move(row));
  }
  return bank;
}

inline SimulationBank build_bank(const ModelSpec& model, const std::vector<Design>& designs, std::size_t n_pre,
                                 Rng& rng) {
  return std::visit([&](const auto& m) { return build_bank(m, designs, n_pre, rng); }, model);
}

/// Rejection-ABC posterior: uniform weights over the bank draws whose data
/// under designs[design_index] lie within epsilon of `observed`. An empty
/// result is the empty-posterior signal.
inline std::vector<WeightedDraw> abc_posterior(const Dataset& observed, const SimulationBank& bank,
                                               std::size_t design_index, double epsilon,
                                               const Discrepancy& discrepancy) {
  if (design_index >= bank.designs.size()) throw InputError("abc_posterior: design index out of range");
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (abc_accepts(discrepancy(observed.y, bank.data[i][design_index].y), epsilon)) accepted.push_back(i);
  }
  std::vector<WeightedDraw> out;
  out.reserve(accepted.size());
  const double w = accepted.empty() ? 0.0 : 1.0 / static_cast<double>(accepted.size());
  for (auto i : accepted) out.push_back({bank.params[i], w});
  return out;
}

/// Latent-path bank for the death model. Each draw stores b1 and the sorted
/// infection times of all N individuals, so the counts at *any* observation
/// schedule are read off the same sample path. Designs that were never
/// enumerated up front (INSH offspring) share the bank with a grid search.
class DeathPathBank {
 public:
  DeathPathBank(const DeathModel& model, std::size_t n_pre, Rng& rng) : population_(model.population()) {
    if (n_pre == 0) throw InputError("DeathPathBank: N_pre must be at least 1");
    params_.reserve(n_pre);
    times_.resize(n_pre * static_cast<std::size_t>(population_));
    std::exponential_distribution<double> unit(1.0);
    for (std::size_t i = 0; i < n_pre; ++i) {
      params_.push_back(model.sample_prior(rng));
      const double b1 = params_.back().theta[0];
      auto row = row_times(i);
      for (auto& t : row) t = unit(rng) / b1;
      std::sort(row.begin(), row.end());
    }
  }

  std::size_t size() const noexcept { return params_.size(); }
  int population() const noexcept { return population_; }
  const std::vector<ParamDraw>& params() const noexcept { return params_; }

  /// Counts for every draw under `d`, flattened draw-major (size() x n).
  std::vector<double> realize(const Design& d) const {
    const std::size_t n = d.values.size();
    std::vector<double> rows(size() * n);
    for (std::size_t i = 0; i < size(); ++i) {
      auto row = row_times(i);
      for (std::size_t k = 0; k < n; ++k)
        rows[i * n + k] = static_cast<double>(std::upper_bound(row.begin(), row.end(), d.values[k]) - row.begin());
    }
    return rows;
  }

  Dataset dataset(std::size_t draw, const Design& d) const {
    auto row = row_times(draw);
    Dataset out;
    for (double t : d.values)
      out.y.push_back(static_cast<double>(std::upper_bound(row.begin(), row.end(), t) - row.begin()));
    return out;
  }

  /// Materialises the bank on a fixed list of designs.
  SimulationBank materialize(const std::vector<Design>& designs) const {
    SimulationBank bank;
    bank.designs = designs;
    bank.params = params_;
    bank.data.resize(size());
    for (std::size_t i = 0; i < size(); ++i) {
      bank.data[i].reserve(designs.size());
      for (const auto& d : designs) bank.data[i].push_back(dataset(i, d));
    }
    return bank;
  }

 private:
  std::span<double> row_times(std::size_t i) {
    return {times_.data() + i * static_cast<std::size_t>(population_), static_cast<std::size_t>(population_)};
  }
  std::span<const double> row_times(std::size_t i) const {
    return {times_.data() + i * static_cast<std::size_t>(population_), static_cast<std::size_t>(population_)};
  }

  int population_;
  std::vector<ParamDraw> params_;
  std::vector<double> times_;
};

namespace detail {

inline bool all_integer(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x) && x == std::floor(x); });
}

// Integer offset vectors o with norm(o) < epsilon (excluding 0), for the
// two named norms. Returns false if the set would be unreasonably large.
inline bool integer_offsets(const std::string& norm, double epsilon, std::size_t n,
                            std::vector<std::vector<int>>& out) {
  const bool euclid = norm == "euclidean";
  if (!euclid && norm != "manhattan") return false;
  const int radius = static_cast<int>(std::ceil(epsilon));
  std::vector<int> cur(n, 0);
  bool ok = true;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double partial) {
    if (!ok) return;
    if (i == n) {
      const double rho = euclid ? std::sqrt(partial) : partial;
      if (rho > 0.0 && rho < epsilon) {
        out.push_back(cur);
        if (out.size() > 100000) ok = false;
      }
      return;
    }
    for (int o = -radius; o <= radius; ++o) {
      const double add = euclid ? double(o) * o : std::abs(double(o));
      const double next = partial + add;
      if ((euclid ? std::sqrt(next) : next) >= epsilon && o != 0) continue;
      cur[i] = o;
      rec(i + 1, next);
    }
    cur[i] = 0;
  };
  rec(0, 0.0);
  return ok;
}

struct RowKeyHash {
  std::size_t operator()(const std::vector<double>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (double x : v) h = (h ^ std::hash<double>{}(x)) * 1099511628211ULL;
    return h;
  }
};

}  // namespace detail

struct AbcdeDiagnostics {
  std::size_t unique_data = 0;
  std::size_t posterior_evaluations = 0;
  std::size_t empty_posteriors = 0;
};

/// Expected KLD of a design from the bank's simulated data (draw-major rows
/// of width n): one ABC posterior per *unique* dataset, weighted by its
/// multiplicity. `per_unique`, when given, receives (first row index,
/// utility) for each unique dataset.
inline UtilityEstimate abcde_from_rows(std::span<const double> rows, std::size_t n,
                                       std::span<const ParamDraw> params, const AbcConfig& cfg,
                                       std::span<const double> prior_masses, AbcdeDiagnostics* diag = nullptr) {
  const std::size_t n_pre = params.size();
  if (n == 0 || rows.size() != n_pre * n) throw InputError("abcde: data rows do not match the bank");
  const std::size_t cells = cfg.grid.cell_count();
  if (prior_masses.size() != cells) throw InputError("abcde: prior masses do not match grid");

  auto row = [&](std::size_t i) { return rows.subspan(i * n, n); };

  // Group identical rows.
  std::vector<std::size_t> order(n_pre);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = row(a), rb = row(b);
    if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) return true;
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
    return a < b;
  });
  std::vector<std::size_t> group_start;  // offsets into order
  for (std::size_t k = 0; k < n_pre; ++k) {
    if (k == 0 || !std::equal(row(order[k]).begin(), row(order[k]).end(), row(order[k - 1]).begin()))
      group_start.push_back(k);
  }
  const std::size_t groups = group_start.size();
  group_start.push_back(n_pre);

  std::vector<std::size_t> cell(n_pre);
  for (std::size_t i = 0; i < n_pre; ++i) cell[i] = cfg.grid.cell_of(params[i].theta);

  // Neighbour lists (groups within tolerance), self first.
  std::vector<std::vector<std::size_t>> neighbours(groups);
  const bool integer_data = detail::all_integer(rows);
  std::vector<std::vector<int>> offsets;
  const bool exact_only = integer_data && (cfg.discrepancy.name == "euclidean" || cfg.discrepancy.name == "manhattan") &&
                          cfg.tolerance <= 1.0;
  const bool use_offsets = !exact_only && integer_data &&
                           detail::integer_offsets(cfg.discrepancy.name, cfg.tolerance, n, offsets);
  if (exact_only) {
    for (std::size_t g = 0; g < groups; ++g) neighbours[g] = {g};
  } else if (use_offsets) {
    std::unordered_map<std::vector<double>, std::size_t, detail::RowKeyHash> index;
    index.reserve(groups * 2);
    for (std::size_t g = 0; g < groups; ++g) {
      auto r = row(order[group_start[g]]);
      index.emplace(std::vector<double>(r.begin(), r.end()), g);
    }
    std::vector<double> probe(n);
    for (std::size_t g = 0; g < groups; ++g) {
      auto r = row(order[group_start[g]]);
      neighbours[g].push_back(g);
      for (const auto& o : offsets) {
        for (std::size_t k = 0; k < n; ++k) probe[k] = r[k] + o[k];
        auto it = index.find(probe);
        if (it != index.end()) neighbours[g].push_back(it->second);
      }
    }
  } else {
    for (std::size_t g = 0; g < groups; ++g) {
      auto rg = row(order[group_start[g]]);
      neighbours[g].push_back(g);
      for (std::size_t h = 0; h < groups; ++h) {
        if (h == g) continue;
        if (abc_accepts(cfg.discrepancy(rg, row(order[group_start[h]])), cfg.tolerance)) neighbours[g].push_back(h);
      }
    }
  }

  std::vector<double> hist(cells, 0.0);
  std::vector<double> utilities(groups, 0.0);
  std::size_t empty = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    std::fill(hist.begin(), hist.end(), 0.0);
    double inside = 0.0;
    for (auto h : neighbours[g]) {
      for (std::size_t k = group_start[h]; k < group_start[h + 1]; ++k) {
        const auto c = cell[order[k]];
        if (c != ParamGrid::npos) {
          hist[c] += 1.0;
          inside += 1.0;
        }
      }
    }
    if (inside == 0.0) {
      ++empty;
      continue;
    }
    utilities[g] = kld_from_histogram(hist, prior_masses);
  }

  double total = 0.0;
  for (std::size_t g = 0; g < groups; ++g)
    total += static_cast<double>(group_start[g + 1] - group_start[g]) * utilities[g];
  const double mean = total / static_cast<double>(n_pre);
  double ss = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double dev = utilities[g] - mean;
    ss += static_cast<double>(group_start[g + 1] - group_start[g]) * dev * dev;
  }

  if (diag != nullptr) {
    diag->unique_data = groups;
    diag->posterior_evaluations = groups - empty;
    diag->empty_posteriors = empty;
  }
  UtilityEstimate est;
  est.value = mean;
  est.std_error = n_pre > 1 ? std::sqrt(ss / static_cast<double>(n_pre - 1) / static_cast<double>(n_pre)) : 0.0;
  est.b_outer = n_pre;
  est.b_inner = n_pre;
  est.degenerate = empty;
  return est;
}

/// ABCdE expected KLD for a design held in a materialised bank.
inline UtilityEstimate abcde_utility(const DeathModel& model, const Design& d, const SimulationBank& bank,
                                     const AbcConfig& cfg, AbcdeDiagnostics* diag = nullptr) {
  const std::size_t j = bank.design_index(d);
  const std::size_t n = d.values.size();
  std::vector<double> rows(bank.size() * n);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& y = bank.data[i][j].y;
    if (y.size() != n) throw InputError("abcde: bank dataset has the wrong length");
    std::copy(y.begin(), y.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return abcde_from_rows(rows, n, bank.params, cfg, prior_cell_masses(model, cfg.grid), diag);
}

/// ABCdE expected KLD for any design, read off a latent-path bank.
inline UtilityEstimate abcde_utility(const DeathModel& model, const Design& d, const DeathPathBank& bank,
                                     const AbcConfig& cfg, AbcdeDiagnostics* diag = nullptr) {
  if (bank.population() != model.population()) throw InputError("abcde: bank population does not match model");
  const auto rows = bank.realize(d);
  return abcde_from_rows(rows, d.values.size(), bank.params(), cfg, prior_cell_masses(model, cfg.grid), diag);
}

/// Expected KLD of a single dataset's exact posterior on the grid, with the
/// posterior cell mass approximated by prior mass x likelihood at the cell
/// centre. Non-negative by construction; this is the per-sample utility the
/// Müller chain needs for the death model.
inline double death_grid_kld(const DeathModel& model, const ParamGrid& grid, std::span<const double> prior_masses,
                             const Design& d, const Dataset& data) {
  if (grid.axes.size() != 1) throw InputError("death_grid_kld expects a one-dimensional grid");
  const auto& a = grid.axes[0];
  const double width = (a.upper - a.lower) / static_cast<double>(a.cells);
  std::vector<double> log_post(a.cells);
  for (std::size_t k = 0; k < a.cells; ++k) {
    const double b1 = a.lower + width * (static_cast<double>(k) + 0.5);
    log_post[k] = std::log(prior_masses[k]) + model.log_likelihood(ParamDraw{{b1}, {}}, d, data);
  }
  const double norm = log_sum_exp(log_post);
  if (!std::isfinite(norm)) return 0.0;
  double kl = 0.0;
  for (std::size_t k = 0; k < a.cells; ++k) {
    const double lq = log_post[k] - norm;
    if (!std::isfinite(lq)) continue;
    kl += std::exp(lq) * (lq - std::log(prior_masses[k]));
  }
  return std::max(kl, 0.0);
}

}  // namespace insh
