#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "insh/errors.hpp"
#include "insh/random.hpp"

namespace insh {

/// One point in a design space: observation times, factor settings, ...
///
/// `id` and `parent` are bookkeeping for traces (0 means "unassigned" / "no
/// parent"); `generation` is the INSH generation that produced the design.
struct Design {
  std::vector<double> values;
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  int generation = 0;

  std::size_t dimension() const noexcept { return values.size(); }
  friend bool operator==(const Design&, const Design&) = default;
};

struct ConstraintSet {
  std::vector<double> lower;
  std::vector<double> upper;
  double min_spacing = 0.0;  // 0 disables the spacing check
  bool strictly_increasing = false;

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

// Slack used when comparing gaps against the minimum spacing, so that
// designs assembled from decimal literals (1.0, 1.25) are not rejected on
// rounding noise.
inline constexpr double kSpacingSlack = 1e-12;

inline void validate(const ConstraintSet& c) {
  if (c.lower.size() != c.upper.size())
    throw InputError("constraint bounds have different lengths");
  for (std::size_t i = 0; i < c.lower.size(); ++i) {
    if (!(c.lower[i] <= c.upper[i]))
      throw InputError("lower bound exceeds upper bound at coordinate " + std::to_string(i));
  }
  if (c.min_spacing < 0.0) throw InputError("min_spacing must be non-negative");
  if (c.min_spacing > 0.0 && !c.strictly_increasing)
    throw InputError("min_spacing requires strictly_increasing");
}

class DesignSpace {
 public:
  DesignSpace() = default;

  DesignSpace(std::size_t dimension, ConstraintSet constraints)
      : dimension_(dimension), constraints_(std::move(constraints)) {
    if (dimension_ == 0) throw InputError("design space dimension must be positive");
    if (constraints_.lower.size() != dimension_)
      throw InputError("bounds length " + std::to_string(constraints_.lower.size()) +
                       " does not match dimension " + std::to_string(dimension_));
    validate(constraints_);
  }

  /// Same bounds on every coordinate.
  static DesignSpace box(std::size_t dimension, double lower, double upper,
                         bool strictly_increasing = false, double min_spacing = 0.0) {
    return DesignSpace(dimension, ConstraintSet{std::vector<double>(dimension, lower),
                                                std::vector<double>(dimension, upper),
                                                min_spacing, strictly_increasing});
  }

  std::size_t dimension() const noexcept { return dimension_; }
  const ConstraintSet& constraints() const noexcept { return constraints_; }

  friend bool operator==(const DesignSpace&, const DesignSpace&) = default;

 private:
  std::size_t dimension_ = 0;
  ConstraintSet constraints_;
};

/// True iff `values` respects bounds, ordering and spacing. Values are
/// checked as given; callers that treat designs as unordered sets sort first.
inline bool satisfies(const ConstraintSet& c, std::span<const double> values) {
  if (values.size() != c.lower.size())
    throw InputError("design has dimension " + std::to_string(values.size()) + ", expected " +
                     std::to_string(c.lower.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= c.lower[i] && values[i] <= c.upper[i])) return false;
  }
  if (c.strictly_increasing) {
    for (std::size_t i = 1; i < values.size(); ++i) {
      double gap = values[i] - values[i - 1];
      if (c.min_spacing > 0.0) {
        if (gap < c.min_spacing - kSpacingSlack) return false;
      } else if (!(gap > 0.0)) {
        return false;
      }
    }
  }
  return true;
}

inline bool satisfies(const DesignSpace& space, const Design& d) {
  return satisfies(space.constraints(), d.values);
}

namespace detail {

inline bool has_common_bounds(const ConstraintSet& c) {
  return std::adjacent_find(c.lower.begin(), c.lower.end(), std::not_equal_to<>()) == c.lower.end() &&
         std::adjacent_find(c.upper.begin(), c.upper.end(), std::not_equal_to<>()) == c.upper.end();
}

// Uniform draw over the feasible region. For ordered spaces with common
// bounds this is the order-statistics construction: sort uniforms on the
// shrunken interval, then add i * spacing to the i-th value.
inline std::vector<double> uniform_feasible(const ConstraintSet& c, Rng& rng) {
  const std::size_t n = c.lower.size();
  std::vector<double> v(n);
  auto uniform = [&](double lo, double hi) {
    return lo < hi ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  };
  if (!c.strictly_increasing) {
    for (std::size_t i = 0; i < n; ++i) v[i] = uniform(c.lower[i], c.upper[i]);
    return v;
  }
  if (has_common_bounds(c)) {
    const double lo = c.lower[0];
    const double hi = c.upper[0] - static_cast<double>(n - 1) * c.min_spacing;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      for (auto& x : v) x = uniform(lo, hi);
      std::sort(v.begin(), v.end());
      for (std::size_t i = 0; i < n; ++i) v[i] += static_cast<double>(i) * c.min_spacing;
      if (satisfies(c, v)) return v;
    }
    throw InfeasibleError("could not draw a feasible design (degenerate ordered space)");
  }
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) v[i] = uniform(c.lower[i], c.upper[i]);
    std::sort(v.begin(), v.end());
    if (satisfies(c, v)) return v;
  }
  throw InfeasibleError("rejection sampler found no feasible design");
}

inline void check_feasible(const ConstraintSet& c) {
  validate(c);
  if (!c.strictly_increasing || c.lower.empty()) return;
  const std::size_t n = c.lower.size();
  const double lo = *std::min_element(c.lower.begin(), c.lower.end());
  const double hi = *std::max_element(c.upper.begin(), c.upper.end());
  if (static_cast<double>(n - 1) * c.min_spacing > hi - lo + kSpacingSlack)
    throw InfeasibleError("constraint set infeasible: " + std::to_string(n) +
                          " coordinates with spacing " + std::to_string(c.min_spacing) +
                          " do not fit in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (n > 1 && c.min_spacing == 0.0 && !(hi > lo))
    throw InfeasibleError("strictly increasing coordinates need a non-degenerate range");
}

}  // namespace detail

/// Initial population. With probability `boundary_prob` a design puts every
/// coordinate on a randomly chosen bound; boundary designs that break the
/// ordering/spacing rules are replaced by a uniform draw so `count` is
/// always honoured.
inline std::vector<Design> sample_initial(const DesignSpace& space, std::size_t count,
                                          double boundary_prob, Rng& rng) {
  if (count == 0) throw InputError("sample_initial: count must be at least 1");
  if (!(boundary_prob >= 0.0 && boundary_prob <= 1.0))
    throw InputError("sample_initial: boundary_prob must lie in [0, 1]");
  const auto& c = space.constraints();
  detail::check_feasible(c);

  std::vector<Design> out;
  out.reserve(count);
  std::bernoulli_distribution on_boundary(boundary_prob);
  std::bernoulli_distribution pick_upper(0.5);
  for (std::size_t k = 0; k < count; ++k) {
    Design d;
    bool done = false;
    if (boundary_prob > 0.0 && on_boundary(rng)) {
      d.values.resize(space.dimension());
      for (std::size_t i = 0; i < d.values.size(); ++i)
        d.values[i] = pick_upper(rng) ? c.upper[i] : c.lower[i];
      if (c.strictly_increasing) std::sort(d.values.begin(), d.values.end());
      done = satisfies(c, d.values);
    }
    if (!done) d.values = detail::uniform_feasible(c, rng);
    out.push_back(std::move(d));
  }
  return out;
}

enum class KernelKind { TruncatedGaussian, BoundedUniform };

inline std::string_view to_string(KernelKind k) {
  return k == KernelKind::TruncatedGaussian ? "truncated-gaussian" : "bounded-uniform";
}

inline KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "truncated-gaussian") return KernelKind::TruncatedGaussian;
  if (s == "bounded-uniform") return KernelKind::BoundedUniform;
  throw InputError("unknown kernel kind '" + std::string(s) + "'");
}

/// f(d | d'): gaussian (scale = standard deviation) or uniform (scale =
/// half-width), one scale per coordinate, no cross-coordinate dependence.
struct PerturbationKernel {
  KernelKind kind = KernelKind::TruncatedGaussian;
  std::vector<double> scale;

  static PerturbationKernel isotropic(KernelKind kind, std::size_t dimension, double scale) {
    return {kind, std::vector<double>(dimension, scale)};
  }
};

inline constexpr std::size_t kMaxPerturbAttempts = 10000;

/// Draws one offspring of `d` from the kernel truncated to the feasible set.
///
/// Truncation is by rejection. In ordered spaces the whole vector is redrawn
/// and sorted before the feasibility check. In box-only spaces the feasible
/// set is a product, so each coordinate is rejected on its own: this is the
/// same truncated distribution, but it does not collapse for parents sitting
/// on many bounds at once.
inline Design perturb(const Design& d, const PerturbationKernel& kernel,
                      const ConstraintSet& c, Rng& rng,
                      std::size_t max_attempts = kMaxPerturbAttempts) {
  const std::size_t n = d.values.size();
  if (kernel.scale.size() != n)
    throw InputError("kernel scale has length " + std::to_string(kernel.scale.size()) +
                     ", design has dimension " + std::to_string(n));
  for (double s : kernel.scale)
    if (!(s > 0.0)) throw InputError("kernel scales must be strictly positive");
  if (c.lower.size() != n) throw InputError("constraint set does not match design dimension");

  auto draw = [&](std::size_t i) {
    if (kernel.kind == KernelKind::TruncatedGaussian)
      return d.values[i] + kernel.scale[i] * std::normal_distribution<double>(0.0, 1.0)(rng);
    return d.values[i] + std::uniform_real_distribution<double>(-kernel.scale[i], kernel.scale[i])(rng);
  };

  Design out;
  out.parent = d.id;
  out.values.resize(n);
  if (!c.strictly_increasing) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t attempts = 0;
      double x;
      do {
        if (++attempts > max_attempts)
          throw PerturbationError(max_attempts, "perturbation rejected " + std::to_string(max_attempts) +
                                                    " times at coordinate " + std::to_string(i));
        x = draw(i);
      } while (!(x >= c.lower[i] && x <= c.upper[i]));
      out.values[i] = x;
    }
    return out;
  }
  for (std::size_t attempts = 1; attempts <= max_attempts; ++attempts) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = draw(i);
    std::sort(out.values.begin(), out.values.end());
    if (satisfies(c, out.values)) return out;
  }
  throw PerturbationError(max_attempts, "perturbation rejected " + std::to_string(max_attempts) +
                                            " times: feasible region has negligible kernel mass");
}

inline constexpr std::size_t kDefaultGridCap = 10'000'000;

/// All feasible lattice points lower + k * spacing (per coordinate).
inline std::vector<Design> enumerate_grid(const DesignSpace& space, double spacing,
                                          std::size_t max_points = kDefaultGridCap) {
  if (!(spacing > 0.0)) throw InputError("grid spacing must be positive");
  const auto& c = space.constraints();
  const std::size_t n = space.dimension();

  std::vector<std::vector<double>> axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto steps = static_cast<std::size_t>(std::floor((c.upper[i] - c.lower[i]) / spacing + 1e-9));
    axis[i].reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
      axis[i].push_back(std::min(c.lower[i] + static_cast<double>(k) * spacing, c.upper[i]));
  }

  std::vector<Design> out;
  std::vector<double> cur(n);
  std::size_t visited = 0;
  // Depth-first over coordinates; ordered spaces prune on the previous value.
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      if (satisfies(c, cur)) {
        if (out.size() >= max_points)
          throw SizeLimitError("grid exceeds the cap of " + std::to_string(max_points) + " points");
        out.push_back(Design{cur});
      }
      return;
    }
    for (double x : axis[i]) {
      if (c.strictly_increasing && i > 0) {
        double gap = x - cur[i - 1];
        if (c.min_spacing > 0.0 ? gap < c.min_spacing - kSpacingSlack : !(gap > 0.0)) continue;
      }
      if (++visited > 50 * max_points)
        throw SizeLimitError("grid enumeration exceeds the cap of " + std::to_string(max_points) + " points");
      cur[i] = x;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace insh
