#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/random.hpp"

namespace insh {

/// psi = (theta, gamma): parameters of interest and nuisance parameters.
struct ParamDraw {
  std::vector<double> theta;
  std::vector<double> gamma;

  friend bool operator==(const ParamDraw&, const ParamDraw&) = default;
};

/// Observations aligned with the design: death counts and 0/1 responses are
/// stored as exact integer-valued doubles.
struct Dataset {
  std::vector<double> y;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline double log_binomial_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return kNegInf;
  if (p <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return k == n ? 0.0 : kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

// log(1 / (1 + exp(-x))) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double normal_log_density(double y, double mean, double variance) {
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Markovian death model: N individuals, each infected independently at rate
// b1, so q_{i,i+1} = b1 (N - i). Design = increasing observation times.

struct DeathModelSpec {
  int population = 50;
  double prior_log_mean = -0.005;
  double prior_log_variance = 0.01;

  friend bool operator==(const DeathModelSpec&, const DeathModelSpec&) = default;
};

/// P(I(t + dt) = j | I(t) = i): each of the N - i susceptibles is infected
/// within dt with probability 1 - exp(-b1 dt).
inline double death_transition_prob(int population, int i, int j, double b1, double dt) {
  if (population < 0 || i < 0 || i > population || j > population)
    throw InputError("death_transition_prob: indices outside [0, N]");
  if (!(b1 > 0.0) || !(dt >= 0.0)) throw InputError("death_transition_prob: b1 and dt must be positive");
  if (j < i) return 0.0;
  const double p = -std::expm1(-b1 * dt);
  return std::exp(detail::log_binomial_pmf(population - i, j - i, p));
}

class DeathModel {
 public:
  using Spec = DeathModelSpec;

  DeathModel() = default;
  explicit DeathModel(DeathModelSpec spec) : spec_(spec) {
    if (spec_.population < 1) throw InputError("death model population must be at least 1");
    if (!(spec_.prior_log_variance > 0.0)) throw InputError("death model prior variance must be positive");
  }

  const DeathModelSpec& spec() const noexcept { return spec_; }
  int population() const noexcept { return spec_.population; }
  double prior_log_sd() const { return std::sqrt(spec_.prior_log_variance); }

  ParamDraw sample_prior(Rng& rng) const {
    std::normal_distribution<double> z(spec_.prior_log_mean, prior_log_sd());
    return ParamDraw{{std::exp(z(rng))}, {}};
  }

  double prior_cdf(double b1) const {
    if (b1 <= 0.0) return 0.0;
    return boost::math::cdf(boost::math::normal(spec_.prior_log_mean, prior_log_sd()), std::log(b1));
  }

  double prior_quantile(double q) const {
    return std::exp(boost::math::quantile(boost::math::normal(spec_.prior_log_mean, prior_log_sd()), q));
  }

  class Conditional {
   public:
    Conditional(int population, std::vector<double> step_probs)
        : population_(population), step_probs_(std::move(step_probs)) {}

    Dataset simulate(Rng& rng) const {
      Dataset out;
      out.y.reserve(step_probs_.size());
      int infected = 0;
      for (double p : step_probs_) {
        infected += std::binomial_distribution<int>(population_ - infected, p)(rng);
        out.y.push_back(infected);
      }
      return out;
    }

    double log_likelihood(const Dataset& data) const {
      if (data.y.size() != step_probs_.size()) throw InputError("death data does not match design");
      double ll = 0.0;
      int prev = 0;
      for (std::size_t k = 0; k < step_probs_.size(); ++k) {
        const int cur = static_cast<int>(data.y[k]);
        if (cur < prev || cur > population_) return kNegInf;
        ll += detail::log_binomial_pmf(population_ - prev, cur - prev, step_probs_[k]);
        prev = cur;
      }
      return ll;
    }

   private:
    int population_;
    std::vector<double> step_probs_;
  };

  Conditional condition(const ParamDraw& params, const Design& d) const {
    const double b1 = params.theta.at(0);
    std::vector<double> probs;
    probs.reserve(d.values.size());
    double prev = 0.0;
    for (double t : d.values) {
      if (t < prev) throw InputError("death model design times must be non-decreasing and non-negative");
      probs.push_back(-std::expm1(-b1 * (t - prev)));
      prev = t;
    }
    return Conditional(spec_.population, std::move(probs));
  }

  Dataset simulate(const ParamDraw& params, const Design& d, Rng& rng) const {
    return condition(params, d).simulate(rng);
  }

  double log_likelihood(const ParamDraw& params, const Design& d, const Dataset& data) const {
    return condition(params, d).log_likelihood(data);
  }

 private:
  DeathModelSpec spec_;
};

// ---------------------------------------------------------------------------
// One-compartment pharmacokinetic model with combined proportional and
// additive error: y_t ~ N(mu(t), s2_add + s2_prop mu(t)^2).

struct PkModelSpec {
  double dose_constant = 400.0;
  double sigma2_prop = 0.01;
  double sigma2_add = 0.1;
  std::array<double, 3> prior_log_mean{std::log(0.1), std::log(1.0), std::log(20.0)};
  double prior_log_variance = 0.05;

  friend bool operator==(const PkModelSpec&, const PkModelSpec&) = default;
};

// Below this gap between elimination and absorption rates the closed form is
// replaced by its limit.
inline constexpr double kPkCoincidentRates = 1e-8;

/// Mean concentration for theta = (elimination k_e, absorption k_a, volume V).
inline double pk_mean(std::span<const double> theta, double t, double dose_constant = 400.0) {
  const double ke = theta[0], ka = theta[1], vol = theta[2];
  if (std::abs(ka - ke) < kPkCoincidentRates) return dose_constant * t * ka * std::exp(-ka * t) / vol;
  return dose_constant * ka / (vol * (ka - ke)) * (std::exp(-ke * t) - std::exp(-ka * t));
}

class PkModel {
 public:
  using Spec = PkModelSpec;

  PkModel() = default;
  explicit PkModel(PkModelSpec spec) : spec_(spec) {
    if (!(spec_.sigma2_prop > 0.0 && spec_.sigma2_add > 0.0 && spec_.prior_log_variance > 0.0))
      throw InputError("PK model variances must be positive");
  }

  const PkModelSpec& spec() const noexcept { return spec_; }

  ParamDraw sample_prior(Rng& rng) const {
    const double sd = std::sqrt(spec_.prior_log_variance);
    ParamDraw p;
    p.theta.resize(3);
    for (std::size_t i = 0; i < 3; ++i)
      p.theta[i] = std::exp(std::normal_distribution<double>(spec_.prior_log_mean[i], sd)(rng));
    return p;
  }

  double mean(const ParamDraw& params, double t) const { return pk_mean(params.theta, t, spec_.dose_constant); }

  class Conditional {
   public:
    explicit Conditional(std::size_t n) : mean_(n), sd_(n), inv_var_(n) {}

    Dataset simulate(Rng& rng) const {
      Dataset out;
      out.y.resize(mean_.size());
      std::normal_distribution<double> z(0.0, 1.0);
      for (std::size_t k = 0; k < mean_.size(); ++k) out.y[k] = mean_[k] + sd_[k] * z(rng);
      return out;
    }

    double log_likelihood(const Dataset& data) const {
      double q = 0.0;
      for (std::size_t k = 0; k < mean_.size(); ++k) {
        const double r = data.y[k] - mean_[k];
        q += r * r * inv_var_[k];
      }
      return log_norm_ - 0.5 * q;
    }

   private:
    friend class PkModel;
    std::vector<double> mean_, sd_, inv_var_;
    double log_norm_ = 0.0;
  };

  Conditional condition(const ParamDraw& params, const Design& d) const {
    Conditional c(d.values.size());
    for (std::size_t k = 0; k < d.values.size(); ++k) {
      const double m = mean(params, d.values[k]);
      const double v = spec_.sigma2_add + spec_.sigma2_prop * m * m;
      assert(v > 0.0);
      c.mean_[k] = m;
      c.sd_[k] = std::sqrt(v);
      c.inv_var_[k] = 1.0 / v;
      c.log_norm_ -= 0.5 * std::log(2.0 * std::numbers::pi * v);
    }
    return c;
  }

  Dataset simulate(const ParamDraw& params, const Design& d, Rng& rng) const {
    return condition(params, d).simulate(rng);
  }

  double log_likelihood(const ParamDraw& params, const Design& d, const Dataset& data) const {
    if (data.y.size() != d.values.size()) throw InputError("PK data does not match design");
    return condition(params, d).log_likelihood(data);
  }

 private:
  PkModelSpec spec_;
};

// ---------------------------------------------------------------------------
// Four-factor logistic regression with independent uniform priors on beta.
// The design is the n x 4 matrix stored row-major in Design::values.

struct LogisticModelSpec {
  std::size_t rows = 6;
  std::array<double, 5> prior_lower{-3.0, 4.0, 5.0, -6.0, -2.5};
  std::array<double, 5> prior_upper{3.0, 10.0, 11.0, 0.0, 3.5};

  friend bool operator==(const LogisticModelSpec&, const LogisticModelSpec&) = default;
};

inline constexpr std::size_t kLogisticFactors = 4;

inline double logistic_prob(std::span<const double> beta, std::span<const double> x_row) {
  double eta = beta[0];
  for (std::size_t i = 0; i < kLogisticFactors; ++i) eta += beta[i + 1] * x_row[i];
  return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

class LogisticModel {
 public:
  using Spec = LogisticModelSpec;

  LogisticModel() = default;
  explicit LogisticModel(LogisticModelSpec spec) : spec_(spec) {
    if (spec_.rows == 0) throw InputError("logistic model needs at least one row");
    for (std::size_t i = 0; i < 5; ++i)
      if (!(spec_.prior_lower[i] < spec_.prior_upper[i]))
        throw InputError("logistic prior bounds must satisfy a_i < b_i");
  }

  const LogisticModelSpec& spec() const noexcept { return spec_; }
  std::size_t design_dimension() const noexcept { return spec_.rows * kLogisticFactors; }

  ParamDraw sample_prior(Rng& rng) const {
    ParamDraw p;
    p.theta.resize(5);
    for (std::size_t i = 0; i < 5; ++i)
      p.theta[i] = std::uniform_real_distribution<double>(spec_.prior_lower[i], spec_.prior_upper[i])(rng);
    return p;
  }

  class Conditional {
   public:
    explicit Conditional(std::size_t n) : log_p1_(n), log_p0_(n), p1_(n) {}

    Dataset simulate(Rng& rng) const {
      Dataset out;
      out.y.resize(p1_.size());
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t s = 0; s < p1_.size(); ++s) out.y[s] = u(rng) < p1_[s] ? 1.0 : 0.0;
      return out;
    }

    double log_likelihood(const Dataset& data) const {
      double ll = 0.0;
      for (std::size_t s = 0; s < p1_.size(); ++s) ll += data.y[s] != 0.0 ? log_p1_[s] : log_p0_[s];
      return ll;
    }

   private:
    friend class LogisticModel;
    std::vector<double> log_p1_, log_p0_, p1_;
  };

  Conditional condition(const ParamDraw& params, const Design& d) const {
    if (d.values.size() != design_dimension())
      throw InputError("logistic design must have " + std::to_string(design_dimension()) + " values");
    const auto& b = params.theta;
    Conditional c(spec_.rows);
    for (std::size_t s = 0; s < spec_.rows; ++s) {
      const double* x = d.values.data() + s * kLogisticFactors;
      double eta = b[0];
      for (std::size_t i = 0; i < kLogisticFactors; ++i) eta += b[i + 1] * x[i];
      c.log_p1_[s] = detail::log_sigmoid(eta);
      c.log_p0_[s] = detail::log_sigmoid(-eta);
      c.p1_[s] = std::exp(c.log_p1_[s]);
    }
    return c;
  }

  Dataset simulate(const ParamDraw& params, const Design& d, Rng& rng) const {
    return condition(params, d).simulate(rng);
  }

  double log_likelihood(const ParamDraw& params, const Design& d, const Dataset& data) const {
    if (data.y.size() != spec_.rows) throw InputError("logistic data must have one response per row");
    return condition(params, d).log_likelihood(data);
  }

 private:
  LogisticModelSpec spec_;
};

// ---------------------------------------------------------------------------
// Calibration model with a closed-form mutual information:
// theta ~ N(0, tau2), gamma ~ N(0, nu2), y = c theta + gamma + N(0, sigma2).
// The design is ignored; there is a single observation.

struct ConjugateNormalSpec {
  double prior_variance = 1.0;
  double noise_variance = 1.0;
  double coupling = 1.0;
  double nuisance_variance = 0.0;  // 0 means no nuisance parameter

  friend bool operator==(const ConjugateNormalSpec&, const ConjugateNormalSpec&) = default;
};

class ConjugateNormalModel {
 public:
  using Spec = ConjugateNormalSpec;

  ConjugateNormalModel() = default;
  explicit ConjugateNormalModel(ConjugateNormalSpec spec) : spec_(spec) {
    if (!(spec_.prior_variance > 0.0 && spec_.noise_variance > 0.0 && spec_.nuisance_variance >= 0.0))
      throw InputError("conjugate model variances must be positive");
  }

  const ConjugateNormalSpec& spec() const noexcept { return spec_; }

  /// I(theta; y) = 1/2 log(1 + c^2 tau2 / (sigma2 + nu2)).
  double analytic_sig() const {
    return 0.5 * std::log1p(spec_.coupling * spec_.coupling * spec_.prior_variance /
                            (spec_.noise_variance + spec_.nuisance_variance));
  }

  ParamDraw sample_prior(Rng& rng) const {
    ParamDraw p;
    p.theta = {std::normal_distribution<double>(0.0, std::sqrt(spec_.prior_variance))(rng)};
    if (spec_.nuisance_variance > 0.0)
      p.gamma = {std::normal_distribution<double>(0.0, std::sqrt(spec_.nuisance_variance))(rng)};
    return p;
  }

  class Conditional {
   public:
    Conditional(double mean, double variance) : mean_(mean), variance_(variance) {}
    Dataset simulate(Rng& rng) const {
      return Dataset{{mean_ + std::sqrt(variance_) * std::normal_distribution<double>(0.0, 1.0)(rng)}};
    }
    double log_likelihood(const Dataset& data) const {
      return detail::normal_log_density(data.y.at(0), mean_, variance_);
    }

   private:
    double mean_, variance_;
  };

  Conditional condition(const ParamDraw& params, const Design& /*d*/) const {
    const double g = params.gamma.empty() ? 0.0 : params.gamma[0];
    return Conditional(spec_.coupling * params.theta.at(0) + g, spec_.noise_variance);
  }

  Dataset simulate(const ParamDraw& params, const Design& d, Rng& rng) const {
    return condition(params, d).simulate(rng);
  }

  double log_likelihood(const ParamDraw& params, const Design& d, const Dataset& data) const {
    return condition(params, d).log_likelihood(data);
  }

 private:
  ConjugateNormalSpec spec_;
};

// ---------------------------------------------------------------------------

template <class M>
concept GenerativeModel = requires(const M& m, Rng& rng, const ParamDraw& p, const Design& d,
                                   const Dataset& y) {
  { m.sample_prior(rng) } -> std::same_as<ParamDraw>;
  { m.simulate(p, d, rng) } -> std::same_as<Dataset>;
  { m.log_likelihood(p, d, y) } -> std::convertible_to<double>;
  { m.condition(p, d).simulate(rng) } -> std::same_as<Dataset>;
  { m.condition(p, d).log_likelihood(y) } -> std::convertible_to<double>;
};

using ModelSpec = std::variant<DeathModel, PkModel, LogisticModel, ConjugateNormalModel>;

inline ParamDraw sample_prior(const ModelSpec& model, Rng& rng) {
  return std::visit([&](const auto& m) { return m.sample_prior(rng); }, model);
}

inline Dataset simulate(const ModelSpec& model, const ParamDraw& params, const Design& d, Rng& rng) {
  return std::visit([&](const auto& m) { return m.simulate(params, d, rng); }, model);
}

inline double log_likelihood(const ModelSpec& model, const ParamDraw& params, const Design& d,
                             const Dataset& data) {
  return std::visit([&](const auto& m) { return m.log_likelihood(params, d, data); }, model);
}

inline std::string model_name(const ModelSpec& model) {
  struct {
    std::string operator()(const DeathModel&) const { return "death"; }
    std::string operator()(const PkModel&) const { return "pk"; }
    std::string operator()(const LogisticModel&) const { return "logistic"; }
    std::string operator()(const ConjugateNormalModel&) const { return "conjugate-normal"; }
  } name;
  return std::visit(name, model);
}

}  // namespace insh
