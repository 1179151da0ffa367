#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "insh/design.hpp"
#include "insh/errors.hpp"
#include "insh/insh.hpp"
#include "insh/models.hpp"
#include "insh/windows.hpp"

namespace insh {

// Run configuration. JSON on disk; every schedule is an explicit
// per-generation array so a run can be audited line by line.

struct ModelConfig {
  std::string name = "death";
  DeathModelSpec death;
  PkModelSpec pk;
  LogisticModelSpec logistic;
  ConjugateNormalSpec conjugate;

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    if (a.name != b.name) return false;
    if (a.name == "death") return a.death == b.death;
    if (a.name == "pk") return a.pk == b.pk;
    if (a.name == "logistic") return a.logistic == b.logistic;
    return a.conjugate == b.conjugate;
  }
};

struct SpaceConfig {
  std::size_t dimension = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  double min_spacing = 0.0;
  bool strictly_increasing = false;

  friend bool operator==(const SpaceConfig&, const SpaceConfig&) = default;
};

enum class EstimatorKind { NestedMc, Abcde };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::NestedMc;
  std::size_t b_outer = 500;
  std::size_t b_inner = 500;
  // ABCdE only
  std::size_t bank_size = 50000;
  std::optional<double> tolerance;  // default depends on the number of observations
  std::string discrepancy = "euclidean";
  std::size_t grid_cells = 100;
  double grid_mass = 0.999;

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct GridConfig {
  double spacing = 0.1;
  std::size_t max_points = kDefaultGridCap;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct McmcConfig {
  std::size_t chain_length = 20000;
  std::size_t burn_in = 2000;
  std::vector<double> scale;  // empty: 0.1 per coordinate
  double smoothing_bins = 0.0;

  friend bool operator==(const McmcConfig&, const McmcConfig&) = default;
};

struct Budget {
  std::size_t b_outer = 5000;
  std::size_t b_inner = 5000;
  std::size_t replicates = 20;

  friend bool operator==(const Budget&, const Budget&) = default;
};

struct WindowsConfig {
  std::size_t top = 20;
  std::size_t bootstrap = 20;
  BootstrapMode mode = BootstrapMode::Candidates;
  Budget rescore;
  std::string trace;  // empty: <out>/trace.csv

  friend bool operator==(const WindowsConfig&, const WindowsConfig&) = default;
};

struct NamedDesign {
  std::string name;
  std::vector<double> values;

  friend bool operator==(const NamedDesign&, const NamedDesign&) = default;
};

struct EvaluateConfig {
  std::vector<NamedDesign> designs;
  Budget budget;

  friend bool operator==(const EvaluateConfig&, const EvaluateConfig&) = default;
};

struct RunConfig {
  ModelConfig model;
  SpaceConfig space;
  Schedule schedule;
  AcceptanceRule acceptance;
  KernelKind kernel = KernelKind::TruncatedGaussian;
  EstimatorConfig estimator;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string output = "out";
  GridConfig grid;
  McmcConfig mcmc;
  WindowsConfig windows;
  EvaluateConfig evaluate;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.model == b.model && a.space == b.space && a.schedule.generations == b.schedule.generations &&
           a.schedule.retain == b.schedule.retain && a.schedule.offspring == b.schedule.offspring &&
           a.schedule.scale == b.schedule.scale && a.schedule.initial_count == b.schedule.initial_count &&
           a.schedule.boundary_prob == b.schedule.boundary_prob && a.acceptance.kind == b.acceptance.kind &&
           a.acceptance.threshold == b.acceptance.threshold &&
           a.acceptance.population_ceiling == b.acceptance.population_ceiling && a.kernel == b.kernel &&
           a.estimator == b.estimator && a.seed == b.seed && a.workers == b.workers && a.output == b.output &&
           a.grid == b.grid && a.mcmc == b.mcmc && a.windows == b.windows && a.evaluate == b.evaluate;
  }
};

inline std::string to_string(EstimatorKind k) { return k == EstimatorKind::NestedMc ? "nested-mc" : "abcde"; }

namespace detail {

using nlohmann::json;

// Reads one JSON object, remembering its dotted path for diagnostics and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(field(key) + ": " + what);
  }

  std::string field(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(key, "required field is missing");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? as<T>(key) : fallback;
  }

  template <class T>
  T get(const std::string& key) {
    raw(key);
    return as<T>(key);
  }

  Section sub(const std::string& key) {
    if (!has(key)) return Section(json::object(), field(key));
    return Section(j_.at(key), field(key));
  }

  bool has_sub(const std::string& key) { return has(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
  }

 private:
  template <class T>
  T as(const std::string& key) const {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(key, "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(key, "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(key, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(key, std::string("wrong type (") + e.what() + ")");
    }
  }

  json j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Accepts a scalar (broadcast) or an array of exactly n numbers.
inline std::vector<double> number_list(Section& s, const std::string& key, std::size_t n) {
  const json& v = s.raw(key);
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array()) s.fail(key, "expected a number or an array of numbers");
  if (v.size() != n)
    s.fail(key, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) s.fail(key, "expected numbers only");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::vector<std::size_t> count_list(Section& s, const std::string& key, std::size_t n) {
  const json& v = s.raw(key);
  if (!v.is_array()) s.fail(key, "expected an explicit array with one entry per generation");
  if (v.size() != n)
    s.fail(key, "expected " + std::to_string(n) + " entries (one per generation), got " + std::to_string(v.size()));
  std::vector<std::size_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<std::int64_t>() < 1) s.fail(key, "entries must be positive integers");
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

template <std::size_t N>
std::array<double, N> fixed_list(Section& s, const std::string& key, std::array<double, N> fallback) {
  if (!s.has(key)) return fallback;
  auto v = number_list(s, key, N);
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline ModelConfig parse_model(Section s) {
  ModelConfig m;
  m.name = s.get<std::string>("name");
  if (m.name == "death") {
    m.death.population = static_cast<int>(s.get<std::size_t>("population", 50));
    m.death.prior_log_mean = s.get<double>("prior_log_mean", m.death.prior_log_mean);
    m.death.prior_log_variance = s.get<double>("prior_log_variance", m.death.prior_log_variance);
    if (m.death.population < 1) s.fail("population", "must be at least 1");
    if (!(m.death.prior_log_variance > 0)) s.fail("prior_log_variance", "must be positive");
  } else if (m.name == "pk") {
    m.pk.dose_constant = s.get<double>("dose_constant", m.pk.dose_constant);
    m.pk.sigma2_prop = s.get<double>("sigma2_prop", m.pk.sigma2_prop);
    m.pk.sigma2_add = s.get<double>("sigma2_add", m.pk.sigma2_add);
    m.pk.prior_log_mean = fixed_list<3>(s, "prior_log_mean", m.pk.prior_log_mean);
    m.pk.prior_log_variance = s.get<double>("prior_log_variance", m.pk.prior_log_variance);
    if (!(m.pk.sigma2_prop >= 0) || !(m.pk.sigma2_add > 0)) s.fail("sigma2_add", "noise variances must be positive");
    if (!(m.pk.prior_log_variance > 0)) s.fail("prior_log_variance", "must be positive");
  } else if (m.name == "logistic") {
    m.logistic.rows = s.get<std::size_t>("rows", m.logistic.rows);
    m.logistic.prior_lower = fixed_list<5>(s, "prior_lower", m.logistic.prior_lower);
    m.logistic.prior_upper = fixed_list<5>(s, "prior_upper", m.logistic.prior_upper);
    if (m.logistic.rows < 1) s.fail("rows", "must be at least 1");
    for (std::size_t k = 0; k < 5; ++k)
      if (!(m.logistic.prior_lower[k] < m.logistic.prior_upper[k])) s.fail("prior_upper", "must exceed prior_lower");
  } else if (m.name == "conjugate-normal") {
    m.conjugate.prior_variance = s.get<double>("prior_variance", m.conjugate.prior_variance);
    m.conjugate.noise_variance = s.get<double>("noise_variance", m.conjugate.noise_variance);
    m.conjugate.coupling = s.get<double>("coupling", m.conjugate.coupling);
    m.conjugate.nuisance_variance = s.get<double>("nuisance_variance", m.conjugate.nuisance_variance);
    if (!(m.conjugate.prior_variance > 0)) s.fail("prior_variance", "must be positive");
    if (!(m.conjugate.noise_variance > 0)) s.fail("noise_variance", "must be positive");
    if (!(m.conjugate.nuisance_variance >= 0)) s.fail("nuisance_variance", "must be non-negative");
  } else {
    s.fail("name", "unknown model '" + m.name + "' (death, pk, logistic, conjugate-normal)");
  }
  s.finish();
  return m;
}

inline SpaceConfig parse_space(Section s) {
  SpaceConfig c;
  c.dimension = s.get<std::size_t>("dimension");
  if (c.dimension == 0) s.fail("dimension", "must be at least 1");
  c.lower = number_list(s, "lower", c.dimension);
  c.upper = number_list(s, "upper", c.dimension);
  c.min_spacing = s.get<double>("min_spacing", 0.0);
  c.strictly_increasing = s.get<bool>("strictly_increasing", false);
  for (std::size_t i = 0; i < c.dimension; ++i)
    if (!(c.lower[i] <= c.upper[i])) s.fail("upper", "coordinate " + std::to_string(i + 1) + " has upper < lower");
  if (c.min_spacing < 0) s.fail("min_spacing", "must be non-negative");
  if (c.min_spacing > 0 && !c.strictly_increasing)
    s.fail("strictly_increasing", "must be true when min_spacing is positive");
  s.finish();
  return c;
}

inline Schedule parse_schedule(Section s, std::size_t dimension) {
  Schedule sc;
  sc.generations = s.get<std::size_t>("generations");
  if (sc.generations == 0) s.fail("generations", "W must be at least 1");
  sc.retain = count_list(s, "retain", sc.generations);
  sc.offspring = count_list(s, "offspring", sc.generations);
  const json& v = s.raw("scale");
  if (!v.is_array() || v.size() != sc.generations)
    s.fail("scale", "expected an explicit array with " + std::to_string(sc.generations) + " entries (one per generation)");
  for (std::size_t w = 0; w < v.size(); ++w) {
    const json& e = v[w];
    if (e.is_number()) {
      sc.scale.emplace_back(dimension, e.get<double>());
    } else if (e.is_array() && e.size() == dimension &&
               std::all_of(e.begin(), e.end(), [](const json& x) { return x.is_number(); })) {
      sc.scale.push_back(e.get<std::vector<double>>());
    } else {
      s.fail("scale", "entry " + std::to_string(w + 1) + " must be a number or " + std::to_string(dimension) +
                          " numbers");
    }
    for (double x : sc.scale.back())
      if (!(x >= 0)) s.fail("scale", "entry " + std::to_string(w + 1) + " must be non-negative");
  }
  sc.initial_count = s.get<std::size_t>("initial_count");
  if (sc.initial_count == 0) s.fail("initial_count", "must be at least 1");
  sc.boundary_prob = s.get<double>("boundary_prob", 0.0);
  if (!(sc.boundary_prob >= 0 && sc.boundary_prob <= 1)) s.fail("boundary_prob", "must lie in [0, 1]");
  s.finish();
  return sc;
}

inline AcceptanceRule parse_acceptance(Section s) {
  AcceptanceRule r;
  try {
    r.kind = parse_acceptance_kind(s.get<std::string>("rule", "top-r-current"));
  } catch (const ConfigError& e) {
    s.fail("rule", e.what());
  }
  if (s.has("threshold")) r.threshold = s.get<double>("threshold");
  r.population_ceiling = s.get<std::size_t>("population_ceiling", 0);
  try {
    r.validate();
  } catch (const ConfigError& e) {
    s.fail("threshold", e.what());
  }
  s.finish();
  return r;
}

inline EstimatorConfig parse_estimator(Section s) {
  EstimatorConfig e;
  const auto kind = s.get<std::string>("kind", "nested-mc");
  if (kind == "nested-mc") {
    e.kind = EstimatorKind::NestedMc;
  } else if (kind == "abcde") {
    e.kind = EstimatorKind::Abcde;
  } else {
    s.fail("kind", "unknown estimator '" + kind + "' (nested-mc, abcde)");
  }
  e.b_outer = s.get<std::size_t>("b_outer", e.b_outer);
  e.b_inner = s.get<std::size_t>("b_inner", e.b_inner);
  e.bank_size = s.get<std::size_t>("bank_size", e.bank_size);
  if (s.has("tolerance")) e.tolerance = s.get<double>("tolerance");
  e.discrepancy = s.get<std::string>("discrepancy", e.discrepancy);
  e.grid_cells = s.get<std::size_t>("grid_cells", e.grid_cells);
  e.grid_mass = s.get<double>("grid_mass", e.grid_mass);
  if (e.b_outer == 0) s.fail("b_outer", "must be at least 1");
  if (e.b_inner == 0) s.fail("b_inner", "must be at least 1");
  if (e.bank_size == 0) s.fail("bank_size", "must be at least 1");
  if (e.tolerance && !(*e.tolerance >= 0)) s.fail("tolerance", "must be non-negative");
  if (e.discrepancy != "euclidean" && e.discrepancy != "manhattan")
    s.fail("discrepancy", "unknown discrepancy '" + e.discrepancy + "' (euclidean, manhattan)");
  if (e.grid_cells == 0) s.fail("grid_cells", "must be at least 1");
  if (!(e.grid_mass > 0 && e.grid_mass < 1)) s.fail("grid_mass", "must lie in (0, 1)");
  s.finish();
  return e;
}

inline Budget parse_budget(Section& s, Budget b) {
  b.b_outer = s.get<std::size_t>("b_outer", b.b_outer);
  b.b_inner = s.get<std::size_t>("b_inner", b.b_inner);
  b.replicates = s.get<std::size_t>("replicates", b.replicates);
  if (b.b_outer == 0 || b.b_inner == 0) s.fail("b_outer", "budgets must be at least 1");
  if (b.replicates == 0) s.fail("replicates", "must be at least 1");
  return b;
}

inline std::vector<NamedDesign> parse_designs(Section& s, const std::string& key, std::size_t dimension) {
  std::vector<NamedDesign> out;
  if (!s.has(key)) return out;
  const json& v = s.raw(key);
  if (!v.is_array()) s.fail(key, "expected an array");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v[i];
    NamedDesign d;
    const json* vals = &e;
    if (e.is_object()) {
      if (!e.contains("values")) s.fail(key, "entry " + std::to_string(i + 1) + " has no values");
      d.name = e.value("name", "");
      vals = &e.at("values");
    }
    if (d.name.empty()) d.name = "design" + std::to_string(i + 1);
    if (!vals->is_array() || vals->size() != dimension)
      s.fail(key, "entry " + std::to_string(i + 1) + " must have " + std::to_string(dimension) + " values");
    for (const auto& x : *vals)
      if (!x.is_number()) s.fail(key, "entry " + std::to_string(i + 1) + " must contain numbers");
    d.values = vals->get<std::vector<double>>();
    out.push_back(std::move(d));
  }
  return out;
}

inline std::size_t model_dimension(const ModelConfig& m, std::size_t declared) {
  if (m.name == "logistic") return m.logistic.rows * kLogisticFactors;
  return declared;
}

}  // namespace detail

/// Parses and validates a configuration document. Throws ConfigError naming
/// the offending field.
inline RunConfig parse_config(const nlohmann::json& doc) {
  detail::Section root(doc, "");
  RunConfig c;
  if (!root.has("model")) root.fail("model", "required section is missing");
  c.model = detail::parse_model(root.sub("model"));
  if (!root.has("space")) root.fail("space", "required section is missing");
  c.space = detail::parse_space(root.sub("space"));
  const std::size_t need = detail::model_dimension(c.model, c.space.dimension);
  if (need != c.space.dimension)
    root.fail("space.dimension", "logistic model with " + std::to_string(c.model.logistic.rows) + " rows needs " +
                                     std::to_string(need));
  if (c.model.name == "conjugate-normal" && c.space.dimension != 1)
    root.fail("space.dimension", "conjugate-normal model takes a single design coordinate");
  if (!root.has("schedule")) root.fail("schedule", "required section is missing");
  c.schedule = detail::parse_schedule(root.sub("schedule"), c.space.dimension);
  c.acceptance = detail::parse_acceptance(root.sub("acceptance"));
  try {
    c.kernel = parse_kernel_kind(root.get<std::string>("kernel", "truncated-gaussian"));
  } catch (const InputError& e) {
    root.fail("kernel", e.what());
  }
  c.estimator = detail::parse_estimator(root.sub("estimator"));
  if (c.estimator.kind == EstimatorKind::Abcde && c.model.name != "death")
    root.fail("estimator.kind", "abcde is available for the death model only");
  if (!root.has("seed")) root.fail("seed", "a master seed is required (runs are never seeded from the clock)");
  c.seed = root.get<std::uint64_t>("seed");
  c.workers = root.get<std::size_t>("workers", 1);
  if (c.workers == 0) root.fail("workers", "must be at least 1");
  c.output = root.get<std::string>("output", "out");

  {
    auto s = root.sub("grid");
    c.grid.spacing = s.get<double>("spacing", c.grid.spacing);
    c.grid.max_points = s.get<std::size_t>("max_points", c.grid.max_points);
    if (!(c.grid.spacing > 0)) s.fail("spacing", "must be positive");
    s.finish();
  }
  {
    auto s = root.sub("mcmc");
    c.mcmc.chain_length = s.get<std::size_t>("chain_length", c.mcmc.chain_length);
    c.mcmc.burn_in = s.get<std::size_t>("burn_in", c.mcmc.burn_in);
    if (s.has("scale")) c.mcmc.scale = detail::number_list(s, "scale", c.space.dimension);
    c.mcmc.smoothing_bins = s.get<double>("smoothing_bins", 0.0);
    if (c.mcmc.chain_length <= c.mcmc.burn_in) s.fail("chain_length", "must exceed burn_in");
    if (!(c.mcmc.smoothing_bins >= 0)) s.fail("smoothing_bins", "must be non-negative");
    s.finish();
  }
  {
    auto s = root.sub("windows");
    c.windows.top = s.get<std::size_t>("top", c.windows.top);
    c.windows.bootstrap = s.get<std::size_t>("bootstrap", c.windows.bootstrap);
    try {
      c.windows.mode = parse_bootstrap_mode(s.get<std::string>("mode", "candidates"));
    } catch (const ConfigError& e) {
      s.fail("mode", e.what());
    }
    if (s.has("rescore")) {
      auto r = s.sub("rescore");
      c.windows.rescore = detail::parse_budget(r, c.windows.rescore);
      r.finish();
    }
    c.windows.trace = s.get<std::string>("trace", "");
    if (c.windows.top == 0) s.fail("top", "must be at least 1");
    if (c.windows.bootstrap == 0) s.fail("bootstrap", "must be at least 1");
    s.finish();
  }
  {
    auto s = root.sub("evaluate");
    c.evaluate.designs = detail::parse_designs(s, "designs", c.space.dimension);
    c.evaluate.budget = detail::parse_budget(s, c.evaluate.budget);
    s.finish();
  }
  root.finish();

  try {
    ConstraintSet cs{c.space.lower, c.space.upper, c.space.min_spacing, c.space.strictly_increasing};
    validate(cs);
    detail::check_feasible(cs);
  } catch (const Error& e) {
    throw ConfigError(std::string("space: ") + e.what());
  }
  return c;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  auto& m = j["model"];
  m["name"] = c.model.name;
  if (c.model.name == "death") {
    m["population"] = c.model.death.population;
    m["prior_log_mean"] = c.model.death.prior_log_mean;
    m["prior_log_variance"] = c.model.death.prior_log_variance;
  } else if (c.model.name == "pk") {
    m["dose_constant"] = c.model.pk.dose_constant;
    m["sigma2_prop"] = c.model.pk.sigma2_prop;
    m["sigma2_add"] = c.model.pk.sigma2_add;
    m["prior_log_mean"] = c.model.pk.prior_log_mean;
    m["prior_log_variance"] = c.model.pk.prior_log_variance;
  } else if (c.model.name == "logistic") {
    m["rows"] = c.model.logistic.rows;
    m["prior_lower"] = c.model.logistic.prior_lower;
    m["prior_upper"] = c.model.logistic.prior_upper;
  } else {
    m["prior_variance"] = c.model.conjugate.prior_variance;
    m["noise_variance"] = c.model.conjugate.noise_variance;
    m["coupling"] = c.model.conjugate.coupling;
    m["nuisance_variance"] = c.model.conjugate.nuisance_variance;
  }
  auto& s = j["space"];
  s["dimension"] = c.space.dimension;
  s["lower"] = c.space.lower;
  s["upper"] = c.space.upper;
  s["min_spacing"] = c.space.min_spacing;
  s["strictly_increasing"] = c.space.strictly_increasing;
  auto& sc = j["schedule"];
  sc["generations"] = c.schedule.generations;
  sc["retain"] = c.schedule.retain;
  sc["offspring"] = c.schedule.offspring;
  auto& scale = sc["scale"] = nlohmann::ordered_json::array();
  for (const auto& v : c.schedule.scale) {
    const bool flat = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    if (flat && !v.empty())
      scale.push_back(v.front());
    else
      scale.push_back(v);
  }
  sc["initial_count"] = c.schedule.initial_count;
  sc["boundary_prob"] = c.schedule.boundary_prob;
  auto& a = j["acceptance"];
  a["rule"] = to_string(c.acceptance.kind);
  if (c.acceptance.threshold) a["threshold"] = *c.acceptance.threshold;
  a["population_ceiling"] = c.acceptance.population_ceiling;
  j["kernel"] = std::string(to_string(c.kernel));
  auto& e = j["estimator"];
  e["kind"] = to_string(c.estimator.kind);
  e["b_outer"] = c.estimator.b_outer;
  e["b_inner"] = c.estimator.b_inner;
  e["bank_size"] = c.estimator.bank_size;
  if (c.estimator.tolerance) e["tolerance"] = *c.estimator.tolerance;
  e["discrepancy"] = c.estimator.discrepancy;
  e["grid_cells"] = c.estimator.grid_cells;
  e["grid_mass"] = c.estimator.grid_mass;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  j["grid"] = {{"spacing", c.grid.spacing}, {"max_points", c.grid.max_points}};
  auto& mc = j["mcmc"];
  mc["chain_length"] = c.mcmc.chain_length;
  mc["burn_in"] = c.mcmc.burn_in;
  if (!c.mcmc.scale.empty()) mc["scale"] = c.mcmc.scale;
  mc["smoothing_bins"] = c.mcmc.smoothing_bins;
  auto budget = [](const Budget& b) {
    return nlohmann::ordered_json{{"b_outer", b.b_outer}, {"b_inner", b.b_inner}, {"replicates", b.replicates}};
  };
  auto& w = j["windows"];
  w["top"] = c.windows.top;
  w["bootstrap"] = c.windows.bootstrap;
  w["mode"] = to_string(c.windows.mode);
  w["rescore"] = budget(c.windows.rescore);
  if (!c.windows.trace.empty()) w["trace"] = c.windows.trace;
  auto& ev = j["evaluate"];
  ev = budget(c.evaluate.budget);
  auto& ds = ev["designs"] = nlohmann::ordered_json::array();
  for (const auto& d : c.evaluate.designs) ds.push_back({{"name", d.name}, {"values", d.values}});
  return j;
}

/// Applies `key=value` overrides to a parsed document. The key is a dotted
/// path; the value is read as JSON when it parses, otherwise as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    if (!node->is_object()) throw ConfigError("override '" + key + "': '" + part + "' is not inside a section");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

inline nlohmann::json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  auto doc = read_config_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

inline ConstraintSet constraint_set(const RunConfig& c) {
  return ConstraintSet{c.space.lower, c.space.upper, c.space.min_spacing, c.space.strictly_increasing};
}

}  // namespace insh
