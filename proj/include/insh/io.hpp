#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "insh/baselines.hpp"
#include "insh/errors.hpp"
#include "insh/insh.hpp"
#include "insh/windows.hpp"

namespace insh {

// ---------------------------------------------------------------------------
// Number formatting: shortest representation that round-trips exactly.

inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("could not format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("not a number: '" + std::string(s) + "'");
  return x;
}

template <class Int>
Int parse_integer(std::string_view s) {
  Int x{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("not an integer: '" + std::string(s) + "'");
  return x;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::string join_values(const std::vector<double>& v, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace CSV: one record per evaluated design, append-only.

struct TraceRecord {
  int generation = 0;
  std::uint64_t design_id = 0;
  std::uint64_t parent_id = 0;
  std::vector<double> values;
  double utility = 0.0;
  double std_error = 0.0;
  std::size_t b_outer = 0;
  std::size_t b_inner = 0;
  std::uint64_t seed = 0;
  double eval_seconds = 0.0;
  bool accepted = false;
  bool failed = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline constexpr std::string_view kTraceHeader =
    "generation,design_id,parent_id,values,utility,std_error,b_outer,b_inner,seed,eval_seconds,accepted,failed";

inline std::string to_csv_line(const TraceRecord& r) {
  std::string s;
  s += std::to_string(r.generation) + ',' + std::to_string(r.design_id) + ',' + std::to_string(r.parent_id) + ',';
  s += join_values(r.values) + ',';
  s += format_double(r.utility) + ',' + format_double(r.std_error) + ',';
  s += std::to_string(r.b_outer) + ',' + std::to_string(r.b_inner) + ',' + std::to_string(r.seed) + ',';
  s += format_double(r.eval_seconds) + ',' + (r.accepted ? '1' : '0') + ',' + (r.failed ? '1' : '0');
  return s;
}

inline TraceRecord parse_trace_line(std::string_view line) {
  const auto f = split(line, ',');
  if (f.size() != 12) throw SchemaError("trace record has " + std::to_string(f.size()) + " fields, expected 12");
  TraceRecord r;
  r.generation = parse_integer<int>(f[0]);
  r.design_id = parse_integer<std::uint64_t>(f[1]);
  r.parent_id = parse_integer<std::uint64_t>(f[2]);
  if (!f[3].empty())
    for (auto v : split(f[3], ';')) r.values.push_back(parse_double(v));
  r.utility = parse_double(f[4]);
  r.std_error = parse_double(f[5]);
  r.b_outer = parse_integer<std::size_t>(f[6]);
  r.b_inner = parse_integer<std::size_t>(f[7]);
  r.seed = parse_integer<std::uint64_t>(f[8]);
  r.eval_seconds = parse_double(f[9]);
  r.accepted = parse_integer<int>(f[10]) != 0;
  r.failed = parse_integer<int>(f[11]) != 0;
  return r;
}

inline std::vector<TraceRecord> records_of(const GenerationRecord& g) {
  const std::set<std::uint64_t> accepted(g.accepted_ids.begin(), g.accepted_ids.end());
  std::vector<TraceRecord> out;
  out.reserve(g.scored.size());
  for (const auto& s : g.scored) {
    TraceRecord r;
    r.generation = s.generation;
    r.design_id = s.design.id;
    r.parent_id = s.design.parent;
    r.values = s.design.values;
    r.utility = s.utility.value;
    r.std_error = s.utility.std_error;
    r.b_outer = s.utility.b_outer;
    r.b_inner = s.utility.b_inner;
    r.seed = s.utility.seed;
    r.eval_seconds = s.eval_seconds;
    r.accepted = accepted.count(s.design.id) > 0;
    r.failed = s.failed;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TraceRecord> records_of(const RunTrace& t) {
  std::vector<TraceRecord> out;
  for (const auto& g : t.generations) {
    auto rs = records_of(g);
    out.insert(out.end(), rs.begin(), rs.end());
  }
  return out;
}

/// Appends records to a trace file, writing the header when the file is new
/// or empty. Every call flushes complete lines only.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path, bool truncate = true) {
    const bool fresh = truncate || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, truncate ? std::ios::out | std::ios::trunc : std::ios::out | std::ios::app);
    if (!out_) throw Error("cannot open trace file " + path.string());
    if (fresh) {
      out_ << kTraceHeader << '\n';
      out_.flush();
    }
  }

  void append(const std::vector<TraceRecord>& records) {
    std::string block;
    for (const auto& r : records) block += to_csv_line(r) + '\n';
    out_ << block;
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
  TraceWriter w(path, true);
  w.append(records);
}

/// Reads a trace. A trailing line without a newline is an in-progress write
/// and is ignored, so readers of a live file see a prefix of the records.
inline std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<TraceRecord> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    if (header) {
      if (line != kTraceHeader)
        throw SchemaError("trace header does not match schema v1: '" + std::string(line) + "'");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    out.push_back(parse_trace_line(line));
  }
  if (header) throw SchemaError("trace file has no header");
  return out;
}

/// Rebuilds the (generation, design id) memo used to resume a run.
inline std::map<std::pair<int, std::uint64_t>, ScoredDesign> resume_memo(const std::vector<TraceRecord>& records) {
  std::map<std::pair<int, std::uint64_t>, ScoredDesign> memo;
  for (const auto& r : records) {
    ScoredDesign s;
    s.design = Design{r.values, r.design_id, r.parent_id, r.generation};
    s.utility = UtilityEstimate{r.utility, r.std_error, r.b_outer, r.b_inner, r.seed, 0};
    s.generation = r.generation;
    s.failed = r.failed;
    s.eval_seconds = r.eval_seconds;
    memo[{r.generation, r.design_id}] = s;
  }
  return memo;
}

inline std::vector<ScoredDesign> scored_from_records(const std::vector<TraceRecord>& records) {
  std::vector<ScoredDesign> out;
  for (const auto& [key, s] : resume_memo(records)) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Result JSON. Only deterministic quantities: no wall-clock fields, so equal
// configs and seeds give byte-identical files.

inline nlohmann::ordered_json scored_to_json(const ScoredDesign& s) {
  nlohmann::ordered_json j;
  j["design_id"] = s.design.id;
  j["generation"] = s.generation;
  j["values"] = s.design.values;
  j["utility"] = s.utility.value;
  j["std_error"] = s.utility.std_error;
  j["b_outer"] = s.utility.b_outer;
  j["b_inner"] = s.utility.b_inner;
  j["seed"] = s.utility.seed;
  return j;
}

inline nlohmann::ordered_json result_to_json(const InshResult& r, const std::string& model, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["command"] = "insh";
  j["model"] = model;
  j["seed"] = seed;
  j["best"] = scored_to_json(r.best);
  j["evaluated"] = r.trace.evaluated();
  auto& gens = j["generations"] = nlohmann::ordered_json::array();
  for (const auto& g : r.trace.generations) {
    std::size_t failed = 0;
    for (const auto& s : g.scored) failed += s.failed;
    nlohmann::ordered_json gj;
    gj["generation"] = g.generation;
    gj["evaluated"] = g.scored.size();
    gj["failed"] = failed;
    gj["accepted"] = g.accepted_ids.size();
    gj["skipped_parents"] = g.skipped_parents;
    gj["best_design_id"] = g.best_so_far.design.id;
    gj["best_utility"] = g.best_so_far.utility.value;
    gens.push_back(std::move(gj));
  }
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Plot data: plain CSV tables.

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Type-7 (linear interpolation) quantiles.
inline FiveNumber five_number(std::vector<double> xs) {
  if (xs.empty()) throw InputError("five_number: no values");
  std::sort(xs.begin(), xs.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(xs.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  return {xs.front(), q(0.25), q(0.5), q(0.75), xs.back()};
}

enum class PlotKind { ConvergenceBoxplot, CoordinateBoxplot, SurfaceHeatmap, WindowsErrorbar, UtilityComparison };

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "convergence-boxplot") return PlotKind::ConvergenceBoxplot;
  if (s == "coordinate-boxplot") return PlotKind::CoordinateBoxplot;
  if (s == "surface-heatmap") return PlotKind::SurfaceHeatmap;
  if (s == "windows-errorbar") return PlotKind::WindowsErrorbar;
  if (s == "utility-comparison") return PlotKind::UtilityComparison;
  throw InputError("unknown plot kind '" + s + "'");
}

inline std::string five_number_csv(const FiveNumber& f) {
  return format_double(f.min) + ',' + format_double(f.q1) + ',' + format_double(f.median) + ',' +
         format_double(f.q3) + ',' + format_double(f.max);
}

/// Per-generation box-plot rows of the estimated utilities.
inline std::string convergence_boxplot_csv(const RunTrace& trace) {
  if (trace.generations.empty()) throw InputError("plot data: empty trace");
  std::string s = "generation,count,min,q1,median,q3,max\n";
  for (const auto& g : trace.generations) {
    std::vector<double> us;
    for (const auto& sd : g.scored)
      if (!sd.failed) us.push_back(sd.utility.value);
    if (us.empty()) continue;
    s += std::to_string(g.generation) + ',' + std::to_string(us.size()) + ',' + five_number_csv(five_number(us)) + '\n';
  }
  return s;
}

/// Per-generation, per-coordinate box-plot rows of the design values.
inline std::string coordinate_boxplot_csv(const RunTrace& trace) {
  if (trace.generations.empty()) throw InputError("plot data: empty trace");
  std::string s = "generation,coordinate,min,q1,median,q3,max\n";
  for (const auto& g : trace.generations) {
    if (g.scored.empty()) continue;
    const std::size_t dim = g.scored.front().design.dimension();
    for (std::size_t c = 0; c < dim; ++c) {
      std::vector<double> xs;
      for (const auto& sd : g.scored) xs.push_back(sd.design.values[c]);
      s += std::to_string(g.generation) + ',' + std::to_string(c + 1) + ',' + five_number_csv(five_number(xs)) + '\n';
    }
  }
  return s;
}

/// Grid surface: one row per lattice point, coordinates then utility.
inline std::string surface_csv(const std::vector<ScoredDesign>& surface) {
  if (surface.empty()) throw InputError("plot data: empty surface");
  const std::size_t dim = surface.front().design.dimension();
  std::string s;
  for (std::size_t c = 0; c < dim; ++c) s += "x" + std::to_string(c + 1) + ',';
  s += "utility,std_error\n";
  for (const auto& sd : surface) {
    for (double v : sd.design.values) s += format_double(v) + ',';
    s += format_double(sd.utility.value) + ',' + format_double(sd.utility.std_error) + '\n';
  }
  return s;
}

/// Window ranges with the optimum's value per coordinate (error-bar plot).
inline std::string windows_csv(const SamplingWindows& w, const Design& optimum) {
  std::string s = "coordinate,low,high,optimum,candidates\n";
  for (std::size_t c = 0; c < w.dimension(); ++c)
    s += std::to_string(c + 1) + ',' + format_double(w.low[c]) + ',' + format_double(w.high[c]) + ',' +
         format_double(optimum.values.at(c)) + ',' + join_values(w.candidates[c]) + '\n';
  return s;
}

struct NamedReplicates {
  std::string name;
  std::vector<double> utilities;
};

/// Long-format replicate utilities for side-by-side box plots.
inline std::string comparison_csv(const std::vector<NamedReplicates>& groups) {
  std::string s = "design,replicate,utility\n";
  for (const auto& g : groups)
    for (std::size_t r = 0; r < g.utilities.size(); ++r)
      s += g.name + ',' + std::to_string(r + 1) + ',' + format_double(g.utilities[r]) + '\n';
  return s;
}

inline std::string emit_plot_data(const RunTrace& trace, PlotKind kind) {
  switch (kind) {
    case PlotKind::ConvergenceBoxplot: return convergence_boxplot_csv(trace);
    case PlotKind::CoordinateBoxplot: return coordinate_boxplot_csv(trace);
    default: throw InputError("plot kind needs a surface, windows or replicate table rather than a trace");
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace insh
