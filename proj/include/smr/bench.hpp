#pragma once

// Experiment harness: sweeps function counts over one generated corpus,
// repeats each point, aggregates medians, judges the scaling trends, and
// renders the results as CSV and as a fixed-width table.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "smr/corpus.hpp"
#include "smr/error.hpp"
#include "smr/faas_runtime.hpp"
#include "smr/mapreduce.hpp"
#include "smr/object_store.hpp"
#include "smr/orchestrator.hpp"
#include "smr/wordcount.hpp"

namespace smr {

enum class StoreKind { memory, filesystem };

struct SweepConfig {
  std::vector<std::size_t> func_counts{1, 2, 5, 10};
  CorpusSpec corpus;
  std::size_t repeats = 3;
  /// 0 = fully parallel (cap equals the phase's task count).
  std::size_t concurrency_cap = 0;
  /// true: M = R = n per point. false: every (M, R) pair of func_counts.
  bool tie_mr = true;
  /// One discarded job per point before the timed repeats.
  bool warmup = true;
  RuntimeOptions runtime;
  FunctionSpec limits;
  StoreKind store = StoreKind::memory;
  std::filesystem::path store_root;  // filesystem store only

  void validate() const {
    if (func_counts.empty()) throw Error(Errc::InvalidArgument, "func_counts is empty");
    for (std::size_t i = 0; i < func_counts.size(); ++i) {
      if (func_counts[i] == 0) throw Error(Errc::InvalidArgument, "func_counts must be >= 1");
      if (i > 0 && func_counts[i] <= func_counts[i - 1])
        throw Error(Errc::InvalidArgument, "func_counts must be strictly increasing");
    }
    if (repeats == 0) throw Error(Errc::InvalidArgument, "repeats must be >= 1");
    if (store == StoreKind::filesystem && store_root.empty())
      throw Error(Errc::InvalidArgument, "filesystem store needs a root directory");
    corpus.validate();
  }
};

struct BenchRow {
  std::size_t func_num = 0;
  std::size_t num_mappers = 0;
  std::size_t num_reducers = 0;
  double avg_map_ms = 0.0;
  double avg_reduce_ms = 0.0;
  double avg_map_mem_mb = 0.0;
  double avg_reduce_mem_mb = 0.0;
  double map_pct = 0.0;
  double reduce_pct = 0.0;
  double wall_clock_ms = 0.0;
};

/// One timed job inside a sweep.
struct JobSample {
  std::string job_id;
  std::size_t num_mappers = 0;
  std::size_t num_reducers = 0;
  std::size_t repeat = 0;
  double avg_map_ms = 0.0;
  double avg_reduce_ms = 0.0;
  double avg_map_mem_mb = 0.0;
  double avg_reduce_mem_mb = 0.0;
  double wall_clock_ms = 0.0;
  std::uint64_t result_checksum = 0;  // FNV-1a 64 of result.tsv
};

struct PairDelta {
  std::size_t from = 0;
  std::size_t to = 0;
  double map_ms = 0.0;  // value(from) - value(to)
  double reduce_ms = 0.0;
  double map_mem_mb = 0.0;
  double reduce_mem_mb = 0.0;
};

struct TrendVerdict {
  bool time_monotone_decreasing = true;
  bool mem_monotone_decreasing = true;
  bool diminishing_returns = true;
  std::vector<PairDelta> details;
};

struct SweepResult {
  std::vector<BenchRow> rows;
  TrendVerdict verdict;
  std::vector<JobSample> samples;
  std::uint64_t corpus_tokens = 0;
  std::shared_ptr<ObjectStore> store;
};

/// Median; the mean of the two middle values for even sizes.
inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(Errc::InvalidArgument, "median of empty sequence");
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(v.begin(), mid);
  return (lo + hi) / 2.0;
}

/// Strict decrease of time (map and reduce) and memory (map and reduce)
/// across consecutive rows; diminishing returns compares the first and last
/// adjacent drops in avg_map_ms and needs at least two distinct pairs.
inline TrendVerdict evaluate_trends(std::span<const BenchRow> rows) {
  TrendVerdict v;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[i + 1];
    PairDelta d{a.func_num,
                b.func_num,
                a.avg_map_ms - b.avg_map_ms,
                a.avg_reduce_ms - b.avg_reduce_ms,
                a.avg_map_mem_mb - b.avg_map_mem_mb,
                a.avg_reduce_mem_mb - b.avg_reduce_mem_mb};
    if (!(d.map_ms > 0.0 && d.reduce_ms > 0.0)) v.time_monotone_decreasing = false;
    if (!(d.map_mem_mb > 0.0 && d.reduce_mem_mb > 0.0)) v.mem_monotone_decreasing = false;
    v.details.push_back(d);
  }
  if (v.details.size() >= 2)
    v.diminishing_returns = v.details.front().map_ms > v.details.back().map_ms;
  return v;
}

inline std::uint64_t checksum(std::string_view bytes) { return fnv1a64(bytes); }

namespace detail {

inline std::string point_label(std::size_t m, std::size_t r, bool tied) {
  return tied ? "n" + std::to_string(m)
              : "m" + std::to_string(m) + "-r" + std::to_string(r);
}

inline BenchRow aggregate(std::size_t m, std::size_t r, std::span<const JobSample> reps) {
  auto med = [&](double JobSample::*field) {
    std::vector<double> v;
    for (const auto& s : reps) v.push_back(s.*field);
    return median(std::move(v));
  };
  BenchRow row;
  row.func_num = m;
  row.num_mappers = m;
  row.num_reducers = r;
  row.avg_map_ms = med(&JobSample::avg_map_ms);
  row.avg_reduce_ms = med(&JobSample::avg_reduce_ms);
  row.avg_map_mem_mb = med(&JobSample::avg_map_mem_mb);
  row.avg_reduce_mem_mb = med(&JobSample::avg_reduce_mem_mb);
  row.wall_clock_ms = med(&JobSample::wall_clock_ms);
  if (row.avg_map_ms + row.avg_reduce_ms > 0.0) {
    auto pct = compute_workload_pct(row.avg_map_ms, row.avg_reduce_ms);
    row.map_pct = pct.map_pct;
    row.reduce_pct = pct.reduce_pct;
  }
  return row;
}

}  // namespace detail

/// Runs every sweep point strictly in sequence. Each point regenerates the
/// corpus under its own prefix and every job gets a fresh job_id, so no two
/// points share a key. A failed job aborts the sweep with JobFailed.
inline SweepResult run_sweep(const SweepConfig& config,
                             const std::function<void(const JobSample&)>& progress = {}) {
  config.validate();
  SweepResult out;
  if (config.store == StoreKind::filesystem)
    out.store = std::make_shared<FileStore>(config.store_root);
  else
    out.store = std::make_shared<MemoryStore>();

  std::vector<std::pair<std::size_t, std::size_t>> points;
  for (auto m : config.func_counts) {
    if (config.tie_mr) {
      points.emplace_back(m, m);
    } else {
      for (auto r : config.func_counts) points.emplace_back(m, r);
    }
  }

  for (auto [m, r] : points) {
    const std::string label = detail::point_label(m, r, config.tie_mr);
    Runtime runtime(out.store, config.runtime);
    register_wordcount(runtime, config.limits);
    Corpus corpus = generate_corpus(config.corpus, *out.store, label + "-corpus");
    out.corpus_tokens = corpus.total_tokens;

    auto job = [&](const std::string& job_id) {
      JobConfig jc;
      jc.job_id = job_id;
      jc.num_mappers = m;
      jc.num_reducers = r;
      jc.concurrency_cap = config.concurrency_cap;
      jc.manifest = corpus.manifest;
      try {
        return run_job(jc, runtime);
      } catch (const JobFailed& e) {
        throw JobFailed(Errc::JobFailed, "sweep point " + label + ": " + e.what(), e.metrics());
      }
    };

    if (config.warmup) job(label + "-warmup");

    std::vector<JobSample> reps;
    for (std::size_t k = 0; k < config.repeats; ++k) {
      JobSample s;
      s.job_id = label + "-rep" + std::to_string(k);
      JobMetrics jm = job(s.job_id);
      s.num_mappers = m;
      s.num_reducers = r;
      s.repeat = k;
      s.avg_map_ms = jm.avg_map_ms;
      s.avg_reduce_ms = jm.avg_reduce_ms;
      s.avg_map_mem_mb = jm.avg_map_mem_mb;
      s.avg_reduce_mem_mb = jm.avg_reduce_mem_mb;
      s.wall_clock_ms = jm.wall_clock_ms;
      s.result_checksum = checksum(out.store->get(keys::in_jobs(keys::result(s.job_id))));
      if (progress) progress(s);
      reps.push_back(s);
    }
    out.rows.push_back(detail::aggregate(m, r, reps));
    out.samples.insert(out.samples.end(), reps.begin(), reps.end());
  }

  if (config.tie_mr) {
    out.verdict = evaluate_trends(out.rows);
  } else {
    std::vector<BenchRow> diagonal;
    for (const auto& row : out.rows)
      if (row.num_mappers == row.num_reducers) diagonal.push_back(row);
    out.verdict = evaluate_trends(diagonal);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kBenchCsvHeader =
    "func_num,avg_map_ms,avg_reduce_ms,avg_map_mem_mb,avg_reduce_mem_mb,map_pct,reduce_pct,"
    "wall_clock_ms";
inline constexpr std::string_view kCrossCsvHeader =
    "num_mappers,num_reducers,avg_map_ms,avg_reduce_ms,avg_map_mem_mb,avg_reduce_mem_mb,"
    "map_pct,reduce_pct,wall_clock_ms";

namespace detail {

inline std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline void append_metrics(std::string& line, const BenchRow& r) {
  for (double x : {r.avg_map_ms, r.avg_reduce_ms, r.avg_map_mem_mb, r.avg_reduce_mem_mb,
                   r.map_pct, r.reduce_pct, r.wall_clock_ms}) {
    line += ',';
    line += fixed2(x);
  }
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw Error(Errc::ParseError,
                "csv line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
  return value;
}

}  // namespace detail

inline std::string format_csv(std::span<const BenchRow> rows) {
  std::string out(kBenchCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.func_num);
    detail::append_metrics(out, r);
    out += '\n';
  }
  return out;
}

inline std::string format_cross_csv(std::span<const BenchRow> rows) {
  std::string out(kCrossCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.num_mappers) + "," + std::to_string(r.num_reducers);
    detail::append_metrics(out, r);
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Errc::IoError, "write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Writes the bench CSV: fixed header, one row per point, two decimals.
inline void emit_csv(std::span<const BenchRow> rows, const std::filesystem::path& path) {
  if (rows.empty()) throw Error(Errc::InvalidArgument, "no rows to emit");
  write_file(path, format_csv(rows));
}

/// Parses the bench CSV; the header must match exactly.
inline std::vector<BenchRow> parse_csv(std::string_view text) {
  auto lines = detail::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != kBenchCsvHeader)
    throw Error(Errc::ParseError, "unexpected bench csv header");
  std::vector<BenchRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = detail::split(lines[i], ',');
    if (f.size() != 8)
      throw Error(Errc::ParseError, "csv line " + std::to_string(i + 1) + ": expected 8 fields");
    BenchRow r;
    r.func_num = detail::parse_number<std::size_t>(f[0], i + 1);
    r.num_mappers = r.num_reducers = r.func_num;
    double* dst[] = {&r.avg_map_ms,        &r.avg_reduce_ms, &r.avg_map_mem_mb,
                     &r.avg_reduce_mem_mb, &r.map_pct,       &r.reduce_pct,
                     &r.wall_clock_ms};
    for (std::size_t k = 0; k < 7; ++k) *dst[k] = detail::parse_number<double>(f[k + 1], i + 1);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Text rendering

/// Results table: function count,
/// then mapper/reducer execution time and mapper/reducer RAM, two decimals.
inline std::string render_table(std::span<const BenchRow> rows) {
  static constexpr std::string_view kTime = "Average Execution Time /ms";
  static constexpr std::string_view kRam = "Average RAM Usage /MB";
  static constexpr std::string_view kFunc = "Func Num";

  std::vector<std::array<std::string, 5>> cells;
  std::size_t w0 = kFunc.size();
  std::size_t w = 12;
  for (const auto& r : rows) {
    cells.push_back({std::to_string(r.func_num), detail::fixed2(r.avg_map_ms),
                     detail::fixed2(r.avg_reduce_ms), detail::fixed2(r.avg_map_mem_mb),
                     detail::fixed2(r.avg_reduce_mem_mb)});
    w0 = std::max(w0, cells.back()[0].size());
    for (std::size_t k = 1; k < 5; ++k) w = std::max(w, cells.back()[k].size());
  }
  const std::size_t group = 2 * (w + 2) + 1;

  auto pad = [](std::string_view s, std::size_t width, char align) {
    std::size_t gap = width > s.size() ? width - s.size() : 0;
    std::size_t left = align == 'r' ? gap : align == 'c' ? gap / 2 : 0;
    return std::string(left, ' ') + std::string(s) + std::string(gap - left, ' ');
  };
  auto rule = [&](bool split_groups) {
    std::string s = "+" + std::string(w0 + 2, '-');
    for (int g = 0; g < 2; ++g) {
      s += "+";
      if (split_groups)
        s += std::string(w + 2, '-') + "+" + std::string(w + 2, '-');
      else
        s += std::string(group, '-');
    }
    return s + "+\n";
  };

  std::string out = rule(false);
  out += "| " + pad("", w0, 'l') + " |" + pad(kTime, group, 'c') + "|" + pad(kRam, group, 'c') + "|\n";
  out += "| " + pad(kFunc, w0, 'l') + " " + rule(true).substr(w0 + 3);
  out += "| " + pad("", w0, 'l') + " |";
  for (int g = 0; g < 2; ++g)
    out += " " + pad("Mapper", w, 'c') + " | " + pad("Reducer", w, 'c') + " |";
  out += "\n" + rule(true);
  for (const auto& c : cells) {
    out += "| " + pad(c[0], w0, 'r') + " |";
    for (std::size_t k = 1; k < 5; ++k) out += " " + pad(c[k], w, 'r') + " |";
    out += "\n";
  }
  out += rule(true);
  return out;
}

/// Workload split and wall-clock per point, with the split's definition.
inline std::string render_workload(std::span<const BenchRow> rows) {
  std::string out = "Workload percentage (" + std::string(kWorkloadPctDefinition) + ")\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s  %10s  %10s  %14s\n", "Func Num", "Mapper %",
                "Reducer %", "Wall clock /ms");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%8zu  %10.2f  %10.2f  %14.2f\n", r.func_num, r.map_pct,
                  r.reduce_pct, r.wall_clock_ms);
    out += buf;
  }
  return out;
}

inline std::string render_verdict(const TrendVerdict& v) {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::string out;
  out += std::string("time strictly decreasing:   ") + yn(v.time_monotone_decreasing) + "\n";
  out += std::string("memory strictly decreasing: ") + yn(v.mem_monotone_decreasing) + "\n";
  out += std::string("diminishing returns (map):  ") + yn(v.diminishing_returns) + "\n";
  char buf[200];
  for (const auto& d : v.details) {
    std::snprintf(buf, sizeof buf,
                  "  %zu -> %zu: map %+.2f ms, reduce %+.2f ms, map mem %+.2f MB, reduce mem %+.2f MB\n",
                  d.from, d.to, -d.map_ms, -d.reduce_ms, -d.map_mem_mb, -d.reduce_mem_mb);
    out += buf;
  }
  return out;
}

}  // namespace smr
