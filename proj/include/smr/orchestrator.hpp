#pragma once

// The client side of a job: plan, trigger mappers, wait for every completion
// signal, trigger reducers, merge part files, and assemble metrics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smr/error.hpp"
#include "smr/faas_runtime.hpp"
#include "smr/mapreduce.hpp"
#include "smr/wordcount.hpp"

namespace smr {

inline constexpr std::string_view kWorkloadPctDefinition =
    "map_pct = 100*avg_map_ms/(avg_map_ms+avg_reduce_ms); "
    "reduce_pct = 100*avg_reduce_ms/(avg_map_ms+avg_reduce_ms); "
    "averages are means of per-invocation exec_time_ms";

struct JobConfig {
  std::string job_id;
  std::size_t num_mappers = 1;
  std::size_t num_reducers = 1;
  /// Per-phase cap on concurrent invocations; 0 runs every task of a phase
  /// at once.
  std::size_t concurrency_cap = 0;
  std::vector<std::string> manifest;
  bool cleanup_intermediates = false;
  std::string map_function = std::string(kMapFunction);
  std::string reduce_function = std::string(kReduceFunction);

  void validate() const {
    if (!is_valid_key(job_id) || job_id.find('/') != std::string::npos)
      throw Error(Errc::InvalidArgument, "job_id must be a single key segment: '" + job_id + "'");
    if (num_mappers == 0 || num_reducers == 0)
      throw Error(Errc::InvalidArgument, "mapper and reducer counts must be >= 1");
  }

  std::size_t cap_for(std::size_t tasks) const {
    return concurrency_cap == 0 ? std::max<std::size_t>(tasks, 1) : concurrency_cap;
  }
};

struct JobMetrics {
  std::vector<InvocationRecord> map_records;
  std::vector<InvocationRecord> reduce_records;
  double avg_map_ms = 0.0;
  double avg_reduce_ms = 0.0;
  double avg_map_mem_mb = 0.0;
  double avg_reduce_mem_mb = 0.0;
  double map_pct = 0.0;
  double reduce_pct = 0.0;
  double wall_clock_ms = 0.0;
};

struct WorkloadPct {
  double map_pct;
  double reduce_pct;
};

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Each phase's share of avg_map_ms + avg_reduce_ms, in percent, rounded to
/// two decimals.
inline WorkloadPct compute_workload_pct(double avg_map_ms, double avg_reduce_ms) {
  if (!(avg_map_ms >= 0.0) || !(avg_reduce_ms >= 0.0))
    throw Error(Errc::InvalidArgument, "phase averages must be non-negative");
  double total = avg_map_ms + avg_reduce_ms;
  if (total == 0.0) throw Error(Errc::DegenerateJob, "both phase averages are zero");
  return {round2(100.0 * avg_map_ms / total), round2(100.0 * avg_reduce_ms / total)};
}

/// MapPhaseFailed / ReducePhaseFailed, carrying whatever metrics were gathered.
class JobFailed : public Error {
 public:
  JobFailed(Errc code, const std::string& message, JobMetrics metrics)
      : Error(code, message), metrics_(std::move(metrics)) {}
  const JobMetrics& metrics() const { return metrics_; }

 private:
  JobMetrics metrics_;
};

inline nlohmann::ordered_json job_metrics_json(const JobConfig& config,
                                               const JobMetrics& m,
                                               std::string_view status = "Succeeded") {
  nlohmann::ordered_json j;
  j["job_id"] = config.job_id;
  j["status"] = status;
  j["config"] = {{"num_mappers", config.num_mappers},
                 {"num_reducers", config.num_reducers},
                 {"concurrency_cap", config.concurrency_cap},
                 {"num_files", config.manifest.size()},
                 {"cleanup_intermediates", config.cleanup_intermediates},
                 {"map_function", config.map_function},
                 {"reduce_function", config.reduce_function}};
  j["avg_map_ms"] = m.avg_map_ms;
  j["avg_reduce_ms"] = m.avg_reduce_ms;
  j["avg_map_mem_mb"] = m.avg_map_mem_mb;
  j["avg_reduce_mem_mb"] = m.avg_reduce_mem_mb;
  j["map_pct"] = m.map_pct;
  j["reduce_pct"] = m.reduce_pct;
  j["workload_pct_definition"] = kWorkloadPctDefinition;
  j["wall_clock_ms"] = m.wall_clock_ms;
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : m.map_records) records.push_back(to_json(r));
  for (const auto& r : m.reduce_records) records.push_back(to_json(r));
  j["invocations"] = std::move(records);
  return j;
}

namespace detail {

inline void phase_averages(std::span<const InvocationRecord> records, double& avg_ms,
                           double& avg_mem) {
  avg_ms = avg_mem = 0.0;
  if (records.empty()) return;
  for (const auto& r : records) {
    avg_ms += r.exec_time_ms;
    avg_mem += r.peak_modeled_mem_mb;
  }
  avg_ms /= static_cast<double>(records.size());
  avg_mem /= static_cast<double>(records.size());
}

inline const InvocationRecord* first_failure(std::span<const InvocationRecord> records) {
  for (const auto& r : records)
    if (!r.succeeded()) return &r;
  return nullptr;
}

inline void write_job_logs(ObjectStore& store, const JobConfig& config, const JobMetrics& m,
                           std::string_view status) {
  std::vector<InvocationRecord> all = m.map_records;
  all.insert(all.end(), m.reduce_records.begin(), m.reduce_records.end());
  store.put(keys::in_jobs(keys::invocation_log(config.job_id)), invocation_log_jsonl(all));
  store.put(keys::in_jobs(keys::job_metrics(config.job_id)),
            job_metrics_json(config, m, status).dump(2) + "\n");
}

}  // namespace detail

/// Runs one job: the map phase as one batch, then, only if every mapper
/// succeeded, the reduce phase as a second batch, then the global merge into
/// result.tsv. Invocation and metrics logs are written either way.
inline JobMetrics run_job(const JobConfig& config, Runtime& runtime) {
  using clock = std::chrono::steady_clock;
  config.validate();
  ObjectStore& store = *runtime.store();
  auto tasks = plan_map_tasks(config.manifest, config.num_mappers, config.num_reducers,
                              config.job_id);

  JobMetrics m;
  auto t0 = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  auto fail = [&](Errc code, const InvocationRecord& bad) {
    m.wall_clock_ms = elapsed();
    detail::phase_averages(m.map_records, m.avg_map_ms, m.avg_map_mem_mb);
    detail::phase_averages(m.reduce_records, m.avg_reduce_ms, m.avg_reduce_mem_mb);
    detail::write_job_logs(store, config, m, to_string(code));
    throw JobFailed(code,
                    config.job_id + ": " + bad.function_name + " " + bad.invocation_id + " " +
                        std::string(to_string(bad.status)) +
                        (bad.message.empty() ? "" : " (" + bad.message + ")"),
                    m);
  };

  std::vector<InvocationRequest> map_reqs;
  map_reqs.reserve(tasks.size());
  for (const auto& t : tasks) map_reqs.push_back({config.map_function, encode_params(t)});
  m.map_records = runtime.invoke_batch(map_reqs, config.cap_for(map_reqs.size()));
  if (auto* bad = detail::first_failure(m.map_records)) fail(Errc::MapPhaseFailed, *bad);

  std::vector<InvocationRequest> reduce_reqs;
  reduce_reqs.reserve(config.num_reducers);
  for (std::size_t r = 0; r < config.num_reducers; ++r)
    reduce_reqs.push_back({config.reduce_function,
                           encode_params(ReduceTaskParams{r, config.num_mappers,
                                                          config.num_reducers, config.job_id})});
  m.reduce_records = runtime.invoke_batch(reduce_reqs, config.cap_for(reduce_reqs.size()));
  if (auto* bad = detail::first_failure(m.reduce_records)) fail(Errc::ReducePhaseFailed, *bad);

  // Hash partitioning interleaves word ranges across parts, so re-sort.
  std::vector<KeyCount> merged;
  for (std::size_t r = 0; r < config.num_reducers; ++r) {
    auto part = read_counts(keys::in_jobs(keys::part(config.job_id, r)), store);
    std::move(part.begin(), part.end(), std::back_inserter(merged));
  }
  std::sort(merged.begin(), merged.end(),
            [](const KeyCount& a, const KeyCount& b) { return a.word < b.word; });
  write_counts(store, keys::in_jobs(keys::result(config.job_id)), merged);

  if (config.cleanup_intermediates)
    store.delete_prefix(kJobsBucket, keys::intermediate_prefix(config.job_id));

  m.wall_clock_ms = elapsed();
  detail::phase_averages(m.map_records, m.avg_map_ms, m.avg_map_mem_mb);
  detail::phase_averages(m.reduce_records, m.avg_reduce_ms, m.avg_reduce_mem_mb);
  if (m.avg_map_ms + m.avg_reduce_ms > 0.0) {
    auto pct = compute_workload_pct(m.avg_map_ms, m.avg_reduce_ms);
    m.map_pct = pct.map_pct;
    m.reduce_pct = pct.reduce_pct;
  }
  detail::write_job_logs(store, config, m, "Succeeded");
  return m;
}

}  // namespace smr
