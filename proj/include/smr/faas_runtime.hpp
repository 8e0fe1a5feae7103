#pragma once

// Local emulation of a Function Compute platform: named functions with
// resource limits, on-demand invocation, a batch driver with a concurrency
// cap, timeouts, and per-invocation metering of wall time and modeled memory.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smr/error.hpp"
#include "smr/meter.hpp"
#include "smr/object_store.hpp"

namespace smr {

enum class FunctionKind { mapper, reducer };

inline std::string_view to_string(FunctionKind k) {
  return k == FunctionKind::mapper ? "mapper" : "reducer";
}

struct FunctionSpec {
  std::string name;
  FunctionKind kind = FunctionKind::mapper;
  double cpu_share = 0.35;
  std::uint32_t memory_limit_mb = 512;
  std::uint64_t timeout_ms = 600'000;

  void validate() const {
    if (name.empty()) throw Error(Errc::InvalidSpec, "empty function name");
    if (!(cpu_share > 0.0 && cpu_share <= 1.0))
      throw Error(Errc::InvalidSpec, name + ": cpu_share must be in (0, 1]");
    if (memory_limit_mb == 0)
      throw Error(Errc::InvalidSpec, name + ": memory_limit_mb must be positive");
    if (timeout_ms == 0)
      throw Error(Errc::InvalidSpec, name + ": timeout_ms must be positive");
  }
};

enum class InvocationStatus { Succeeded, Timeout, MemoryExceeded, Failed };

inline std::string_view to_string(InvocationStatus s) {
  switch (s) {
    case InvocationStatus::Succeeded: return "Succeeded";
    case InvocationStatus::Timeout: return "Timeout";
    case InvocationStatus::MemoryExceeded: return "MemoryExceeded";
    case InvocationStatus::Failed: return "Failed";
  }
  return "Failed";
}

/// Milliseconds on the steady clock, relative to a per-process epoch.
inline double monotonic_ms(std::chrono::steady_clock::time_point t) {
  static const auto epoch = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t - epoch).count();
}

struct InvocationRecord {
  std::string invocation_id;
  std::string function_name;
  FunctionKind kind = FunctionKind::mapper;
  std::string params;
  double started_at = 0.0;  // monotonic ms
  double ended_at = 0.0;
  double exec_time_ms = 0.0;
  double peak_modeled_mem_mb = 0.0;
  InvocationStatus status = InvocationStatus::Failed;
  std::string message;  // failure detail, empty on success
  std::string payload;  // handler's completion payload

  bool succeeded() const { return status == InvocationStatus::Succeeded; }
};

inline nlohmann::ordered_json to_json(const InvocationRecord& r) {
  nlohmann::ordered_json j;
  j["invocation_id"] = r.invocation_id;
  j["function_name"] = r.function_name;
  j["kind"] = to_string(r.kind);
  j["status"] = to_string(r.status);
  j["exec_time_ms"] = r.exec_time_ms;
  j["peak_modeled_mem_mb"] = r.peak_modeled_mem_mb;
  j["started_at"] = r.started_at;
  j["ended_at"] = r.ended_at;
  if (!r.message.empty()) j["error"] = r.message;
  return j;
}

/// One JSON object per line, newline-terminated.
inline std::string invocation_log_jsonl(std::span<const InvocationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

/// What a handler sees: its parameters, the shared store, its own meter, and
/// the cancellation signal it is expected to poll at file boundaries.
class InvocationContext {
 public:
  InvocationContext(std::string_view params, ObjectStore& store, Meter& meter,
                    const CancelToken& cancel)
      : params_(params), store_(store), meter_(meter), cancel_(cancel) {}

  std::string_view params() const { return params_; }
  ObjectStore& store() const { return store_; }
  Meter& meter() const { return meter_; }
  const CancelToken& cancel() const { return cancel_; }

 private:
  std::string_view params_;
  ObjectStore& store_;
  Meter& meter_;
  const CancelToken& cancel_;
};

using Handler = std::function<std::string(InvocationContext&)>;

struct InvocationRequest {
  std::string function_name;
  std::string params;
};

struct RuntimeOptions {
  /// Stretch each invocation to busy / cpu_share wall time.
  bool cpu_throttle = false;
  /// Added to the first invocation of every function.
  std::chrono::milliseconds cold_start{0};
};

class Runtime {
 public:
  explicit Runtime(std::shared_ptr<ObjectStore> store, RuntimeOptions options = {})
      : store_(std::move(store)), options_(options) {
    if (!store_) throw Error(Errc::InvalidArgument, "runtime needs a store");
  }

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  ~Runtime() { join_stragglers(); }

  void register_function(FunctionSpec spec, Handler handler) {
    spec.validate();
    if (!handler) throw Error(Errc::InvalidSpec, spec.name + ": empty handler");
    std::lock_guard lock(mu_);
    if (functions_.count(spec.name))
      throw Error(Errc::DuplicateName, spec.name);
    auto entry = std::make_shared<Entry>();
    entry->spec = spec;
    entry->handler = std::move(handler);
    functions_.emplace(spec.name, std::move(entry));
  }

  bool has_function(std::string_view name) const {
    std::lock_guard lock(mu_);
    return functions_.find(std::string(name)) != functions_.end();
  }

  const std::shared_ptr<ObjectStore>& store() const { return store_; }
  const RuntimeOptions& options() const { return options_; }

  /// Runs one invocation to completion, timeout or failure. Throws only
  /// UnknownFunction; every other outcome is reported in the record.
  InvocationRecord invoke(std::string_view function_name, std::string params) {
    return run(lookup(function_name), std::move(params));
  }

  /// Executes all requests with at most `concurrency_cap` in flight and
  /// returns records in request order once every invocation has finished.
  std::vector<InvocationRecord> invoke_batch(std::span<const InvocationRequest> requests,
                                             std::size_t concurrency_cap) {
    if (concurrency_cap == 0)
      throw Error(Errc::InvalidArgument, "concurrency_cap must be >= 1");
    std::vector<InvocationRecord> out(requests.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= requests.size()) return;
        const auto& req = requests[i];
        std::shared_ptr<Entry> fn;
        try {
          fn = lookup(req.function_name);
        } catch (const Error& e) {
          out[i] = unknown_function_record(req, e.what());
          continue;
        }
        out[i] = run(std::move(fn), req.params);
      }
    };
    std::size_t workers = std::min(concurrency_cap, requests.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return out;
  }

  /// Waits for handler threads abandoned after a timeout.
  void join_stragglers() {
    std::vector<std::thread> threads;
    {
      std::lock_guard lock(mu_);
      threads.swap(stragglers_);
    }
    for (auto& t : threads) t.join();
  }

 private:
  struct Entry {
    FunctionSpec spec;
    Handler handler;
    std::atomic<bool> warm{false};
  };

  struct Outcome {
    explicit Outcome(std::uint64_t limit) : meter(limit) {}
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    Meter meter;
    CancelToken cancel;
    InvocationStatus status = InvocationStatus::Failed;
    std::string message;
    std::string payload;
    std::chrono::steady_clock::time_point ended;
  };

  std::shared_ptr<Entry> lookup(std::string_view name) const {
    std::lock_guard lock(mu_);
    auto it = functions_.find(std::string(name));
    if (it == functions_.end())
      throw Error(Errc::UnknownFunction, std::string(name));
    return it->second;
  }

  std::string next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "inv-%06llu",
                  static_cast<unsigned long long>(seq_.fetch_add(1) + 1));
    return buf;
  }

  InvocationRecord unknown_function_record(const InvocationRequest& req,
                                           std::string message) {
    InvocationRecord rec;
    rec.invocation_id = next_id();
    rec.function_name = req.function_name;
    rec.params = req.params;
    rec.started_at = rec.ended_at = monotonic_ms(std::chrono::steady_clock::now());
    rec.status = InvocationStatus::Failed;
    rec.message = std::move(message);
    return rec;
  }

  static void execute(const std::shared_ptr<Outcome>& out, const std::shared_ptr<Entry>& fn,
                      const std::shared_ptr<ObjectStore>& store, const std::string& params,
                      bool cold, RuntimeOptions opts) {
    using clock = std::chrono::steady_clock;
    InvocationStatus status = InvocationStatus::Failed;
    std::string message, payload;
    try {
      if (cold && opts.cold_start.count() > 0) out->cancel.sleep_for(opts.cold_start);
      out->cancel.checkpoint();
      auto busy_start = clock::now();
      InvocationContext ctx(params, *store, out->meter, out->cancel);
      payload = fn->handler(ctx);
      if (opts.cpu_throttle && fn->spec.cpu_share < 1.0) {
        auto busy = clock::now() - busy_start;
        out->cancel.sleep_for(std::chrono::duration_cast<clock::duration>(
            busy * (1.0 / fn->spec.cpu_share - 1.0)));
        out->cancel.checkpoint();
      }
      status = InvocationStatus::Succeeded;
    } catch (const Error& e) {
      if (e.code() == Errc::MemoryExceeded)
        status = InvocationStatus::MemoryExceeded;
      else if (e.code() == Errc::Cancelled)
        status = InvocationStatus::Timeout;
      message = e.what();
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
      message = "unknown exception";
    }
    std::lock_guard lock(out->mu);
    out->ended = clock::now();
    out->status = status;
    out->message = std::move(message);
    out->payload = std::move(payload);
    out->done = true;
    out->cv.notify_all();
  }

  InvocationRecord run(std::shared_ptr<Entry> fn, std::string params) {
    using clock = std::chrono::steady_clock;
    const FunctionSpec& spec = fn->spec;
    InvocationRecord rec;
    rec.invocation_id = next_id();
    rec.function_name = spec.name;
    rec.kind = spec.kind;
    rec.params = std::move(params);

    auto out = std::make_shared<Outcome>(std::uint64_t{spec.memory_limit_mb} << 20);
    bool cold = !fn->warm.exchange(true);
    auto timeout = std::chrono::milliseconds(spec.timeout_ms);
    auto started = clock::now();
    std::thread worker(execute, out, fn, store_, rec.params, cold, options_);

    clock::time_point ended;
    std::unique_lock lock(out->mu);
    if (out->cv.wait_until(lock, started + timeout, [&] { return out->done; })) {
      lock.unlock();
      worker.join();
      ended = out->ended;
      rec.status = out->status;
      rec.message = std::move(out->message);
      rec.payload = std::move(out->payload);
      if (ended - started >= timeout && rec.status != InvocationStatus::MemoryExceeded) {
        rec.status = InvocationStatus::Timeout;
        rec.payload.clear();
      } else if (rec.status == InvocationStatus::Timeout) {
        // Cancelled raised by the handler itself before the deadline.
        rec.status = InvocationStatus::Failed;
      }
    } else {
      // Backstop: the handler ignored the deadline. Signal it and move on;
      // the thread is joined later.
      out->cancel.cancel();
      lock.unlock();
      ended = clock::now();
      rec.status = InvocationStatus::Timeout;
      rec.message = "exceeded timeout of " + std::to_string(spec.timeout_ms) + " ms";
      std::lock_guard g(mu_);
      stragglers_.push_back(std::move(worker));
    }
    if (rec.status == InvocationStatus::Timeout && rec.message.empty())
      rec.message = "exceeded timeout of " + std::to_string(spec.timeout_ms) + " ms";

    rec.started_at = monotonic_ms(started);
    rec.ended_at = monotonic_ms(ended);
    rec.exec_time_ms = rec.ended_at - rec.started_at;
    if (rec.status == InvocationStatus::Timeout)
      rec.exec_time_ms = std::max(rec.exec_time_ms, static_cast<double>(spec.timeout_ms));
    rec.peak_modeled_mem_mb = out->meter.peak_mb();
    return rec;
  }

  std::shared_ptr<ObjectStore> store_;
  RuntimeOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> functions_;
  std::vector<std::thread> stragglers_;
  std::atomic<std::uint64_t> seq_{0};
};

}  // namespace smr
