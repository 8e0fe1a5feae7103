// Command-line front end: corpus generation, single jobs, sweeps and reports.
//
//   smr gen    --files N --words-per-file W --vocab V --zipf S --seed U --out DIR
//   smr run    --mappers M --reducers R --files N --words-per-file W --seed U
//              --store {mem|fs} --out DIR [--cleanup]
//   smr bench  --func-counts 1,2,5,10 --repeats K --files N --words-per-file W
//              --seed U --store {mem|fs} --out DIR [--cross] [--cpu-throttle]
//              [--cold-start MS]
//   smr report --in DIR
//
// Exit codes: 0 success, 1 job or sweep failure, 2 invalid arguments.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smr/bench.hpp"
#include "smr/corpus.hpp"
#include "smr/faas_runtime.hpp"
#include "smr/object_store.hpp"
#include "smr/orchestrator.hpp"
#include "smr/wordcount.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CorpusOptions {
  smr::CorpusSpec spec;

  void add_to(CLI::App* cmd, bool full) {
    cmd->add_option("--files", spec.num_files, "Number of input files")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--words-per-file", spec.words_per_file, "Words per input file")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--seed", spec.seed, "Corpus seed")->capture_default_str();
    cmd->add_option("--vocab", spec.vocab_size, "Vocabulary size")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--zipf", spec.zipf_s, "Zipf exponent")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    if (full) {
      cmd->add_option("--line-width", spec.line_width, "Words per line")
          ->check(CLI::PositiveNumber)->capture_default_str();
      cmd->add_option("--skew", spec.skew, "Geometric per-file word-count factor")
          ->check(CLI::PositiveNumber)->capture_default_str();
    }
  }
};

std::shared_ptr<smr::ObjectStore> make_store(const std::string& kind, const fs::path& root) {
  if (kind == "fs") return std::make_shared<smr::FileStore>(root);
  return std::make_shared<smr::MemoryStore>();
}

void copy_out(smr::ObjectStore& store, const std::string& key, const fs::path& dest) {
  auto k = smr::keys::in_jobs(key);
  if (store.exists(k)) smr::write_file(dest, store.get(k));
}

// --- gen --------------------------------------------------------------------

int cmd_gen(const CorpusOptions& corpus, const std::string& out, const std::string& job_id) {
  smr::FileStore store(out);
  auto c = smr::generate_corpus(corpus.spec, store, job_id);
  std::printf("wrote %zu files (%llu tokens) under %s\n", c.manifest.size(),
              static_cast<unsigned long long>(c.total_tokens),
              (fs::path(out) / smr::kJobsBucket / job_id).c_str());
  return kExitOk;
}

// --- run --------------------------------------------------------------------

struct RunOptions {
  std::size_t mappers = 1;
  std::size_t reducers = 1;
  std::size_t cap = 0;
  std::string store = "mem";
  std::string out;
  std::string job_id = "job";
  bool cleanup = false;
  bool cpu_throttle = false;
  long cold_start_ms = 0;
  std::uint64_t timeout_ms = 600'000;
  std::uint32_t memory_mb = 512;
  long stall_mapper = -1;
};

int cmd_run(const CorpusOptions& corpus, const RunOptions& o) {
  fs::create_directories(o.out);
  auto store = make_store(o.store, fs::path(o.out) / "store");
  smr::RuntimeOptions ropts;
  ropts.cpu_throttle = o.cpu_throttle;
  ropts.cold_start = std::chrono::milliseconds(o.cold_start_ms);
  smr::Runtime runtime(store, ropts);

  smr::FunctionSpec limits;
  limits.timeout_ms = o.timeout_ms;
  limits.memory_limit_mb = o.memory_mb;

  smr::FunctionSpec map_spec = limits;
  map_spec.name = std::string(smr::kMapFunction);
  map_spec.kind = smr::FunctionKind::mapper;
  smr::Handler map_handler = smr::wc_map_handler;
  if (o.stall_mapper >= 0) {
    // Fault injection: the chosen mapper blocks until the runtime cancels it.
    auto target = static_cast<std::size_t>(o.stall_mapper);
    map_handler = [target](smr::InvocationContext& ctx) {
      auto p = smr::parse_params<smr::MapTaskParams>(ctx.params());
      if (p.index == target) {
        while (ctx.cancel().sleep_for(std::chrono::seconds(1))) {
        }
        ctx.cancel().checkpoint();
      }
      return smr::wc_map_handler(ctx);
    };
  }
  runtime.register_function(map_spec, map_handler);
  smr::FunctionSpec reduce_spec = limits;
  reduce_spec.name = std::string(smr::kReduceFunction);
  reduce_spec.kind = smr::FunctionKind::reducer;
  runtime.register_function(reduce_spec, smr::wc_reduce_handler);

  auto c = smr::generate_corpus(corpus.spec, *store, o.job_id);
  smr::JobConfig jc;
  jc.job_id = o.job_id;
  jc.num_mappers = o.mappers;
  jc.num_reducers = o.reducers;
  jc.concurrency_cap = o.cap;
  jc.manifest = c.manifest;
  jc.cleanup_intermediates = o.cleanup;

  int rc = kExitOk;
  try {
    auto m = smr::run_job(jc, runtime);
    std::printf("job %s: M=%zu R=%zu avg_map_ms=%.2f avg_reduce_ms=%.2f "
                "avg_map_mem_mb=%.2f avg_reduce_mem_mb=%.2f map_pct=%.2f reduce_pct=%.2f "
                "wall_clock_ms=%.2f\n",
                o.job_id.c_str(), o.mappers, o.reducers, m.avg_map_ms, m.avg_reduce_ms,
                m.avg_map_mem_mb, m.avg_reduce_mem_mb, m.map_pct, m.reduce_pct,
                m.wall_clock_ms);
  } catch (const smr::JobFailed& e) {
    std::fprintf(stderr, "job failed: %s\n", e.what());
    rc = kExitFailure;
  }
  copy_out(*store, smr::keys::result(o.job_id), fs::path(o.out) / "result.tsv");
  copy_out(*store, smr::keys::invocation_log(o.job_id), fs::path(o.out) / "invocations.jsonl");
  copy_out(*store, smr::keys::job_metrics(o.job_id), fs::path(o.out) / "job-metrics.json");
  return rc;
}

// --- bench ------------------------------------------------------------------

struct BenchOptions {
  std::vector<std::size_t> func_counts{1, 2, 5, 10};
  std::size_t repeats = 3;
  std::size_t cap = 0;
  std::string store = "mem";
  std::string out;
  bool cross = false;
  bool cpu_throttle = false;
  bool no_warmup = false;
  long cold_start_ms = 0;
};

std::string samples_csv(const std::vector<smr::JobSample>& samples) {
  std::string out =
      "job_id,num_mappers,num_reducers,repeat,avg_map_ms,avg_reduce_ms,avg_map_mem_mb,"
      "avg_reduce_mem_mb,wall_clock_ms,result_fnv1a64\n";
  char buf[256];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%.4f,%.4f,%.6f,%.6f,%.4f,%016llx\n",
                  s.job_id.c_str(), s.num_mappers, s.num_reducers, s.repeat, s.avg_map_ms,
                  s.avg_reduce_ms, s.avg_map_mem_mb, s.avg_reduce_mem_mb, s.wall_clock_ms,
                  static_cast<unsigned long long>(s.result_checksum));
    out += buf;
  }
  return out;
}

int cmd_bench(const CorpusOptions& corpus, const BenchOptions& o) {
  smr::SweepConfig cfg;
  cfg.func_counts = o.func_counts;
  cfg.corpus = corpus.spec;
  cfg.repeats = o.repeats;
  cfg.concurrency_cap = o.cap;
  cfg.tie_mr = !o.cross;
  cfg.warmup = !o.no_warmup;
  cfg.runtime.cpu_throttle = o.cpu_throttle;
  cfg.runtime.cold_start = std::chrono::milliseconds(o.cold_start_ms);
  fs::create_directories(o.out);
  if (o.store == "fs") {
    cfg.store = smr::StoreKind::filesystem;
    cfg.store_root = fs::path(o.out) / "store";
  }

  smr::SweepResult res;
  try {
    res = smr::run_sweep(cfg, [](const smr::JobSample& s) {
      std::fprintf(stderr, "  %-16s map %9.2f ms  reduce %9.2f ms  wall %9.2f ms\n",
                   s.job_id.c_str(), s.avg_map_ms, s.avg_reduce_ms, s.wall_clock_ms);
    });
  } catch (const smr::JobFailed& e) {
    std::fprintf(stderr, "sweep aborted: %s\n", e.what());
    return kExitFailure;
  }

  std::vector<smr::BenchRow> tied;
  for (const auto& r : res.rows)
    if (r.num_mappers == r.num_reducers) tied.push_back(r);
  smr::emit_csv(tied, fs::path(o.out) / "bench.csv");
  if (o.cross) smr::write_file(fs::path(o.out) / "bench_cross.csv", smr::format_cross_csv(res.rows));
  smr::write_file(fs::path(o.out) / "samples.csv", samples_csv(res.samples));

  std::string report = smr::render_table(tied) + "\n" + smr::render_workload(tied) + "\n" +
                       smr::render_verdict(res.verdict);
  smr::write_file(fs::path(o.out) / "report.txt", report);
  std::fputs(report.c_str(), stdout);
  return kExitOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::string& in) {
  auto rows = smr::parse_csv(smr::read_file(fs::path(in) / "bench.csv"));
  if (rows.empty()) throw smr::Error(smr::Errc::ParseError, "bench.csv has no rows");
  std::string report = smr::render_table(rows) + "\n" + smr::render_workload(rows) + "\n" +
                       smr::render_verdict(smr::evaluate_trends(rows));
  std::fputs(report.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serverless MapReduce word-count engine and benchmark harness"};
  app.require_subcommand(1);

  CorpusOptions gen_corpus;
  std::string gen_out, gen_job = "corpus";
  auto* gen = app.add_subcommand("gen", "Generate a corpus into a filesystem store");
  gen_corpus.add_to(gen, true);
  gen->add_option("--out", gen_out, "Store root directory")->required();
  gen->add_option("--job-id", gen_job, "Prefix the corpus is written under")->capture_default_str();

  CorpusOptions run_corpus;
  run_corpus.spec.num_files = 10;
  run_corpus.spec.words_per_file = 10'000;
  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one MapReduce job over a generated corpus");
  run_corpus.add_to(run, false);
  run->add_option("--mappers", run_opts.mappers, "Mapper count")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--reducers", run_opts.reducers, "Reducer count")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--store", run_opts.store, "Store backend")->check(CLI::IsMember({"mem", "fs"}))->capture_default_str();
  run->add_option("--out", run_opts.out, "Output directory")->required();
  run->add_option("--job-id", run_opts.job_id, "Job id")->capture_default_str();
  run->add_option("--cap", run_opts.cap, "Concurrency cap per phase (0 = all tasks)")->capture_default_str();
  run->add_flag("--cleanup", run_opts.cleanup, "Delete intermediate objects after the job");
  run->add_flag("--cpu-throttle", run_opts.cpu_throttle, "Stretch invocations to the cpu share");
  run->add_option("--cold-start", run_opts.cold_start_ms, "Cold-start latency in ms")->check(CLI::NonNegativeNumber);
  run->add_option("--timeout-ms", run_opts.timeout_ms, "Per-invocation timeout")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--memory-mb", run_opts.memory_mb, "Per-function memory limit")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--stall-mapper", run_opts.stall_mapper,
                  "Fault injection: this mapper index blocks until it times out");

  CorpusOptions bench_corpus;
  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "Sweep function counts and report scaling");
  bench_corpus.add_to(bench, false);
  bench->add_option("--func-counts", bench_opts.func_counts, "Function counts to sweep")
      ->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bench_opts.repeats, "Timed repeats per point")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--store", bench_opts.store, "Store backend")->check(CLI::IsMember({"mem", "fs"}))->capture_default_str();
  bench->add_option("--out", bench_opts.out, "Output directory")->required();
  bench->add_option("--cap", bench_opts.cap, "Concurrency cap per phase (0 = all tasks)");
  bench->add_flag("--cross", bench_opts.cross, "Sweep mappers and reducers independently");
  bench->add_flag("--cpu-throttle", bench_opts.cpu_throttle, "Stretch invocations to the cpu share");
  bench->add_flag("--no-warmup", bench_opts.no_warmup, "Skip the discarded warm-up job");
  bench->add_option("--cold-start", bench_opts.cold_start_ms, "Cold-start latency in ms")->check(CLI::NonNegativeNumber);

  std::string report_in;
  auto* report = app.add_subcommand("report", "Render the table and trend verdict from bench.csv");
  report->add_option("--in", report_in, "Directory holding bench.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_corpus, gen_out, gen_job);
    if (*run) return cmd_run(run_corpus, run_opts);
    if (*bench) return cmd_bench(bench_corpus, bench_opts);
    if (*report) return cmd_report(report_in);
  } catch (const smr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case smr::Errc::InvalidArgument:
      case smr::Errc::InvalidKey:
      case smr::Errc::InvalidSpec:
      case smr::Errc::EmptyManifest:
        return kExitUsage;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
