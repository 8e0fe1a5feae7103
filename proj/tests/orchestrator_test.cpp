#include <algorithm>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "smr/corpus.hpp"
#include "smr/orchestrator.hpp"

using namespace std::chrono_literals;
using smr::Errc;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const smr::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected smr::Error";
  return Errc::IoError;
}

struct Harness {
  std::shared_ptr<smr::MemoryStore> store = std::make_shared<smr::MemoryStore>();
  smr::Runtime rt{store};
  smr::JobConfig cfg;

  explicit Harness(std::vector<std::string> texts, std::size_t M = 1, std::size_t R = 1) {
    cfg.job_id = "job";
    cfg.num_mappers = M;
    cfg.num_reducers = R;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      cfg.manifest.push_back(smr::keys::input("job", i));
      store->put(smr::keys::in_jobs(cfg.manifest.back()), texts[i]);
    }
  }

  std::string get(const std::string& key) { return store->get(smr::keys::in_jobs(key)); }
};

TEST(RunJob, OneByOne) {
  Harness h({"a b a"});
  smr::register_wordcount(h.rt);
  auto m = smr::run_job(h.cfg, h.rt);
  EXPECT_EQ(h.get("job/out/result.tsv"), "a\t2\nb\t1\n");
  EXPECT_EQ(m.map_records.size(), 1u);
  EXPECT_EQ(m.reduce_records.size(), 1u);
  EXPECT_NEAR(m.map_pct + m.reduce_pct, 100.0, 0.01);
}

TEST(RunJob, RecordCountsMatchShape) {
  Harness h({"a", "b", "c", "d"}, 3, 5);
  smr::register_wordcount(h.rt);
  auto m = smr::run_job(h.cfg, h.rt);
  EXPECT_EQ(m.map_records.size(), 3u);
  EXPECT_EQ(m.reduce_records.size(), 5u);
  for (const auto& r : m.map_records) EXPECT_EQ(r.kind, smr::FunctionKind::mapper);
  for (const auto& r : m.reduce_records) EXPECT_EQ(r.kind, smr::FunctionKind::reducer);
}

TEST(RunJob, ReducersStartAfterEveryMapperEnds) {
  Harness h({"a b", "c d", "e f", "g h", "i j", "k l"}, 6, 4);
  smr::register_wordcount(h.rt);
  auto m = smr::run_job(h.cfg, h.rt);
  double last_map_end = 0, first_reduce_start = 1e300;
  for (const auto& r : m.map_records) last_map_end = std::max(last_map_end, r.ended_at);
  for (const auto& r : m.reduce_records) first_reduce_start = std::min(first_reduce_start, r.started_at);
  EXPECT_GE(first_reduce_start, last_map_end);
}

TEST(RunJob, MapperTimeoutStopsBeforeReduce) {
  Harness h({"a", "b"}, 2, 2);
  smr::FunctionSpec map_spec;
  map_spec.name = "wc-map";
  map_spec.timeout_ms = 100;
  h.rt.register_function(map_spec, [](smr::InvocationContext& ctx) {
    auto p = smr::parse_params<smr::MapTaskParams>(ctx.params());
    if (p.index == 0) ctx.cancel().sleep_for(10s);
    ctx.cancel().checkpoint();
    return smr::wc_map_handler(ctx);
  });
  int reducer_calls = 0;
  smr::FunctionSpec red_spec;
  red_spec.name = "wc-reduce";
  red_spec.kind = smr::FunctionKind::reducer;
  h.rt.register_function(red_spec, [&](smr::InvocationContext& ctx) {
    ++reducer_calls;
    return smr::wc_reduce_handler(ctx);
  });

  try {
    smr::run_job(h.cfg, h.rt);
    FAIL() << "expected JobFailed";
  } catch (const smr::JobFailed& e) {
    EXPECT_EQ(e.code(), Errc::MapPhaseFailed);
    EXPECT_EQ(e.metrics().map_records[0].status, smr::InvocationStatus::Timeout);
    EXPECT_TRUE(e.metrics().reduce_records.empty());
  }
  EXPECT_EQ(reducer_calls, 0);
  auto log = h.get("job/logs/invocations.jsonl");
  EXPECT_EQ(log.find("\"reducer\""), std::string::npos);
  EXPECT_NE(log.find("\"Timeout\""), std::string::npos);
  EXPECT_FALSE(h.store->exists(smr::keys::in_jobs("job/out/result.tsv")));
  auto metrics = nlohmann::json::parse(h.get("job/logs/job-metrics.json"));
  EXPECT_EQ(metrics["status"], "MapPhaseFailed");
}

TEST(RunJob, ReducerFailureIsReducePhaseFailed) {
  Harness h({"a"});
  smr::FunctionSpec s;
  s.name = "wc-map";
  h.rt.register_function(s, smr::wc_map_handler);
  s.name = "wc-reduce";
  s.kind = smr::FunctionKind::reducer;
  h.rt.register_function(s, [](smr::InvocationContext&) -> std::string {
    throw smr::Error(smr::Errc::IoError, "disk gone");
  });
  EXPECT_EQ(code_of([&] { smr::run_job(h.cfg, h.rt); }), Errc::ReducePhaseFailed);
}

TEST(RunJob, PhaseAverageIsArithmeticMean) {
  Harness h({"a", "b"}, 2, 1);
  smr::FunctionSpec s;
  s.name = "wc-map";
  h.rt.register_function(s, [](smr::InvocationContext& ctx) {
    auto p = smr::parse_params<smr::MapTaskParams>(ctx.params());
    std::this_thread::sleep_for(p.index == 0 ? 10ms : 20ms);
    return smr::wc_map_handler(ctx);
  });
  s.name = "wc-reduce";
  s.kind = smr::FunctionKind::reducer;
  h.rt.register_function(s, smr::wc_reduce_handler);
  auto m = smr::run_job(h.cfg, h.rt);
  double mean = (m.map_records[0].exec_time_ms + m.map_records[1].exec_time_ms) / 2;
  EXPECT_DOUBLE_EQ(m.avg_map_ms, mean);
  EXPECT_GE(m.avg_map_ms, 15.0);
  EXPECT_LT(m.avg_map_ms, 15.0 + 25.0);
}

TEST(RunJob, ResultIndependentOfShape) {
  smr::MemoryStore scratch;
  smr::CorpusSpec spec;
  spec.num_files = 6;
  spec.words_per_file = 3000;
  spec.vocab_size = 500;
  auto corpus = smr::generate_corpus(spec, scratch, "src");
  std::vector<std::string> texts;
  for (const auto& k : corpus.manifest) texts.push_back(scratch.get(smr::keys::in_jobs(k)));

  std::string first;
  for (auto [M, R] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 3}, {6, 1}, {4, 7}}) {
    Harness h(texts, M, R);
    smr::register_wordcount(h.rt);
    smr::run_job(h.cfg, h.rt);
    auto out = h.get("job/out/result.tsv");
    if (first.empty())
      first = out;
    else
      EXPECT_EQ(out, first) << M << "x" << R;
  }
  std::uint64_t total = 0;
  for (const auto& kc : smr::decode_counts(first)) total += kc.count;
  EXPECT_EQ(total, corpus.total_tokens);
}

TEST(RunJob, WritesMetricsDocument) {
  Harness h({"x y z"}, 1, 2);
  smr::register_wordcount(h.rt);
  auto m = smr::run_job(h.cfg, h.rt);
  auto j = nlohmann::json::parse(h.get("job/logs/job-metrics.json"));
  EXPECT_EQ(j["status"], "Succeeded");
  EXPECT_EQ(j["config"]["num_reducers"], 2);
  EXPECT_DOUBLE_EQ(j["avg_map_ms"].get<double>(), m.avg_map_ms);
  EXPECT_EQ(j["invocations"].size(), 3u);
  EXPECT_TRUE(j.contains("workload_pct_definition"));
}

TEST(RunJob, CleanupRemovesIntermediates) {
  Harness h({"a b"}, 2, 2);
  h.cfg.cleanup_intermediates = true;
  smr::register_wordcount(h.rt);
  smr::run_job(h.cfg, h.rt);
  EXPECT_TRUE(h.store->list(smr::kJobsBucket, "job/int/").empty());
  EXPECT_TRUE(h.store->exists(smr::keys::in_jobs("job/out/result.tsv")));
}

TEST(RunJob, CapLimitsPhaseParallelism) {
  Harness h({"a", "b", "c", "d"}, 4, 1);
  h.cfg.concurrency_cap = 1;
  smr::register_wordcount(h.rt);
  auto m = smr::run_job(h.cfg, h.rt);
  auto recs = m.map_records;
  std::sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.started_at < b.started_at; });
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_LE(recs[i - 1].ended_at, recs[i].started_at);
}

TEST(RunJob, InvalidConfigRejected) {
  Harness h({"a"});
  smr::register_wordcount(h.rt);
  h.cfg.job_id = "a/b";
  EXPECT_EQ(code_of([&] { smr::run_job(h.cfg, h.rt); }), Errc::InvalidArgument);
  h.cfg.job_id = "ok";
  h.cfg.manifest.clear();
  EXPECT_EQ(code_of([&] { smr::run_job(h.cfg, h.rt); }), Errc::EmptyManifest);
}

TEST(WorkloadPct, EqualPhasesSplitEvenly) {
  auto p = smr::compute_workload_pct(37.5, 37.5);
  EXPECT_EQ(p.map_pct, 50.0);
  EXPECT_EQ(p.reduce_pct, 50.0);
}

TEST(WorkloadPct, ZeroReducePhase) {
  auto p = smr::compute_workload_pct(12.0, 0.0);
  EXPECT_EQ(p.map_pct, 100.0);
  EXPECT_EQ(p.reduce_pct, 0.0);
}

TEST(WorkloadPct, BothZeroIsDegenerate) {
  EXPECT_EQ(code_of([] { smr::compute_workload_pct(0.0, 0.0); }), Errc::DegenerateJob);
  EXPECT_EQ(code_of([] { smr::compute_workload_pct(-1.0, 2.0); }), Errc::InvalidArgument);
}

TEST(WorkloadPct, RoundsToTwoDecimals) {
  auto p = smr::compute_workload_pct(1.0, 2.0);
  EXPECT_DOUBLE_EQ(p.map_pct, 33.33);
  EXPECT_DOUBLE_EQ(p.reduce_pct, 66.67);
}

}  // namespace
