#pragma once

// MapReduce data path over the object store: task planning, FNV-1a hash
// partitioning, combined and sorted intermediate partitions (the shuffle),
// and the reducer-side merge.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smr/error.hpp"
#include "smr/meter.hpp"
#include "smr/object_store.hpp"

namespace smr {

inline constexpr std::string_view kJobsBucket = "jobs";

// ---------------------------------------------------------------------------
// Canonical object keys (all within bucket "jobs")

namespace keys {

inline std::string input(std::string_view job_id, std::size_t file_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", file_index);
  return std::string(job_id) + "/in/f" + buf + ".txt";
}

inline std::string intermediate(std::string_view job_id, std::size_t mapper,
                                std::size_t reducer) {
  return std::string(job_id) + "/int/m" + std::to_string(mapper) + "/p" +
         std::to_string(reducer) + ".tsv";
}

inline std::string part(std::string_view job_id, std::size_t reducer) {
  return std::string(job_id) + "/out/part-" + std::to_string(reducer) + ".tsv";
}

inline std::string result(std::string_view job_id) {
  return std::string(job_id) + "/out/result.tsv";
}

inline std::string manifest(std::string_view job_id) {
  return std::string(job_id) + "/manifest.txt";
}

inline std::string invocation_log(std::string_view job_id) {
  return std::string(job_id) + "/logs/invocations.jsonl";
}

inline std::string job_metrics(std::string_view job_id) {
  return std::string(job_id) + "/logs/job-metrics.json";
}

inline std::string intermediate_prefix(std::string_view job_id) {
  return std::string(job_id) + "/int/";
}

inline ObjectKey in_jobs(std::string key) {
  return ObjectKey{std::string(kJobsBucket), std::move(key)};
}

}  // namespace keys

// ---------------------------------------------------------------------------
// Hash partitioning

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = kFnvOffsetBasis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// Reducer index for `word`. Stable across runs, hosts and languages.
constexpr std::size_t partition_of(std::string_view word, std::size_t num_reducers) {
  return static_cast<std::size_t>(fnv1a64(word) % num_reducers);
}

// ---------------------------------------------------------------------------
// Task parameters

struct MapTaskParams {
  std::vector<std::string> file_ids;  // full input manifest, in order
  std::size_t num_files = 0;
  std::size_t index = 0;
  std::size_t num_mappers = 1;
  std::size_t num_reducers = 1;
  std::string job_id;

  /// Stride assignment: file k belongs to mapper k mod num_mappers.
  std::vector<std::string> assigned_files() const {
    std::vector<std::string> out;
    for (std::size_t k = index; k < file_ids.size(); k += num_mappers)
      out.push_back(file_ids[k]);
    return out;
  }

  void validate() const {
    if (num_mappers == 0 || num_reducers == 0)
      throw Error(Errc::InvalidArgument, "mapper and reducer counts must be >= 1");
    if (index >= num_mappers)
      throw Error(Errc::InvalidArgument, "mapper index out of range");
    if (num_files != file_ids.size())
      throw Error(Errc::InvalidArgument, "num_files does not match manifest length");
  }

  bool operator==(const MapTaskParams&) const = default;
};

inline void to_json(nlohmann::json& j, const MapTaskParams& p) {
  j = nlohmann::json{{"job_id", p.job_id},       {"index", p.index},
                     {"num_mappers", p.num_mappers}, {"num_reducers", p.num_reducers},
                     {"num_files", p.num_files}, {"file_ids", p.file_ids}};
}

inline void from_json(const nlohmann::json& j, MapTaskParams& p) {
  j.at("job_id").get_to(p.job_id);
  j.at("index").get_to(p.index);
  j.at("num_mappers").get_to(p.num_mappers);
  j.at("num_reducers").get_to(p.num_reducers);
  j.at("num_files").get_to(p.num_files);
  j.at("file_ids").get_to(p.file_ids);
}

struct ReduceTaskParams {
  std::size_t reducer_index = 0;
  std::size_t num_mappers = 1;
  std::size_t num_reducers = 1;
  std::string job_id;

  bool operator==(const ReduceTaskParams&) const = default;
};

inline void to_json(nlohmann::json& j, const ReduceTaskParams& p) {
  j = nlohmann::json{{"job_id", p.job_id},
                     {"reducer_index", p.reducer_index},
                     {"num_mappers", p.num_mappers},
                     {"num_reducers", p.num_reducers}};
}

inline void from_json(const nlohmann::json& j, ReduceTaskParams& p) {
  j.at("job_id").get_to(p.job_id);
  j.at("reducer_index").get_to(p.reducer_index);
  j.at("num_mappers").get_to(p.num_mappers);
  j.at("num_reducers").get_to(p.num_reducers);
}

/// Parses a JSON parameter blob; malformed input becomes InvalidArgument.
template <class Params>
Params parse_params(std::string_view blob) {
  try {
    return nlohmann::json::parse(blob).get<Params>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad task parameters: ") + e.what());
  }
}

template <class Params>
std::string encode_params(const Params& p) {
  return nlohmann::json(p).dump();
}

/// One parameter set per mapper. The stride rule makes the file subsets
/// pairwise disjoint with the manifest as their union.
inline std::vector<MapTaskParams> plan_map_tasks(std::span<const std::string> manifest,
                                                 std::size_t num_mappers,
                                                 std::size_t num_reducers,
                                                 const std::string& job_id) {
  if (manifest.empty()) throw Error(Errc::EmptyManifest, job_id);
  if (num_mappers == 0 || num_reducers == 0)
    throw Error(Errc::InvalidArgument, "mapper and reducer counts must be >= 1");
  std::unordered_set<std::string_view> seen;
  for (const auto& k : manifest)
    if (!seen.insert(k).second)
      throw Error(Errc::InvalidArgument, "duplicate manifest key " + k);

  std::vector<std::string> ids(manifest.begin(), manifest.end());
  std::vector<MapTaskParams> out(num_mappers);
  for (std::size_t m = 0; m < num_mappers; ++m) {
    out[m].file_ids = ids;
    out[m].num_files = ids.size();
    out[m].index = m;
    out[m].num_mappers = num_mappers;
    out[m].num_reducers = num_reducers;
    out[m].job_id = job_id;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counts and the TSV record format: "<word>\t<count>\n", words byte-wise
// ascending and unique, no header.

struct KeyCount {
  std::string word;
  std::uint64_t count = 0;

  auto operator<=>(const KeyCount&) const = default;
  bool operator==(const KeyCount&) const = default;
};

inline bool is_valid_word(std::string_view w) {
  return !w.empty() && w.find_first_of("\t\n") == std::string_view::npos;
}

inline std::string encode_counts(std::span<const KeyCount> entries) {
  std::size_t bytes = 0;
  for (const auto& e : entries) bytes += e.word.size() + 22;
  std::string out;
  out.reserve(bytes);
  char num[24];
  for (const auto& e : entries) {
    out += e.word;
    out += '\t';
    auto [end, ec] = std::to_chars(num, num + sizeof num, e.count);
    out.append(num, end);
    out += '\n';
  }
  return out;
}

/// Strict parser: rejects missing tabs, empty words, non-decimal or zero
/// counts, a missing final newline, and unsorted or repeated words.
inline std::vector<KeyCount> decode_counts(std::string_view text) {
  std::vector<KeyCount> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    if (nl == std::string_view::npos)
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": missing newline");
    auto line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected word<TAB>count");
    auto word = line.substr(0, tab);
    auto digits = line.substr(tab + 1);
    std::uint64_t count = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() ||
        count == 0 || digits.front() == '+')
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": bad count");
    if (!out.empty() && !(out.back().word < word))
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": words not strictly ascending");
    out.push_back({std::string(word), count});
  }
  return out;
}

inline void write_counts(ObjectStore& store, const ObjectKey& key,
                         std::span<const KeyCount> entries) {
  store.put(key, encode_counts(entries));
}

inline std::vector<KeyCount> read_counts(const ObjectKey& key, const ObjectStore& store) {
  return decode_counts(store.get(key));
}

// ---------------------------------------------------------------------------
// Tasks

/// Modeled bytes for one count-table entry: the word plus a fixed overhead.
inline constexpr std::uint64_t kEntryOverheadBytes = 16;

struct MapResult {
  std::size_t files_processed = 0;
  std::uint64_t tokens_seen = 0;
};

struct ReduceResult {
  std::size_t words_out = 0;
  std::uint64_t total_count = 0;
};

namespace detail {

// Count table that meters word bytes + overhead per distinct entry.
class CountTable {
 public:
  explicit CountTable(Meter& meter) : meter_(meter) {}
  CountTable(const CountTable&) = delete;
  CountTable& operator=(const CountTable&) = delete;
  ~CountTable() { meter_.free(metered_); }

  void add(std::string_view word, std::uint64_t n) {
    scratch_.assign(word);
    auto [it, inserted] = table_.try_emplace(scratch_, 0);
    if (inserted) {
      std::uint64_t bytes = word.size() + kEntryOverheadBytes;
      try {
        meter_.alloc(bytes);
      } catch (...) {
        table_.erase(it);
        throw;
      }
      metered_ += bytes;
    }
    it->second += n;
  }

  std::size_t size() const { return table_.size(); }

  /// Entries sorted byte-wise by word.
  std::vector<const std::pair<const std::string, std::uint64_t>*> sorted() const {
    std::vector<const std::pair<const std::string, std::uint64_t>*> v;
    v.reserve(table_.size());
    for (const auto& kv : table_) v.push_back(&kv);
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->first < b->first; });
    return v;
  }

 private:
  Meter& meter_;
  std::unordered_map<std::string, std::uint64_t> table_;
  std::string scratch_;
  std::uint64_t metered_ = 0;
};

inline void checkpoint(const CancelToken* cancel) {
  if (cancel) cancel->checkpoint();
}

}  // namespace detail

/// Reads the mapper's file group, counts tokens (combining per word), and
/// writes one sorted intermediate object per reducer, empty ones included.
///
/// The whole file group is fetched before counting starts; each file's buffer
/// is released once it has been tokenized. `tokenizer(text, sink)` must call
/// `sink(std::string_view)` once per token.
template <class Tokenizer>
MapResult run_map_task(const MapTaskParams& params, Tokenizer&& tokenizer,
                       ObjectStore& store, Meter& meter,
                       const CancelToken* cancel = nullptr) {
  params.validate();
  const auto files = params.assigned_files();

  std::vector<std::string> buffers;
  std::vector<MeteredBytes> held;
  buffers.reserve(files.size());
  held.reserve(files.size());
  for (const auto& key : files) {
    detail::checkpoint(cancel);
    buffers.push_back(store.get(keys::in_jobs(key)));
    held.emplace_back(meter, buffers.back().size());
  }

  MapResult result;
  detail::CountTable table(meter);
  for (std::size_t i = 0; i < files.size(); ++i) {
    detail::checkpoint(cancel);
    tokenizer(std::string_view(buffers[i]), [&](std::string_view token) {
      table.add(token, 1);
      ++result.tokens_seen;
    });
    ++result.files_processed;
    std::string().swap(buffers[i]);
    held[i].reset();
  }

  std::vector<std::vector<KeyCount>> parts(params.num_reducers);
  for (const auto* kv : table.sorted())
    parts[partition_of(kv->first, params.num_reducers)].push_back({kv->first, kv->second});

  for (std::size_t r = 0; r < params.num_reducers; ++r) {
    detail::checkpoint(cancel);
    std::string encoded = encode_counts(parts[r]);
    MeteredBytes out_buf(meter, encoded.size());
    store.put(keys::in_jobs(keys::intermediate(params.job_id, params.index, r)),
              std::move(encoded));
  }
  return result;
}

/// Sums this reducer's partition from every mapper and writes the sorted
/// part file. A missing intermediate object means a mapper failure leaked
/// past the phase barrier.
inline ReduceResult run_reduce_task(std::size_t reducer_index, std::size_t num_mappers,
                                    const std::string& job_id, ObjectStore& store,
                                    Meter& meter, const CancelToken* cancel = nullptr) {
  if (num_mappers == 0) throw Error(Errc::InvalidArgument, "num_mappers must be >= 1");
  detail::CountTable table(meter);
  for (std::size_t m = 0; m < num_mappers; ++m) {
    detail::checkpoint(cancel);
    auto key = keys::in_jobs(keys::intermediate(job_id, m, reducer_index));
    std::string buf;
    try {
      buf = store.get(key);
    } catch (const Error& e) {
      if (e.code() != Errc::NotFound) throw;
      throw Error(Errc::MissingPartition, key.str());
    }
    MeteredBytes in_buf(meter, buf.size());
    for (const auto& kc : decode_counts(buf)) table.add(kc.word, kc.count);
  }

  ReduceResult result;
  std::vector<KeyCount> entries;
  entries.reserve(table.size());
  for (const auto* kv : table.sorted()) {
    entries.push_back({kv->first, kv->second});
    result.total_count += kv->second;
  }
  result.words_out = entries.size();

  detail::checkpoint(cancel);
  std::string encoded = encode_counts(entries);
  MeteredBytes out_buf(meter, encoded.size());
  store.put(keys::in_jobs(keys::part(job_id, reducer_index)), std::move(encoded));
  return result;
}

}  // namespace smr
