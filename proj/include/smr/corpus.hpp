#pragma once

// Deterministic corpus generation: SplitMix64 randomness and inverse-CDF
// Zipf sampling over a synthetic vocabulary "w<index>".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "smr/error.hpp"
#include "smr/mapreduce.hpp"
#include "smr/object_store.hpp"

namespace smr {

struct SplitMixStep {
  std::uint64_t next_state;
  std::uint64_t output;
};

constexpr SplitMixStep splitmix64(std::uint64_t state) noexcept {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4B58Full;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return {state, z ^ (z >> 31)};
}

/// SplitMix64 as a UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    auto step = splitmix64(state_);
    state_ = step.next_state;
    return step.output;
  }

 private:
  std::uint64_t state_;
};

/// Zipf(s) over ranks 1..vocab_size, sampled by binary search of the
/// normalized cumulative weights 1/k^s. Returns 0-based indices.
class ZipfTable {
 public:
  ZipfTable(std::size_t vocab_size, double s) {
    if (vocab_size == 0) throw Error(Errc::InvalidArgument, "vocab_size must be >= 1");
    if (!(s >= 0.0)) throw Error(Errc::InvalidArgument, "zipf exponent must be >= 0");
    cdf_.resize(vocab_size);
    double total = 0.0;
    for (std::size_t k = 0; k < vocab_size; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), s);
      cdf_[k] = total;
    }
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  std::size_t size() const { return cdf_.size(); }
  const std::vector<double>& cdf() const { return cdf_; }

  /// Index of the first cumulative bin >= bits / 2^64.
  std::size_t sample(std::uint64_t bits) const {
    double u = std::ldexp(static_cast<double>(bits), -64);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct CorpusSpec {
  std::size_t num_files = 50;
  std::size_t words_per_file = 50'000;
  std::size_t vocab_size = 10'000;
  double zipf_s = 1.0;
  std::uint64_t seed = 0;
  std::size_t line_width = 16;
  /// File i holds round(words_per_file * skew^i) words (at least 1).
  double skew = 1.0;

  void validate() const {
    if (num_files == 0 || words_per_file == 0 || vocab_size == 0 || line_width == 0)
      throw Error(Errc::InvalidArgument, "corpus sizes must be positive");
    if (!(zipf_s >= 0.0)) throw Error(Errc::InvalidArgument, "zipf exponent must be >= 0");
    if (!(skew > 0.0)) throw Error(Errc::InvalidArgument, "skew must be positive");
  }

  std::size_t words_in_file(std::size_t i) const {
    if (skew == 1.0) return words_per_file;
    auto w = std::llround(static_cast<double>(words_per_file) *
                          std::pow(skew, static_cast<double>(i)));
    return static_cast<std::size_t>(std::max<long long>(1, w));
  }
};

struct Corpus {
  std::vector<std::string> manifest;  // keys within bucket "jobs"
  std::uint64_t total_tokens = 0;
};

/// Vocabulary word for a 0-based index, zero-padded to the width of the
/// largest index.
inline std::string vocab_word(std::size_t index, std::size_t vocab_size) {
  std::size_t width = std::to_string(vocab_size - 1).size();
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "w" + digits;
}

/// Bytes of file `i`: words separated by single spaces with a newline after
/// every `line_width` words and after the last word.
inline std::string generate_file(const CorpusSpec& spec, const ZipfTable& zipf,
                                 std::size_t i) {
  SplitMix64 rng(splitmix64(spec.seed ^ static_cast<std::uint64_t>(i)).output);
  std::vector<std::string> vocab(spec.vocab_size);
  for (std::size_t k = 0; k < spec.vocab_size; ++k) vocab[k] = vocab_word(k, spec.vocab_size);

  const std::size_t n = spec.words_in_file(i);
  std::string out;
  out.reserve(n * (vocab[0].size() + 1));
  for (std::size_t j = 0; j < n; ++j) {
    out += vocab[zipf.sample(rng())];
    out += ((j + 1) % spec.line_width == 0 || j + 1 == n) ? '\n' : ' ';
  }
  return out;
}

/// Writes the input files and `<job_id>/manifest.txt`, returning the manifest
/// and the exact token total.
inline Corpus generate_corpus(const CorpusSpec& spec, ObjectStore& store,
                              const std::string& job_id) {
  spec.validate();
  ZipfTable zipf(spec.vocab_size, spec.zipf_s);
  Corpus corpus;
  std::string manifest_text;
  for (std::size_t i = 0; i < spec.num_files; ++i) {
    auto key = keys::input(job_id, i);
    store.put(keys::in_jobs(key), generate_file(spec, zipf, i));
    corpus.total_tokens += spec.words_in_file(i);
    manifest_text += key;
    manifest_text += '\n';
    corpus.manifest.push_back(std::move(key));
  }
  store.put(keys::in_jobs(keys::manifest(job_id)), std::move(manifest_text));
  return corpus;
}

}  // namespace smr
