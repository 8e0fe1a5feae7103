#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "smr/corpus.hpp"
#include "smr/wordcount.hpp"

namespace {

TEST(SplitMix, FirstOutputsFromZero) {
  // Reference values from a standalone implementation.
  auto a = smr::splitmix64(0);
  auto b = smr::splitmix64(a.next_state);
  auto c = smr::splitmix64(b.next_state);
  EXPECT_EQ(a.output, 0xd4ae5f763b4136d8ull);
  EXPECT_EQ(b.output, 0x024fa33178c41ba9ull);
  EXPECT_EQ(c.output, 0xff2ca48650e431beull);
  EXPECT_EQ(a.next_state, 0x9E3779B97F4A7C15ull);
}

TEST(SplitMix, SuccessiveOutputsDiffer) {
  smr::SplitMix64 rng(0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(seen.insert(rng()).second);
}

TEST(SplitMix, SameSeedSameStream) {
  smr::SplitMix64 a(77), b(77);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Zipf, CdfIsMonotoneAndEndsAtOne) {
  smr::ZipfTable z(1000, 1.0);
  const auto& cdf = z.cdf();
  for (std::size_t i = 1; i < cdf.size(); ++i) ASSERT_LE(cdf[i - 1], cdf[i]);
  EXPECT_EQ(cdf.back(), 1.0);
  EXPECT_EQ(z.sample(0), 0u);
  EXPECT_EQ(z.sample(~0ull), 999u);
}

TEST(Zipf, ExponentZeroIsUniform) {
  const std::size_t V = 20, N = 200'000;
  smr::ZipfTable z(V, 0.0);
  smr::SplitMix64 rng(1);
  std::vector<double> hits(V, 0.0);
  for (std::size_t i = 0; i < N; ++i) hits[z.sample(rng())] += 1;
  double expected = static_cast<double>(N) / V;
  double chi2 = 0;
  for (double h : hits) chi2 += (h - expected) * (h - expected) / expected;
  // 19 degrees of freedom: mean 19, sd sqrt(38).
  EXPECT_LT(chi2, 19 + 3 * std::sqrt(38.0));
}

TEST(VocabWord, ZeroPadded) {
  EXPECT_EQ(smr::vocab_word(42, 10'000), "w0042");
  EXPECT_EQ(smr::vocab_word(0, 10), "w0");
  EXPECT_EQ(smr::vocab_word(7, 11), "w07");
}

TEST(Corpus, TokenCountIsFilesTimesWords) {
  smr::MemoryStore store;
  smr::CorpusSpec spec;
  spec.num_files = 2;
  spec.words_per_file = 100;
  auto c = smr::generate_corpus(spec, store, "c");
  EXPECT_EQ(c.total_tokens, 200u);
  ASSERT_EQ(c.manifest.size(), 2u);
  EXPECT_EQ(c.manifest[0], "c/in/f00000.txt");
  std::uint64_t tokens = 0;
  for (const auto& k : c.manifest) tokens += smr::tokenize(store.get(smr::keys::in_jobs(k))).size();
  EXPECT_EQ(tokens, 200u);
  EXPECT_EQ(store.get(smr::keys::in_jobs("c/manifest.txt")),
            "c/in/f00000.txt\nc/in/f00001.txt\n");
}

TEST(Corpus, LineLayout) {
  smr::CorpusSpec spec;
  spec.words_per_file = 5;
  spec.line_width = 2;
  spec.vocab_size = 10;
  smr::ZipfTable z(spec.vocab_size, spec.zipf_s);
  auto text = smr::generate_file(spec, z, 0);
  int spaces = 0, newlines = 0;
  for (char ch : text) {
    spaces += ch == ' ';
    newlines += ch == '\n';
  }
  EXPECT_EQ(newlines, 3);
  EXPECT_EQ(spaces, 2);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Corpus, SameSpecSameBytes) {
  smr::MemoryStore a, b;
  smr::CorpusSpec spec;
  spec.num_files = 3;
  spec.words_per_file = 2000;
  spec.seed = 99;
  auto ca = smr::generate_corpus(spec, a, "c");
  auto cb = smr::generate_corpus(spec, b, "c");
  for (const auto& k : ca.manifest)
    EXPECT_EQ(a.get(smr::keys::in_jobs(k)), b.get(smr::keys::in_jobs(k)));
  spec.seed = 100;
  smr::MemoryStore d;
  smr::generate_corpus(spec, d, "c");
  EXPECT_NE(a.get(smr::keys::in_jobs(ca.manifest[0])), d.get(smr::keys::in_jobs(ca.manifest[0])));
}

TEST(Corpus, ZipfRanksAreOrdered) {
  smr::MemoryStore store;
  smr::CorpusSpec spec;
  spec.num_files = 2;
  spec.words_per_file = 60'000;
  auto c = smr::generate_corpus(spec, store, "c");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& k : c.manifest)
    for (const auto& w : smr::tokenize(store.get(smr::keys::in_jobs(k)))) ++counts[w];
  EXPECT_GT(counts[smr::vocab_word(0, spec.vocab_size)], counts[smr::vocab_word(99, spec.vocab_size)]);
  EXPECT_GT(counts[smr::vocab_word(0, spec.vocab_size)], 5 * counts[smr::vocab_word(9, spec.vocab_size)] / 2);
}

TEST(Corpus, SkewShrinksLaterFiles) {
  smr::CorpusSpec spec;
  spec.words_per_file = 1000;
  spec.skew = 0.5;
  EXPECT_EQ(spec.words_in_file(0), 1000u);
  EXPECT_EQ(spec.words_in_file(1), 500u);
  EXPECT_EQ(spec.words_in_file(20), 1u);
}

TEST(Corpus, InvalidSpecRejected) {
  smr::MemoryStore store;
  smr::CorpusSpec spec;
  spec.num_files = 0;
  EXPECT_THROW(smr::generate_corpus(spec, store, "c"), smr::Error);
}

}  // namespace
