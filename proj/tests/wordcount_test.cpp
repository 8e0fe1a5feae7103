#include <map>
#include <memory>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "smr/orchestrator.hpp"
#include "smr/wordcount.hpp"
#include "test_util.hpp"

using Tokens = std::vector<std::string>;

namespace {

std::string run_wordcount(const std::vector<std::string>& texts, std::size_t M, std::size_t R) {
  auto store = std::make_shared<smr::MemoryStore>();
  smr::Runtime rt(store);
  smr::register_wordcount(rt);
  smr::JobConfig cfg;
  cfg.job_id = "wc";
  cfg.num_mappers = M;
  cfg.num_reducers = R;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    cfg.manifest.push_back(smr::keys::input("wc", i));
    store->put(smr::keys::in_jobs(cfg.manifest.back()), texts[i]);
  }
  smr::run_job(cfg, rt);
  return store->get(smr::keys::in_jobs(smr::keys::result("wc")));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(smr::tokenize("").empty()); }

TEST(Tokenize, LowercasesAndDropsPunctuation) {
  EXPECT_EQ(smr::tokenize("Hello, world! HELLO"), (Tokens{"hello", "world", "hello"}));
  EXPECT_EQ(smr::tokenize("To be, or not to be"), (Tokens{"to", "be", "or", "not", "to", "be"}));
}

TEST(Tokenize, DigitsAreWordCharacters) {
  EXPECT_EQ(smr::tokenize("w0042 x-1 2nd"), (Tokens{"w0042", "x", "1", "2nd"}));
}

TEST(Tokenize, MatchesRegexOracleOnRandomAscii) {
  std::mt19937_64 rng(2024);
  std::string text = smr_test::random_ascii_text(rng, 10'000);
  Tokens want;
  std::regex word("[[:alnum:]]+");
  for (std::sregex_iterator it(text.begin(), text.end(), word), end; it != end; ++it) {
    std::string w = it->str();
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    want.push_back(w);
  }
  EXPECT_EQ(smr::tokenize(text), want);
}

TEST(Tokenize, InvalidUtf8SeparatesTokens) {
  EXPECT_EQ(smr::tokenize("ab\xff" "cd"), (Tokens{"ab", "cd"}));
  EXPECT_EQ(smr::tokenize("ab\xc3"), (Tokens{"ab"}));
  EXPECT_EQ(smr::tokenize("\xe2\x82x"), (Tokens{"x"}));
}

TEST(Tokenize, NonAsciiLettersWhenLocaleAvailable) {
  auto t = smr::tokenize("Caf\xc3\x89 \xe2\x80\x94 na\xc3\xafve");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].substr(0, 2), "na");
  if (t[0] != "caf\xc3\xa9") GTEST_SKIP() << "no wide ctype for U+00C9 on this host";
}

TEST(WordCount, SimpleSentence) {
  EXPECT_EQ(run_wordcount({"a b a"}, 1, 1), "a\t2\nb\t1\n");
}

TEST(WordCount, ToBeOrNotToBe) {
  EXPECT_EQ(run_wordcount({"To be, or not to be"}, 2, 2), "be\t2\nnot\t1\nor\t1\nto\t2\n");
}

TEST(WordCount, SingleWordRepeated) {
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "echo ";
  EXPECT_EQ(run_wordcount({text}, 1, 3), "echo\t1000\n");
}

TEST(WordCount, EmptyFilesGiveEmptyResult) {
  EXPECT_EQ(run_wordcount({"", "", "..."}, 2, 2), "");
}

TEST(WordCount, SplitAcrossFilesMatchesOracle) {
  std::mt19937_64 rng(5);
  std::vector<std::string> texts;
  std::map<std::string, std::uint64_t> oracle;
  for (int i = 0; i < 7; ++i) {
    texts.push_back(smr_test::random_ascii_text(rng, 1500));
    smr_test::brute_count(texts.back(), oracle);
  }
  EXPECT_EQ(run_wordcount(texts, 3, 2), smr_test::to_tsv(oracle));
}

TEST(WordCount, ReducerIndexOutOfRangeFails) {
  auto store = std::make_shared<smr::MemoryStore>();
  smr::Runtime rt(store);
  smr::register_wordcount(rt);
  auto rec = rt.invoke(std::string(smr::kReduceFunction),
                       smr::encode_params(smr::ReduceTaskParams{3, 1, 2, "j"}));
  EXPECT_EQ(rec.status, smr::InvocationStatus::Failed);
}

}  // namespace
