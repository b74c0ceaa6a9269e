// Copyright 2026 The psyeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include "doctest.h"
#include "psyeval/corpus.hpp"
#include "psyeval/error.hpp"

using namespace psyeval;
using namespace psyeval::corpus;

namespace {

const char* kHeader = "text_id\tword_index\tword\tsubject_id\tffd_ms\tgd_ms\ttd_ms\n";

std::string text_rows(int text, const std::vector<std::string>& words, const std::string& subject = "s1") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i)
    out += std::to_string(text) + "\t" + std::to_string(i) + "\t" + words[i] + "\t" + subject + "\t200\t250\t300\n";
  return out;
}

std::vector<CorpusToken> tokens_of(const std::vector<std::string>& words, int text = 1) {
  std::vector<CorpusToken> out;
  for (std::size_t i = 0; i < words.size(); ++i) out.push_back(make_token(text, static_cast<int>(i), words[i]));
  return out;
}

// Straight transcription of the exclusion rules on raw strings, kept apart
// from the library's token flags.
std::set<TokenKey> oracle_retained(const std::vector<std::vector<std::string>>& texts,
                                   const std::set<std::string>& vocab) {
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  auto excluded = [&](const std::vector<std::string>& w, std::size_t i) {
    if (i == 0 || i + 1 == w.size()) return true;
    if (punct(w[i].back())) return true;
    if (i + 1 < w.size() && punct(w[i + 1].front())) return true;
    std::string core = w[i];
    while (!core.empty() && punct(core.front())) core.erase(core.begin());
    while (!core.empty() && punct(core.back())) core.pop_back();
    if (core.empty()) return true;
    for (char c : core)
      if (!std::isalpha(static_cast<unsigned char>(c))) return true;
    std::string lower;
    for (char c : w[i])
      if (std::isalpha(static_cast<unsigned char>(c))) lower += static_cast<char>(std::tolower(c));
    return vocab.count(lower) == 0;
  };
  std::set<TokenKey> out;
  for (std::size_t t = 0; t < texts.size(); ++t)
    for (std::size_t i = 1; i < texts[t].size(); ++i)
      if (!excluded(texts[t], i) && !excluded(texts[t], i - 1))
        out.insert({static_cast<int>(t + 1), static_cast<int>(i)});
  return out;
}

FrequencyTable table_of(const std::set<std::string>& vocab) {
  std::map<std::string, std::int64_t> counts;
  std::int64_t c = 1;
  for (const auto& w : vocab) counts[w] = c++;
  return FrequencyTable(counts);
}

}  // namespace

TEST_CASE("load_corpus keeps punctuation attached") {
  auto data = parse_eyetracking(std::string(kHeader) + text_rows(1, {"The", "cat", "sat."}));
  REQUIRE(data.tokens.size() == 3);
  CHECK(data.tokens[2].surface == "sat.");
  CHECK(data.tokens[2].has_trailing_punct);
  CHECK(data.tokens[2].stripped == "sat");
  CHECK(data.tokens[2].is_alphabetic);
  CHECK_FALSE(data.tokens[0].has_trailing_punct);
  CHECK(data.tokens[0].stripped == "the");
}

TEST_CASE("empty eyetracking file gives no tokens") {
  CHECK(parse_eyetracking("").tokens.empty());
  CHECK(parse_eyetracking(kHeader).tokens.empty());
}

TEST_CASE("word_index gaps and reversals are format errors") {
  std::string gap = std::string(kHeader) + "1\t0\ta\ts1\t1\t1\t1\n1\t2\tb\ts1\t1\t1\t1\n";
  CHECK_THROWS_AS(parse_eyetracking(gap), FormatError);
  std::string reversed = std::string(kHeader) + "1\t1\tb\ts1\t1\t1\t1\n1\t0\ta\ts1\t1\t1\t1\n";
  CHECK_THROWS_AS(parse_eyetracking(reversed), FormatError);
  std::string relabeled = std::string(kHeader) + "1\t0\ta\ts1\t1\t1\t1\n1\t0\tb\ts2\t1\t1\t1\n";
  CHECK_THROWS_AS(parse_eyetracking(relabeled), FormatError);
}

TEST_CASE("malformed rows report their line number") {
  std::string bad = std::string(kHeader) + "1\t0\ta\ts1\t200\t250\t300\n1\t1\tb\ts1\tx\t250\t300\n";
  try {
    parse_eyetracking(bad, "et.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("et.tsv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_eyetracking("bogus header\n"), ParseError);
  CHECK_THROWS_AS(parse_eyetracking(std::string(kHeader) + "1\t0\ta\ts1\t300\t250\t300\n"), ParseError);
}

TEST_CASE("zero durations mean skipped") {
  auto data = parse_eyetracking(std::string(kHeader) + "1\t0\ta\ts1\t0\t0\t0\n1\t1\tb\ts1\t0\t0\t250\n");
  CHECK_FALSE(data.readings[0].fixated);
  CHECK_FALSE(data.readings[0].ffd_ms.has_value());
  CHECK(data.readings[1].fixated);
  CHECK(data.readings[1].td_ms == doctest::Approx(250));
  CHECK_FALSE(data.readings[1].ffd_ms.has_value());
}

TEST_CASE("serializing a parsed corpus reproduces the file") {
  std::string file = std::string(kHeader) + text_rows(1, {"Hello,", "big", "world."}, "s1") +
                     text_rows(1, {"Hello,", "big", "world."}, "s2") + "2\t0\t\"Quote\ts1\t0\t0\t0\n" +
                     "2\t1\tends\ts1\t180\t180\t420\n";
  CHECK(serialize_eyetracking(parse_eyetracking(file)) == file);
}

TEST_CASE("frequency and cloze tables parse") {
  auto f = parse_frequency("word\tcount\nthe\t90\ncat\t10\n");
  CHECK(f.total() == 100);
  CHECK(f.count("cat") == 10);
  CHECK_THROWS_AS(parse_frequency("word\tcount\nthe\t0\n"), ParseError);
  CHECK(serialize_frequency(f) == "word\tcount\ncat\t10\nthe\t90\n");

  auto norms = parse_cloze("text_id\tword_index\tword\tn_responses\tn_correct\n1\t3\tcat\t25\t4\n");
  REQUIRE(norms.size() == 1);
  CHECK(norms[0].key() == TokenKey{1, 3});
  CHECK(norms[0].n_correct == 4);
  CHECK_THROWS_AS(parse_cloze("text_id\tword_index\tword\tn_responses\tn_correct\n1\t3\tcat\t25\t26\n"), ParseError);
}

TEST_CASE("log_unigram_prob") {
  FrequencyTable f({{"a", 10}, {"b", 990}});
  CHECK(log_unigram_prob(f, "a") == doctest::Approx(-4.605170185988091).epsilon(1e-12));
  FrequencyTable g({{"a", 3}, {"b", 9}});
  CHECK(log_unigram_prob(g, "a") == doctest::Approx(-1.3862943611198906).epsilon(1e-12));
  FrequencyTable h({{"only", 7}});
  CHECK(log_unigram_prob(h, "only") == 0.0);
  CHECK_THROWS_AS(log_unigram_prob(f, "zzz"), LookupError);
}

TEST_CASE("preprocess on a clean ten-word text keeps 2..8") {
  std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  auto freq = table_of({words.begin(), words.end()});
  auto retained = preprocess(tokens_of(words), freq);
  std::set<TokenKey> expected;
  for (int i = 2; i <= 8; ++i) expected.insert({1, i});
  CHECK(retained == expected);
}

TEST_CASE("preprocess on 'A b, c d'") {
  std::vector<std::string> words{"A", "b,", "c", "d"};
  std::set<std::string> vocab{"a", "b", "c", "d"};
  auto retained = preprocess(tokens_of(words), table_of(vocab));
  CHECK(retained == oracle_retained({words}, vocab));
  // A: first word; b,: precedes punctuation (and follows A); c: follows b,; d: last.
  CHECK(retained.empty());
}

TEST_CASE("non-alphabetic words and their successors are dropped") {
  std::vector<std::string> words{"w", "x", "y", "3rd", "z", "v", "u", "t"};
  std::set<std::string> vocab{"w", "x", "y", "rd", "z", "v", "u", "t"};
  auto retained = preprocess(tokens_of(words), table_of(vocab));
  CHECK(retained.count({1, 3}) == 0);
  CHECK(retained.count({1, 4}) == 0);
  CHECK(retained.count({1, 2}) == 1);
  CHECK(retained.count({1, 5}) == 1);
}

TEST_CASE("leading punctuation on the next word excludes the current one") {
  std::vector<std::string> words{"a", "b", "c", "\"d", "e", "f", "g"};
  std::set<std::string> vocab{"a", "b", "c", "d", "e", "f", "g"};
  auto reasons = exclusion_reasons(tokens_of(words), table_of(vocab));
  CHECK(reasons.at({1, 2}) == ExclusionReason::BeforePunctuation);
  CHECK(reasons.at({1, 3}) == ExclusionReason::None);
  auto retained = preprocess(tokens_of(words), table_of(vocab));
  CHECK(retained == std::set<TokenKey>{{1, 4}, {1, 5}});
}

TEST_CASE("preprocess matches the rule oracle on random corpora") {
  std::mt19937 rng(7);
  const std::vector<std::string> pool{"a", "b", "c", "Dd", "e,", "f.", "\"g", "3rd", "h-i", "oov", "..", "x"};
  std::set<std::string> vocab{"a", "b", "c", "dd", "e", "f", "g", "rd", "hi", "x"};
  auto freq = table_of(vocab);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> texts(1 + rng() % 3);
    std::vector<CorpusToken> tokens;
    for (std::size_t t = 0; t < texts.size(); ++t) {
      const int len = 1 + static_cast<int>(rng() % 12);
      for (int i = 0; i < len; ++i) {
        texts[t].push_back(pool[rng() % pool.size()]);
        tokens.push_back(make_token(static_cast<int>(t + 1), i, texts[t].back()));
      }
    }
    auto retained = preprocess(tokens, freq);
    REQUIRE(retained == oracle_retained(texts, vocab));
    // Every retained token and its predecessor pass all rules, so running
    // the filter again over the same tokens keeps the same set.
    auto reasons = exclusion_reasons(tokens, freq);
    for (const auto& k : retained) {
      CHECK(reasons.at(k) == ExclusionReason::None);
      CHECK(reasons.at({k.text_id, k.word_index - 1}) == ExclusionReason::None);
    }
    CHECK(preprocess(tokens, freq) == retained);
  }
}

TEST_CASE("stripped is non-empty iff the surface has a letter") {
  for (std::string s : {"abc", "a,", "3rd", "1990", "...", "\"", "x-y"}) {
    auto t = make_token(1, 0, s);
    const bool has_letter = std::any_of(s.begin(), s.end(), [](char c) { return std::isalpha(c); });
    CHECK(t.stripped.empty() != has_letter);
  }
}

namespace {

struct RowsFixture {
  EyetrackingData data;
  FrequencyTable freq;
  std::set<TokenKey> retained;
  std::map<TokenKey, double> surprisal;

  explicit RowsFixture(const std::string& body) {
    data = parse_eyetracking(std::string(kHeader) + body);
    std::map<std::string, std::int64_t> counts;
    for (const auto& t : data.tokens) counts[t.stripped] += 1;
    freq = FrequencyTable(counts);
    retained = preprocess(data.tokens, freq);
    for (const auto& t : data.tokens) surprisal[t.key()] = 1.0 + t.word_index;
  }
};

}  // namespace

TEST_CASE("build_rows: two subjects by five retained tokens") {
  std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h"};
  RowsFixture fx(text_rows(1, words, "s1") + text_rows(1, words, "s2"));
  REQUIRE(fx.retained.size() == 5);
  auto rows = build_rows(fx.data.tokens, fx.data.readings, fx.retained, fx.surprisal, fx.freq, Measure::GD);
  CHECK(rows.size() == 10);
  for (const auto& r : rows) {
    CHECK(fx.retained.count(r.source) == 1);
    CHECK(r.surp_cur == doctest::Approx(1.0 + r.source.word_index));
    CHECK(r.surp_prev == doctest::Approx(r.source.word_index));
    CHECK(r.position == doctest::Approx(r.source.word_index / 7.0));
    CHECK(r.response_ms == 250);
    CHECK(r.len_cur == 1);
    CHECK(r.prev_fixated);
    CHECK(std::isfinite(r.logfreq_cur));
  }
}

TEST_CASE("build_rows skips skipped tokens and absent measures") {
  std::string body = text_rows(1, {"a", "b", "c", "d", "e", "f"}, "s1");
  // s2 skips word 3 entirely and has only a total duration on word 2.
  body += "1\t0\ta\ts2\t200\t250\t300\n1\t1\tb\ts2\t200\t250\t300\n1\t2\tc\ts2\t0\t0\t250\n";
  body += "1\t3\td\ts2\t0\t0\t0\n1\t4\te\ts2\t210\t260\t310\n1\t5\tf\ts2\t200\t250\t300\n";
  RowsFixture fx(body);
  auto ffd = build_rows(fx.data.tokens, fx.data.readings, fx.retained, fx.surprisal, fx.freq, Measure::FFD);
  auto td = build_rows(fx.data.tokens, fx.data.readings, fx.retained, fx.surprisal, fx.freq, Measure::TD);
  auto count = [](const std::vector<RegressionRow>& rows, const std::string& s, int idx) {
    return std::count_if(rows.begin(), rows.end(),
                         [&](const RegressionRow& r) { return r.subject_id == s && r.source.word_index == idx; });
  };
  CHECK(count(ffd, "s2", 2) == 0);
  CHECK(count(td, "s2", 2) == 1);
  CHECK(count(td, "s2", 3) == 0);
  // prev_fixated follows the same subject's record for the preceding word.
  for (const auto& r : td) {
    const bool expected = !(r.subject_id == "s2" && r.source.word_index == 4);
    CHECK(r.prev_fixated == expected);
  }
}

TEST_CASE("build_rows reports missing surprisal") {
  RowsFixture fx(text_rows(1, {"a", "b", "c", "d", "e"}));
  fx.surprisal.erase({1, 2});
  CHECK_THROWS_AS(build_rows(fx.data.tokens, fx.data.readings, fx.retained, fx.surprisal, fx.freq, Measure::GD),
                  AlignmentError);
}
