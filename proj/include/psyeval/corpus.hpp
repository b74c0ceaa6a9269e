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

#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace psyeval::corpus {

// Identifies one word of the reading corpus.
struct TokenKey {
  int text_id = 0;
  int word_index = 0;
  auto operator<=>(const TokenKey&) const = default;
};

std::string to_string(const TokenKey& key);

// One word of the corpus as displayed to readers: punctuation stays attached
// to the word it touches.
struct CorpusToken {
  int text_id = 0;
  int word_index = 0;
  std::string surface;
  std::string stripped;  // letters of surface, lowercased
  bool has_leading_punct = false;
  bool has_trailing_punct = false;
  bool is_alphabetic = false;  // surface minus edge punctuation is all letters

  TokenKey key() const { return {text_id, word_index}; }
};

CorpusToken make_token(int text_id, int word_index, std::string surface);

enum class Measure { FFD, GD, TD };

std::string_view measure_name(Measure m);  // "ffd", "gd", "td"
Measure parse_measure(std::string_view name);

struct ReadingRecord {
  int text_id = 0;
  int word_index = 0;
  std::string subject_id;
  std::optional<double> ffd_ms;
  std::optional<double> gd_ms;
  std::optional<double> td_ms;
  bool fixated = false;

  TokenKey key() const { return {text_id, word_index}; }
  std::optional<double> duration(Measure m) const;
};

// Tokens plus per-subject records, in file order.
struct EyetrackingData {
  std::vector<CorpusToken> tokens;
  std::vector<ReadingRecord> readings;
};

class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::map<std::string, std::int64_t> counts);

  bool contains(const std::string& word) const { return counts_.count(word) > 0; }
  std::int64_t count(const std::string& word) const;
  std::int64_t total() const { return total_; }
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }

 private:
  std::map<std::string, std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct ClozeNorm {
  int text_id = 0;
  int word_index = 0;
  std::string word;
  int n_responses = 0;
  int n_correct = 0;

  TokenKey key() const { return {text_id, word_index}; }
};

struct RegressionRow {
  std::string subject_id;
  double response_ms = 0.0;
  Measure measure = Measure::GD;
  double surp_cur = 0.0;
  double surp_prev = 0.0;
  int len_cur = 1;
  double logfreq_cur = 0.0;
  int len_prev = 1;
  double logfreq_prev = 0.0;
  double position = 0.0;
  bool prev_fixated = false;
  TokenKey source;
};

// Eyetracking TSV: text_id, word_index, word, subject_id, ffd_ms, gd_ms,
// td_ms. Durations are integer milliseconds with 0 meaning skipped.
EyetrackingData parse_eyetracking(std::string_view text, const std::string& origin = "<memory>");
EyetrackingData load_eyetracking(const std::string& path);
std::vector<CorpusToken> load_corpus(const std::string& path);
std::string serialize_eyetracking(const EyetrackingData& data);

FrequencyTable parse_frequency(std::string_view text, const std::string& origin = "<memory>");
FrequencyTable load_frequency(const std::string& path);
std::string serialize_frequency(const FrequencyTable& table);

std::vector<ClozeNorm> parse_cloze(std::string_view text, const std::string& origin = "<memory>");
std::vector<ClozeNorm> load_cloze(const std::string& path);
std::string serialize_cloze(const std::vector<ClozeNorm>& norms);

// Natural log of the unigram probability count/total. Throws LookupError for
// words missing from the table.
double log_unigram_prob(const FrequencyTable& freq, const std::string& word);

// Why a token was removed by the exclusion rules; None for tokens that pass.
enum class ExclusionReason {
  None,
  TextBoundary,
  BeforePunctuation,
  NonAlphabetic,
  NoFrequency,
};

// Rule-level exclusion for every token (ignores the spillover rule).
std::map<TokenKey, ExclusionReason> exclusion_reasons(const std::vector<CorpusToken>& tokens,
                                                      const FrequencyTable& freq);

// Tokens kept for reading-time modelling: drops text-initial and text-final
// words, words before punctuation, non-alphabetic words, words without a
// frequency estimate, and any word directly after one of those.
std::set<TokenKey> preprocess(const std::vector<CorpusToken>& tokens, const FrequencyTable& freq);

// One row per retained token and subject whose chosen duration is present.
// Throws AlignmentError if a retained token or its predecessor has no
// surprisal value.
std::vector<RegressionRow> build_rows(const std::vector<CorpusToken>& tokens,
                                      const std::vector<ReadingRecord>& readings,
                                      const std::set<TokenKey>& retained,
                                      const std::map<TokenKey, double>& surprisals,
                                      const FrequencyTable& freq, Measure measure);

}  // namespace psyeval::corpus
