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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "psyeval/corpus.hpp"
#include "psyeval/ngram.hpp"

namespace psyeval::surprisal {

enum class LogBase { Nats, Bits };
LogBase parse_log_base(std::string_view name);

struct DumpRow {
  int text_id = 0;
  int word_index = 0;
  int subtoken_index = 0;
  std::string subtoken;
  double surprisal_nats = 0.0;

  corpus::TokenKey key() const { return {text_id, word_index}; }
};

// Per-subtoken surprisals produced by a language model over the corpus, in
// the model's own tokenization.
struct SurprisalDump {
  std::string model_id;
  std::int64_t vocab_size = 0;
  std::vector<DumpRow> rows;
};

struct WordSurprisalSeries {
  std::string model_id;
  std::map<corpus::TokenKey, double> values;
  std::int64_t token_count_lm = 0;
};

// Dump TSV: a "# <model_id>\t<vocab_size>" line, the column header
// text_id, word_index, subtoken_index, subtoken, surprisal, then rows.
// Bits are converted to nats on ingestion.
SurprisalDump parse_dump(std::string_view text, const std::string& origin = "<memory>",
                         LogBase base = LogBase::Nats);
SurprisalDump load_dump(const std::string& path, LogBase base = LogBase::Nats);
std::string serialize_dump(const SurprisalDump& dump);

// Splits a corpus word into the tokens a language model sees: every
// punctuation character becomes its own token.
std::vector<std::string> lm_tokenize(std::string_view surface);

// Scores every text of the corpus as one sequence with an n-gram model.
SurprisalDump score_corpus(const ngram::NGramModel& model, const std::vector<corpus::CorpusToken>& tokens,
                           const std::string& model_id);

// Word surprisal = sum of its subtoken surprisals.
WordSurprisalSeries align(const SurprisalDump& dump, const std::vector<corpus::CorpusToken>& tokens);

// exp(mean surprisal) over the model's own tokens.
double perplexity(const SurprisalDump& dump);
double perplexity(const WordSurprisalSeries& series);
double perplexity(const std::vector<double>& surprisals_nats);

double normalized_perplexity(double ppl, std::int64_t vocab_size);

}  // namespace psyeval::surprisal
