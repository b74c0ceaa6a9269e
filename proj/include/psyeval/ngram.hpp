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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace psyeval::ngram {

inline constexpr std::string_view kBeginSymbol = "<s>";
inline constexpr std::string_view kEndSymbol = "</s>";
inline constexpr std::string_view kUnknownSymbol = "<unk>";

using WordId = std::uint32_t;
using Ngram = std::vector<WordId>;

inline constexpr WordId kBeginId = 0;
inline constexpr WordId kEndId = 1;
inline constexpr WordId kUnknownId = 2;

inline constexpr int kMaxOrder = 5;
inline constexpr std::uint32_t kFormatVersion = 1;

// Modified Kneser-Ney discounts for one order. `fallback` marks orders whose
// count-of-count statistics left a discount undefined, in which case all three
// are the absolute discount 0.75.
struct Discounts {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3plus = 0.0;
  bool fallback = false;

  double operator()(std::uint64_t count) const {
    if (count == 0) return 0.0;
    if (count == 1) return d1;
    if (count == 2) return d2;
    return d3plus;
  }
};

// Statistics of one context h at one order: sum of counts over h w, the number
// of words following h exactly once / twice / three or more times, and the
// interpolation mass gamma(h) handed to the lower order.
struct ContextStats {
  std::uint64_t total = 0;
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  std::uint64_t n3plus = 0;
  double gamma = 0.0;
};

struct NgramCounts {
  std::uint64_t raw = 0;       // occurrences in the padded training data
  std::uint64_t adjusted = 0;  // continuation count below the top order, raw at the top
};

// Interpolated modified Kneser-Ney language model. Immutable once built by
// train() or load(); concurrent scoring is safe.
class NGramModel {
 public:
  int order() const { return order_; }

  // id -> word. Ids 0, 1, 2 are always <s>, </s>, <unk>.
  const std::vector<std::string>& vocab() const { return vocab_; }
  // Number of predictable words: the vocabulary minus <s>.
  std::size_t predictable_size() const { return vocab_.size() - 1; }
  WordId lookup(std::string_view word) const;

  const Discounts& discounts(int order) const { return discounts_.at(order - 1); }
  // All n-grams of the given order with their counts.
  const std::map<Ngram, NgramCounts>& ngrams(int order) const { return ngrams_.at(order - 1); }
  // Contexts (length order-1) observed at the given order.
  const std::map<Ngram, ContextStats>& contexts(int order) const { return contexts_.at(order - 1); }

  NgramCounts counts(const Ngram& ngram) const;
  // gamma(context) at order context.size()+1, or nullopt if the context was
  // never observed at that order.
  std::optional<double> backoff(const Ngram& context) const;

  // P(word | context) over ids. Uses at most order-1 trailing context ids.
  double prob(std::span<const WordId> context, WordId word) const;

 private:
  friend NGramModel train(const std::vector<std::vector<std::string>>&, int);
  friend NGramModel deserialize(std::string_view, const std::string&);

  void finalize();

  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<Discounts> discounts_;
  std::vector<std::map<Ngram, NgramCounts>> ngrams_;
  std::vector<std::map<Ngram, ContextStats>> contexts_;
};

struct SurprisalSeries {
  std::string model_id;
  std::vector<std::pair<std::string, double>> entries;  // (token, surprisal in nats)
};

// Count-of-count based discounts: n[r-1] holds the number of n-grams with
// count r for r = 1..4.
Discounts modified_kn_discounts(const std::array<std::uint64_t, 4>& n);

// Each sentence is wrapped in <s> ... </s>. Throws ArgumentError for an order
// outside [1, 5], for an input with no words, or for sentences containing the
// boundary symbols.
NGramModel train(const std::vector<std::vector<std::string>>& sentences, int order);

// Interpolated probability of `word` after `context`. Out-of-vocabulary words
// map to <unk>; only the last order-1 context words are used.
double score(const NGramModel& model, const std::vector<std::string>& context, std::string_view word);

// Per-token surprisal (nats) with <s> as the initial context; <s> itself is
// not scored and no </s> is appended.
SurprisalSeries surprise(const NGramModel& model, const std::vector<std::string>& tokens,
                         std::string model_id = "ngram");

std::string serialize(const NGramModel& model);
NGramModel deserialize(std::string_view bytes, const std::string& origin = "<memory>");
void save(const NGramModel& model, const std::string& path);
NGramModel load(const std::string& path);

// ARPA-style text dump: log10 probability, n-gram, log10 backoff.
std::string arpa_dump(const NGramModel& model);

// Whitespace tokenized, one sentence per non-empty line.
std::vector<std::vector<std::string>> read_sentences(const std::string& path);

}  // namespace psyeval::ngram
