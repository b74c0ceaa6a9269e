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

#include "psyeval/surprisal.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

#include "psyeval/error.hpp"
#include "psyeval/io.hpp"

namespace psyeval::surprisal {

namespace {

constexpr std::string_view kColumns = "text_id\tword_index\tsubtoken_index\tsubtoken\tsurprisal";

// Surface form used to compare a word against its subtokens: drops
// whitespace and the usual word-boundary markers, folds ASCII case.
std::string comparable(std::string_view s) {
  static constexpr std::string_view kGpt2Space = "\xC4\xA0";       // U+0120
  static constexpr std::string_view kSentencePiece = "\xE2\x96\x81";  // U+2581
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s.substr(i, 2) == kGpt2Space) {
      i += 2;
      continue;
    }
    if (s.substr(i, 3) == kSentencePiece) {
      i += 3;
      continue;
    }
    const auto c = static_cast<unsigned char>(s[i]);
    if (!std::isspace(c)) out += static_cast<char>(std::tolower(c));
    ++i;
  }
  return out;
}

int int_field(std::string_view f, const std::string& origin, std::size_t line, const char* name,
              std::int64_t min_value) {
  std::int64_t v = 0;
  if (!io::parse_int(f, v) || v < min_value || v > std::numeric_limits<int>::max())
    throw ParseError(origin, line, std::string("bad ") + name + " '" + std::string(f) + "'");
  return static_cast<int>(v);
}

}  // namespace

LogBase parse_log_base(std::string_view name) {
  if (name == "nats") return LogBase::Nats;
  if (name == "bits") return LogBase::Bits;
  throw ArgumentError("unknown log base '" + std::string(name) + "' (expected nats or bits)");
}

SurprisalDump parse_dump(std::string_view text, const std::string& origin, LogBase base) {
  auto lines = io::split_lines(text);
  if (lines.empty() || lines.front().empty() || lines.front().front() != '#')
    throw ParseError(origin, 1, "expected '# <model_id>\\t<vocab_size>' line");
  SurprisalDump dump;
  {
    std::string_view head = lines.front().substr(1);
    while (!head.empty() && head.front() == ' ') head.remove_prefix(1);
    auto f = io::split_tabs(head);
    if (f.size() != 2 || f[0].empty()) throw ParseError(origin, 1, "expected model_id and vocab_size");
    dump.model_id = std::string(f[0]);
    if (!io::parse_int(f[1], dump.vocab_size) || dump.vocab_size <= 0)
      throw ParseError(origin, 1, "vocab_size must be a positive integer");
  }
  std::size_t first = 1;
  if (lines.size() > 1 && lines[1] == kColumns) first = 2;
  const double scale = base == LogBase::Bits ? std::numbers::ln2 : 1.0;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    if (lines[i].empty()) continue;
    auto f = io::split_tabs(lines[i]);
    if (f.size() != 5) throw ParseError(origin, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    DumpRow row;
    row.text_id = int_field(f[0], origin, lineno, "text_id", std::numeric_limits<int>::min());
    row.word_index = int_field(f[1], origin, lineno, "word_index", 0);
    row.subtoken_index = int_field(f[2], origin, lineno, "subtoken_index", 0);
    row.subtoken = std::string(f[3]);
    double s = 0.0;
    if (!io::parse_double(f[4], s) || s < 0.0)
      throw ParseError(origin, lineno, "surprisal must be a finite non-negative number");
    row.surprisal_nats = s * scale;
    dump.rows.push_back(std::move(row));
  }
  return dump;
}

SurprisalDump load_dump(const std::string& path, LogBase base) {
  return parse_dump(io::read_file(path), path, base);
}

std::string serialize_dump(const SurprisalDump& dump) {
  std::string out = "# " + dump.model_id + '\t' + std::to_string(dump.vocab_size) + '\n';
  out += kColumns;
  out += '\n';
  for (const auto& r : dump.rows)
    out += std::to_string(r.text_id) + '\t' + std::to_string(r.word_index) + '\t' +
           std::to_string(r.subtoken_index) + '\t' + r.subtoken + '\t' + io::format_double(r.surprisal_nats) +
           '\n';
  return out;
}

std::vector<std::string> lm_tokenize(std::string_view surface) {
  std::vector<std::string> out;
  std::string run;
  for (char c : surface) {
    if (std::ispunct(static_cast<unsigned char>(c))) {
      if (!run.empty()) out.push_back(std::move(run));
      run.clear();
      out.emplace_back(1, c);
    } else {
      run += c;
    }
  }
  if (!run.empty()) out.push_back(std::move(run));
  return out;
}

SurprisalDump score_corpus(const ngram::NGramModel& model, const std::vector<corpus::CorpusToken>& tokens,
                           const std::string& model_id) {
  SurprisalDump dump;
  dump.model_id = model_id;
  dump.vocab_size = static_cast<std::int64_t>(model.predictable_size());
  std::vector<ngram::WordId> context;
  int text = 0;
  bool first = true;
  for (const auto& tok : tokens) {
    if (first || tok.text_id != text) {
      context.assign(1, ngram::kBeginId);
      text = tok.text_id;
      first = false;
    }
    int sub = 0;
    for (auto& piece : lm_tokenize(tok.surface)) {
      const ngram::WordId id = model.lookup(piece);
      const double s = -std::log(model.prob(context, id));
      context.push_back(id);
      dump.rows.push_back({tok.text_id, tok.word_index, sub++, std::move(piece), s});
    }
  }
  return dump;
}

WordSurprisalSeries align(const SurprisalDump& dump, const std::vector<corpus::CorpusToken>& tokens) {
  std::map<corpus::TokenKey, const corpus::CorpusToken*> by_key;
  for (const auto& t : tokens) by_key[t.key()] = &t;

  std::map<corpus::TokenKey, std::vector<const DumpRow*>> grouped;
  for (const auto& r : dump.rows) {
    if (!by_key.count(r.key()))
      throw AlignmentError(dump.model_id + ": dump row refers to token " + corpus::to_string(r.key()) +
                           " which is not in the corpus");
    grouped[r.key()].push_back(&r);
  }

  std::vector<corpus::TokenKey> missing;
  for (const auto& [key, tok] : by_key)
    if (!grouped.count(key)) missing.push_back(key);
  if (!missing.empty()) {
    std::string msg = dump.model_id + ": " + std::to_string(missing.size()) + " corpus word(s) have no surprisal:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
      msg += " " + corpus::to_string(missing[i]) + " '" + by_key[missing[i]]->surface + "'";
    throw AlignmentError(msg);
  }

  WordSurprisalSeries series;
  series.model_id = dump.model_id;
  series.token_count_lm = static_cast<std::int64_t>(dump.rows.size());
  for (auto& [key, rows] : grouped) {
    std::sort(rows.begin(), rows.end(),
              [](const DumpRow* a, const DumpRow* b) { return a->subtoken_index < b->subtoken_index; });
    double total = 0.0;
    std::string joined;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i]->subtoken_index != static_cast<int>(i))
        throw FormatError(dump.model_id + ": subtoken_index for token " + corpus::to_string(key) +
                          " is not contiguous from 0 (found " + std::to_string(rows[i]->subtoken_index) +
                          " at position " + std::to_string(i) + ")");
      total += rows[i]->surprisal_nats;
      joined += rows[i]->subtoken;
    }
    const auto& surface = by_key[key]->surface;
    if (comparable(joined) != comparable(surface))
      throw AlignmentError(dump.model_id + ": subtokens '" + joined + "' do not spell corpus word '" + surface +
                           "' at " + corpus::to_string(key));
    series.values.emplace(key, total);
  }
  return series;
}

namespace {

// Neumaier-compensated sum; corpora run to tens of thousands of tokens.
template <typename Range, typename Get>
double compensated_sum(const Range& range, Get get) {
  double sum = 0.0, carry = 0.0;
  for (const auto& item : range) {
    const double x = get(item);
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

}  // namespace

double perplexity(const std::vector<double>& surprisals_nats) {
  if (surprisals_nats.empty()) throw ArgumentError("perplexity of an empty token sequence");
  const double sum = compensated_sum(surprisals_nats, [](double s) { return s; });
  return std::exp(sum / static_cast<double>(surprisals_nats.size()));
}

double perplexity(const SurprisalDump& dump) {
  std::vector<double> s;
  s.reserve(dump.rows.size());
  for (const auto& r : dump.rows) s.push_back(r.surprisal_nats);
  return perplexity(s);
}

double perplexity(const WordSurprisalSeries& series) {
  if (series.token_count_lm <= 0) throw ArgumentError("perplexity of an empty token sequence");
  const double sum = compensated_sum(series.values, [](const auto& kv) { return kv.second; });
  return std::exp(sum / static_cast<double>(series.token_count_lm));
}

double normalized_perplexity(double ppl, std::int64_t vocab_size) {
  if (vocab_size <= 0) throw ArgumentError("vocabulary size must be positive");
  if (!(ppl > 0.0)) throw ArgumentError("perplexity must be positive");
  return ppl / static_cast<double>(vocab_size);
}

}  // namespace psyeval::surprisal
