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

#include "psyeval/corpus.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <utility>

#include "psyeval/error.hpp"
#include "psyeval/io.hpp"

namespace psyeval::corpus {

namespace {

constexpr std::string_view kEyetrackingHeader =
    "text_id\tword_index\tword\tsubject_id\tffd_ms\tgd_ms\ttd_ms";
constexpr std::string_view kClozeHeader = "text_id\tword_index\tword\tn_responses\tn_correct";
constexpr std::string_view kFrequencyHeader = "word\tcount";

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Lines after the header, with their 1-based line numbers. Returns false for
// an empty input.
bool body_lines(std::string_view text, std::string_view header, const std::string& origin,
                std::vector<std::pair<std::size_t, std::string_view>>& out) {
  auto lines = io::split_lines(text);
  if (lines.empty()) return false;
  if (lines.front() != header)
    throw ParseError(origin, 1, "expected header '" + std::string(header) + "'");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.emplace_back(i + 1, lines[i]);
  }
  return true;
}

int field_int(std::string_view field, const std::string& origin, std::size_t line,
              const char* name, std::int64_t min_value) {
  std::int64_t v = 0;
  if (!io::parse_int(field, v) || v < min_value || v > std::numeric_limits<int>::max())
    throw ParseError(origin, line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return static_cast<int>(v);
}

std::optional<double> duration_field(std::string_view field, const std::string& origin,
                                     std::size_t line, const char* name) {
  int v = field_int(field, origin, line, name, 0);
  if (v == 0) return std::nullopt;
  return static_cast<double>(v);
}

void append_duration(std::string& out, const std::optional<double>& d) {
  out += d ? std::to_string(static_cast<long long>(std::llround(*d))) : "0";
}

}  // namespace

std::string to_string(const TokenKey& key) {
  return "(" + std::to_string(key.text_id) + "," + std::to_string(key.word_index) + ")";
}

CorpusToken make_token(int text_id, int word_index, std::string surface) {
  CorpusToken tok;
  tok.text_id = text_id;
  tok.word_index = word_index;
  tok.surface = std::move(surface);
  const std::string& s = tok.surface;
  for (char c : s)
    if (is_letter(c)) tok.stripped += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (!s.empty()) {
    tok.has_leading_punct = is_punct(s.front());
    tok.has_trailing_punct = is_punct(s.back());
  }
  std::size_t b = 0, e = s.size();
  while (b < e && is_punct(s[b])) ++b;
  while (e > b && is_punct(s[e - 1])) --e;
  tok.is_alphabetic = b < e;
  for (std::size_t i = b; i < e; ++i)
    if (!is_letter(s[i])) tok.is_alphabetic = false;
  return tok;
}

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::FFD: return "ffd";
    case Measure::GD: return "gd";
    case Measure::TD: return "td";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "ffd") return Measure::FFD;
  if (lower == "gd") return Measure::GD;
  if (lower == "td") return Measure::TD;
  throw ArgumentError("unknown measure '" + std::string(name) + "' (expected ffd, gd or td)");
}

std::optional<double> ReadingRecord::duration(Measure m) const {
  switch (m) {
    case Measure::FFD: return ffd_ms;
    case Measure::GD: return gd_ms;
    case Measure::TD: return td_ms;
  }
  return std::nullopt;
}

FrequencyTable::FrequencyTable(std::map<std::string, std::int64_t> counts)
    : counts_(std::move(counts)) {
  for (const auto& [word, c] : counts_) {
    if (c <= 0) throw ArgumentError("frequency count for '" + word + "' must be positive");
    total_ += c;
  }
}

std::int64_t FrequencyTable::count(const std::string& word) const {
  auto it = counts_.find(word);
  if (it == counts_.end()) throw LookupError("word '" + word + "' has no frequency estimate");
  return it->second;
}

EyetrackingData parse_eyetracking(std::string_view text, const std::string& origin) {
  EyetrackingData data;
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  if (!body_lines(text, kEyetrackingHeader, origin, lines)) return data;

  std::map<TokenKey, std::string> surfaces;
  std::map<std::pair<std::string, int>, int> last_index;  // (subject, text) -> word_index
  for (const auto& [lineno, line] : lines) {
    auto f = io::split_tabs(line);
    if (f.size() != 7)
      throw ParseError(origin, lineno, "expected 7 fields, got " + std::to_string(f.size()));
    ReadingRecord rec;
    rec.text_id = field_int(f[0], origin, lineno, "text_id", std::numeric_limits<int>::min());
    rec.word_index = field_int(f[1], origin, lineno, "word_index", 0);
    if (f[2].empty()) throw ParseError(origin, lineno, "empty word");
    if (f[3].empty()) throw ParseError(origin, lineno, "empty subject_id");
    rec.subject_id = std::string(f[3]);
    rec.ffd_ms = duration_field(f[4], origin, lineno, "ffd_ms");
    rec.gd_ms = duration_field(f[5], origin, lineno, "gd_ms");
    rec.td_ms = duration_field(f[6], origin, lineno, "td_ms");
    rec.fixated = rec.ffd_ms || rec.gd_ms || rec.td_ms;
    if (rec.ffd_ms && rec.gd_ms && rec.td_ms && !(*rec.td_ms >= *rec.gd_ms && *rec.gd_ms >= *rec.ffd_ms))
      throw ParseError(origin, lineno, "durations must satisfy td >= gd >= ffd");

    auto [it, inserted] = surfaces.emplace(rec.key(), std::string(f[2]));
    if (!inserted && it->second != f[2])
      throw FormatError(origin + ":" + std::to_string(lineno) + ": word " + to_string(rec.key()) +
                        " is '" + std::string(f[2]) + "' but was '" + it->second + "' earlier");

    auto [li, fresh] = last_index.emplace(std::make_pair(rec.subject_id, rec.text_id), rec.word_index);
    if (!fresh) {
      if (rec.word_index <= li->second)
        throw FormatError(origin + ":" + std::to_string(lineno) + ": word_index " +
                          std::to_string(rec.word_index) + " not increasing for subject '" +
                          rec.subject_id + "' in text " + std::to_string(rec.text_id));
      li->second = rec.word_index;
    }
    data.readings.push_back(std::move(rec));
  }

  int current_text = 0;
  int expected = 0;
  bool first = true;
  for (auto& [key, surface] : surfaces) {
    if (first || key.text_id != current_text) {
      current_text = key.text_id;
      expected = 0;
      first = false;
    }
    if (key.word_index != expected)
      throw FormatError(origin + ": text " + std::to_string(key.text_id) + " jumps from word_index " +
                        std::to_string(expected - 1) + " to " + std::to_string(key.word_index));
    ++expected;
    data.tokens.push_back(make_token(key.text_id, key.word_index, std::move(surface)));
  }
  return data;
}

EyetrackingData load_eyetracking(const std::string& path) {
  return parse_eyetracking(io::read_file(path), path);
}

std::vector<CorpusToken> load_corpus(const std::string& path) {
  return load_eyetracking(path).tokens;
}

std::string serialize_eyetracking(const EyetrackingData& data) {
  std::map<TokenKey, const CorpusToken*> by_key;
  for (const auto& t : data.tokens) by_key[t.key()] = &t;
  std::string out(kEyetrackingHeader);
  out += '\n';
  for (const auto& r : data.readings) {
    auto it = by_key.find(r.key());
    if (it == by_key.end())
      throw FormatError("reading for unknown token " + to_string(r.key()));
    out += std::to_string(r.text_id) + '\t' + std::to_string(r.word_index) + '\t' +
           it->second->surface + '\t' + r.subject_id + '\t';
    append_duration(out, r.ffd_ms);
    out += '\t';
    append_duration(out, r.gd_ms);
    out += '\t';
    append_duration(out, r.td_ms);
    out += '\n';
  }
  return out;
}

FrequencyTable parse_frequency(std::string_view text, const std::string& origin) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::map<std::string, std::int64_t> counts;
  if (!body_lines(text, kFrequencyHeader, origin, lines)) return FrequencyTable{};
  for (const auto& [lineno, line] : lines) {
    auto f = io::split_tabs(line);
    if (f.size() != 2) throw ParseError(origin, lineno, "expected 2 fields");
    std::int64_t c = 0;
    if (f[0].empty()) throw ParseError(origin, lineno, "empty word");
    if (!io::parse_int(f[1], c) || c <= 0)
      throw ParseError(origin, lineno, "count must be a positive integer");
    if (!counts.emplace(std::string(f[0]), c).second)
      throw ParseError(origin, lineno, "duplicate word '" + std::string(f[0]) + "'");
  }
  return FrequencyTable(std::move(counts));
}

FrequencyTable load_frequency(const std::string& path) {
  return parse_frequency(io::read_file(path), path);
}

std::string serialize_frequency(const FrequencyTable& table) {
  std::string out(kFrequencyHeader);
  out += '\n';
  for (const auto& [w, c] : table.counts()) out += w + '\t' + std::to_string(c) + '\n';
  return out;
}

std::vector<ClozeNorm> parse_cloze(std::string_view text, const std::string& origin) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::vector<ClozeNorm> norms;
  if (!body_lines(text, kClozeHeader, origin, lines)) return norms;
  std::set<TokenKey> seen;
  for (const auto& [lineno, line] : lines) {
    auto f = io::split_tabs(line);
    if (f.size() != 5) throw ParseError(origin, lineno, "expected 5 fields");
    ClozeNorm n;
    n.text_id = field_int(f[0], origin, lineno, "text_id", std::numeric_limits<int>::min());
    n.word_index = field_int(f[1], origin, lineno, "word_index", 0);
    n.word = std::string(f[2]);
    n.n_responses = field_int(f[3], origin, lineno, "n_responses", 1);
    n.n_correct = field_int(f[4], origin, lineno, "n_correct", 0);
    if (n.n_correct > n.n_responses)
      throw ParseError(origin, lineno, "n_correct exceeds n_responses");
    if (!seen.insert(n.key()).second)
      throw ParseError(origin, lineno, "duplicate norm for token " + to_string(n.key()));
    norms.push_back(std::move(n));
  }
  return norms;
}

std::vector<ClozeNorm> load_cloze(const std::string& path) {
  return parse_cloze(io::read_file(path), path);
}

std::string serialize_cloze(const std::vector<ClozeNorm>& norms) {
  std::string out(kClozeHeader);
  out += '\n';
  for (const auto& n : norms)
    out += std::to_string(n.text_id) + '\t' + std::to_string(n.word_index) + '\t' + n.word + '\t' +
           std::to_string(n.n_responses) + '\t' + std::to_string(n.n_correct) + '\n';
  return out;
}

double log_unigram_prob(const FrequencyTable& freq, const std::string& word) {
  return std::log(static_cast<double>(freq.count(word)) / static_cast<double>(freq.total()));
}

std::map<TokenKey, ExclusionReason> exclusion_reasons(const std::vector<CorpusToken>& tokens,
                                                      const FrequencyTable& freq) {
  std::map<TokenKey, const CorpusToken*> by_key;
  std::map<int, int> text_length;
  for (const auto& t : tokens) {
    by_key[t.key()] = &t;
    int& len = text_length[t.text_id];
    len = std::max(len, t.word_index + 1);
  }
  std::map<TokenKey, ExclusionReason> reasons;
  for (const auto& [key, tok] : by_key) {
    const int len = text_length[key.text_id];
    auto next = by_key.find({key.text_id, key.word_index + 1});
    ExclusionReason r = ExclusionReason::None;
    if (key.word_index == 0 || key.word_index == len - 1)
      r = ExclusionReason::TextBoundary;
    else if (tok->has_trailing_punct || (next != by_key.end() && next->second->has_leading_punct))
      r = ExclusionReason::BeforePunctuation;
    else if (!tok->is_alphabetic)
      r = ExclusionReason::NonAlphabetic;
    else if (!freq.contains(tok->stripped))
      r = ExclusionReason::NoFrequency;
    reasons.emplace(key, r);
  }
  return reasons;
}

std::set<TokenKey> preprocess(const std::vector<CorpusToken>& tokens, const FrequencyTable& freq) {
  auto reasons = exclusion_reasons(tokens, freq);
  std::set<TokenKey> retained;
  for (const auto& [key, reason] : reasons) {
    if (reason != ExclusionReason::None) continue;
    auto prev = reasons.find({key.text_id, key.word_index - 1});
    if (prev == reasons.end() || prev->second != ExclusionReason::None) continue;
    retained.insert(key);
  }
  return retained;
}

std::vector<RegressionRow> build_rows(const std::vector<CorpusToken>& tokens,
                                      const std::vector<ReadingRecord>& readings,
                                      const std::set<TokenKey>& retained,
                                      const std::map<TokenKey, double>& surprisals,
                                      const FrequencyTable& freq, Measure measure) {
  std::map<TokenKey, const CorpusToken*> by_key;
  std::map<int, int> text_length;
  for (const auto& t : tokens) {
    by_key[t.key()] = &t;
    int& len = text_length[t.text_id];
    len = std::max(len, t.word_index + 1);
  }

  auto surprisal_of = [&](const TokenKey& key) {
    auto it = surprisals.find(key);
    if (it == surprisals.end())
      throw AlignmentError("no surprisal for token " + to_string(key) +
                           (by_key.count(key) ? " '" + by_key[key]->surface + "'" : std::string()));
    return it->second;
  };

  struct Features {
    double surp_cur, surp_prev, logfreq_cur, logfreq_prev, position;
    int len_cur, len_prev;
  };
  std::map<TokenKey, Features> features;
  for (const auto& key : retained) {
    const TokenKey prev{key.text_id, key.word_index - 1};
    auto cur_it = by_key.find(key);
    auto prev_it = by_key.find(prev);
    if (cur_it == by_key.end() || prev_it == by_key.end())
      throw AlignmentError("retained token " + to_string(key) + " or its predecessor is not in the corpus");
    const CorpusToken& cur = *cur_it->second;
    const CorpusToken& pre = *prev_it->second;
    Features f;
    f.surp_cur = surprisal_of(key);
    f.surp_prev = surprisal_of(prev);
    f.logfreq_cur = log_unigram_prob(freq, cur.stripped);
    f.logfreq_prev = log_unigram_prob(freq, pre.stripped);
    f.len_cur = static_cast<int>(cur.stripped.size());
    f.len_prev = static_cast<int>(pre.stripped.size());
    f.position = static_cast<double>(key.word_index) / static_cast<double>(text_length[key.text_id] - 1);
    features.emplace(key, f);
  }

  std::map<std::pair<std::string, TokenKey>, bool> fixated;
  for (const auto& r : readings) fixated[{r.subject_id, r.key()}] = r.fixated;

  std::vector<RegressionRow> rows;
  for (const auto& r : readings) {
    auto fit = features.find(r.key());
    if (fit == features.end()) continue;
    auto d = r.duration(measure);
    if (!d || *d <= 0.0) continue;
    const Features& f = fit->second;
    RegressionRow row;
    row.subject_id = r.subject_id;
    row.response_ms = *d;
    row.measure = measure;
    row.surp_cur = f.surp_cur;
    row.surp_prev = f.surp_prev;
    row.len_cur = f.len_cur;
    row.len_prev = f.len_prev;
    row.logfreq_cur = f.logfreq_cur;
    row.logfreq_prev = f.logfreq_prev;
    row.position = f.position;
    auto pf = fixated.find({r.subject_id, TokenKey{r.text_id, r.word_index - 1}});
    row.prev_fixated = pf != fixated.end() && pf->second;
    row.source = r.key();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace psyeval::corpus
