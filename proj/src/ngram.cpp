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

#include "psyeval/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#include "psyeval/error.hpp"
#include "psyeval/io.hpp"

namespace psyeval::ngram {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'Y', 'N', 'G', 'R', 'A', 'M'};
constexpr char kTrailer[8] = {'E', 'N', 'D', 'N', 'G', 'R', 'A', 'M'};
constexpr double kFallbackDiscount = 0.75;
constexpr double kMaxDiscount = 0.999;

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view data, const std::string& origin) : data_(data), origin_(origin) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() {
    auto s = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = bytes(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n)
      throw FormatError(origin_ + ": truncated model file at byte " + std::to_string(pos_));
  }
  std::string_view data_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

Discounts modified_kn_discounts(const std::array<std::uint64_t, 4>& n) {
  Discounts d;
  if (n[0] == 0 || n[1] == 0 || n[2] == 0) {
    d.d1 = d.d2 = d.d3plus = kFallbackDiscount;
    d.fallback = true;
    return d;
  }
  const double n1 = static_cast<double>(n[0]);
  const double n2 = static_cast<double>(n[1]);
  const double n3 = static_cast<double>(n[2]);
  const double n4 = static_cast<double>(n[3]);
  const double y = n1 / (n1 + 2.0 * n2);
  auto clamp = [](double v) { return std::clamp(v, 0.0, kMaxDiscount); };
  d.d1 = clamp(1.0 - 2.0 * y * n2 / n1);
  d.d2 = clamp(2.0 - 3.0 * y * n3 / n2);
  d.d3plus = clamp(3.0 - 4.0 * y * n4 / n3);
  return d;
}

WordId NGramModel::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnknownId : it->second;
}

NgramCounts NGramModel::counts(const Ngram& ngram) const {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) return {};
  const auto& table = ngrams_[ngram.size() - 1];
  auto it = table.find(ngram);
  return it == table.end() ? NgramCounts{} : it->second;
}

std::optional<double> NGramModel::backoff(const Ngram& context) const {
  if (static_cast<int>(context.size()) >= order_) return std::nullopt;
  const auto& table = contexts_[context.size()];
  auto it = table.find(context);
  if (it == table.end()) return std::nullopt;
  return it->second.gamma;
}

double NGramModel::prob(std::span<const WordId> context, WordId word) const {
  if (word == kBeginId) return 0.0;
  if (word >= vocab_.size()) word = kUnknownId;
  const std::size_t max_ctx = static_cast<std::size_t>(order_ - 1);
  if (context.size() > max_ctx) context = context.subspan(context.size() - max_ctx);

  double p = 1.0 / static_cast<double>(predictable_size());
  Ngram key;
  key.reserve(context.size() + 1);
  for (std::size_t len = 0; len <= context.size(); ++len) {
    key.assign(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
    const auto& ctx_table = contexts_[len];
    auto ctx = ctx_table.find(key);
    // A context unseen at this order is unseen at every higher order too.
    if (ctx == ctx_table.end()) break;
    key.push_back(word);
    const auto& table = ngrams_[len];
    auto it = table.find(key);
    const std::uint64_t a = it == table.end() ? 0 : it->second.adjusted;
    const double discounted = std::max(static_cast<double>(a) - discounts_[len](a), 0.0);
    p = discounted / static_cast<double>(ctx->second.total) + ctx->second.gamma * p;
  }
  return p;
}

void NGramModel::finalize() {
  ids_.clear();
  for (WordId i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], i);
  contexts_.assign(static_cast<std::size_t>(order_), {});
  for (int k = 1; k <= order_; ++k) {
    auto& ctxs = contexts_[k - 1];
    for (const auto& [ngram, c] : ngrams_[k - 1]) {
      if (c.adjusted == 0) continue;
      Ngram h(ngram.begin(), ngram.end() - 1);
      ContextStats& s = ctxs[h];
      s.total += c.adjusted;
      if (c.adjusted == 1)
        ++s.n1;
      else if (c.adjusted == 2)
        ++s.n2;
      else
        ++s.n3plus;
    }
    const Discounts& d = discounts_[k - 1];
    for (auto& [h, s] : ctxs)
      s.gamma = (d.d1 * static_cast<double>(s.n1) + d.d2 * static_cast<double>(s.n2) +
                 d.d3plus * static_cast<double>(s.n3plus)) /
                static_cast<double>(s.total);
  }
}

NGramModel train(const std::vector<std::vector<std::string>>& sentences, int order) {
  if (order < 1 || order > kMaxOrder)
    throw ArgumentError("n-gram order must be in [1, " + std::to_string(kMaxOrder) + "], got " +
                        std::to_string(order));
  std::set<std::string> words;
  for (const auto& s : sentences)
    for (const auto& w : s) {
      if (w == kBeginSymbol || w == kEndSymbol)
        throw ArgumentError("training sentences must not contain boundary symbol '" + w + "'");
      if (w != kUnknownSymbol) words.insert(w);
    }
  if (words.empty() &&
      std::none_of(sentences.begin(), sentences.end(), [](const auto& s) { return !s.empty(); }))
    throw ArgumentError("training data contains no words");

  NGramModel m;
  m.order_ = order;
  m.vocab_ = {std::string(kBeginSymbol), std::string(kEndSymbol), std::string(kUnknownSymbol)};
  m.vocab_.insert(m.vocab_.end(), words.begin(), words.end());
  for (WordId i = 0; i < m.vocab_.size(); ++i) m.ids_.emplace(m.vocab_[i], i);

  m.ngrams_.assign(static_cast<std::size_t>(order), {});
  Ngram padded;
  for (const auto& s : sentences) {
    padded.assign(1, kBeginId);
    for (const auto& w : s) padded.push_back(m.lookup(w));
    padded.push_back(kEndId);
    for (std::size_t i = 1; i < padded.size(); ++i)
      for (std::size_t k = 1; k <= static_cast<std::size_t>(order) && k <= i + 1; ++k)
        ++m.ngrams_[k - 1][Ngram(padded.begin() + static_cast<std::ptrdiff_t>(i + 1 - k),
                                 padded.begin() + static_cast<std::ptrdiff_t>(i + 1))]
              .raw;
  }

  // Top order keeps raw counts; below it, n-grams that start with <s> cannot
  // be extended to the left and keep raw counts too, the rest get the number
  // of distinct left extensions.
  for (int k = order; k >= 1; --k) {
    auto& table = m.ngrams_[k - 1];
    if (k == order) {
      for (auto& [g, c] : table) c.adjusted = c.raw;
      continue;
    }
    for (auto& [g, c] : table)
      if (g.front() == kBeginId) c.adjusted = c.raw;
    for (const auto& [g, c] : m.ngrams_[k]) {
      if (g[1] == kBeginId) continue;
      ++table[Ngram(g.begin() + 1, g.end())].adjusted;
    }
  }

  m.discounts_.clear();
  for (int k = 1; k <= order; ++k) {
    std::array<std::uint64_t, 4> coc{};
    for (const auto& [g, c] : m.ngrams_[k - 1])
      if (c.adjusted >= 1 && c.adjusted <= 4) ++coc[c.adjusted - 1];
    m.discounts_.push_back(modified_kn_discounts(coc));
  }
  m.finalize();
  return m;
}

double score(const NGramModel& model, const std::vector<std::string>& context, std::string_view word) {
  std::vector<WordId> ids;
  ids.reserve(context.size());
  for (const auto& w : context) ids.push_back(model.lookup(w));
  return model.prob(ids, model.lookup(word));
}

SurprisalSeries surprise(const NGramModel& model, const std::vector<std::string>& tokens,
                         std::string model_id) {
  SurprisalSeries out;
  out.model_id = std::move(model_id);
  std::vector<WordId> context{kBeginId};
  for (const auto& t : tokens) {
    const WordId id = model.lookup(t);
    out.entries.emplace_back(t, -std::log(model.prob(context, id)));
    context.push_back(id);
  }
  return out;
}

std::string serialize(const NGramModel& model) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.order()));
  w.u32(static_cast<std::uint32_t>(model.vocab().size()));
  for (const auto& word : model.vocab()) {
    w.u32(static_cast<std::uint32_t>(word.size()));
    w.bytes(word.data(), word.size());
  }
  for (int k = 1; k <= model.order(); ++k) {
    const Discounts& d = model.discounts(k);
    w.f64(d.d1);
    w.f64(d.d2);
    w.f64(d.d3plus);
    w.u8(d.fallback ? 1 : 0);
    const auto& table = model.ngrams(k);
    w.u64(table.size());
    for (const auto& [g, c] : table) {
      for (WordId id : g) w.u32(id);
      w.u64(c.raw);
      w.u64(c.adjusted);
    }
  }
  w.bytes(kTrailer, sizeof kTrailer);
  return w.take();
}

NGramModel deserialize(std::string_view bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError(origin + ": not an n-gram model file (bad magic bytes)");
  r.bytes(sizeof kMagic);
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw VersionError(origin + ": model file version " + std::to_string(version) +
                       " is not supported (this build reads version " +
                       std::to_string(kFormatVersion) + ")");
  NGramModel m;
  const std::uint32_t order = r.u32();
  if (order < 1 || order > static_cast<std::uint32_t>(kMaxOrder))
    throw FormatError(origin + ": invalid order " + std::to_string(order));
  m.order_ = static_cast<int>(order);
  const std::uint32_t vocab_size = r.u32();
  if (vocab_size < 3) throw FormatError(origin + ": vocabulary lacks the reserved symbols");
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    const std::uint32_t len = r.u32();
    m.vocab_.emplace_back(r.bytes(len));
  }
  if (m.vocab_[kBeginId] != kBeginSymbol || m.vocab_[kEndId] != kEndSymbol ||
      m.vocab_[kUnknownId] != kUnknownSymbol)
    throw FormatError(origin + ": reserved symbols missing from vocabulary");
  m.ngrams_.assign(order, {});
  for (std::uint32_t k = 1; k <= order; ++k) {
    Discounts d;
    d.d1 = r.f64();
    d.d2 = r.f64();
    d.d3plus = r.f64();
    d.fallback = r.u8() != 0;
    m.discounts_.push_back(d);
    const std::uint64_t n = r.u64();
    auto& table = m.ngrams_[k - 1];
    for (std::uint64_t i = 0; i < n; ++i) {
      Ngram g(k);
      for (auto& id : g) {
        id = r.u32();
        if (id >= vocab_size) throw FormatError(origin + ": word id out of range");
      }
      NgramCounts c;
      c.raw = r.u64();
      c.adjusted = r.u64();
      table.emplace_hint(table.end(), std::move(g), c);
    }
  }
  if (std::memcmp(r.bytes(sizeof kTrailer).data(), kTrailer, sizeof kTrailer) != 0 || !r.at_end())
    throw FormatError(origin + ": corrupt model file trailer");
  m.finalize();
  return m;
}

void save(const NGramModel& model, const std::string& path) { io::atomic_write(path, serialize(model)); }

NGramModel load(const std::string& path) { return deserialize(io::read_file(path), path); }

std::string arpa_dump(const NGramModel& model) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return std::string(buf);
  };
  auto words = [&](const Ngram& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i) s += ' ';
      s += model.vocab()[g[i]];
    }
    return s;
  };

  // Unigram section lists every vocabulary word; higher orders list observed
  // n-grams only.
  std::vector<std::vector<Ngram>> listed(static_cast<std::size_t>(model.order()));
  for (WordId id = 0; id < model.vocab().size(); ++id) listed[0].push_back({id});
  for (int k = 2; k <= model.order(); ++k)
    for (const auto& [g, c] : model.ngrams(k)) listed[k - 1].push_back(g);

  std::ostringstream out;
  out << "\\data\\\n";
  for (int k = 1; k <= model.order(); ++k) out << "ngram " << k << "=" << listed[k - 1].size() << "\n";
  for (int k = 1; k <= model.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& g : listed[k - 1]) {
      const std::span<const WordId> ctx(g.data(), g.size() - 1);
      const double p = model.prob(ctx, g.back());
      out << (p > 0.0 ? fmt(std::log10(p)) : std::string("-99")) << '\t' << words(g);
      if (auto bo = model.backoff(g)) out << '\t' << fmt(std::log10(*bo));
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

std::vector<std::vector<std::string>> read_sentences(const std::string& path) {
  const std::string text = io::read_file(path);
  std::vector<std::vector<std::string>> sentences;
  for (auto line : io::split_lines(text)) {
    std::istringstream in{std::string(line)};
    std::vector<std::string> s;
    for (std::string w; in >> w;) s.push_back(std::move(w));
    if (!s.empty()) sentences.push_back(std::move(s));
  }
  return sentences;
}

}  // namespace psyeval::ngram
