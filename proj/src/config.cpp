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

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/io.hpp"

namespace psyeval::eval {

namespace {

struct Value {
  std::string text;               // scalar, unquoted
  std::vector<std::string> list;  // for [a, b, ...]
  bool is_list = false;
  std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Removes a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::string unquote(std::string_view s, const std::string& origin, std::size_t line) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return std::string(s.substr(1, s.size() - 2));
  if (s.find('"') != std::string_view::npos) throw ParseError(origin, line, "unbalanced quotes");
  return std::string(s);
}

Value parse_value(std::string_view raw, const std::string& origin, std::size_t line) {
  Value v;
  v.line = line;
  raw = trim(raw);
  if (raw.empty()) throw ParseError(origin, line, "missing value");
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ParseError(origin, line, "unterminated list");
    v.is_list = true;
    std::string_view body = raw.substr(1, raw.size() - 2);
    std::size_t start = 0;
    while (start <= body.size()) {
      std::size_t comma = body.find(',', start);
      std::string_view item = body.substr(start, comma == std::string_view::npos ? body.npos : comma - start);
      if (!trim(item).empty()) v.list.push_back(unquote(item, origin, line));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return v;
  }
  v.text = unquote(raw, origin, line);
  return v;
}

class Table {
 public:
  Table(std::string name, std::map<std::string, Value> values, const std::string& origin)
      : name_(std::move(name)), values_(std::move(values)), origin_(origin) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const Value& at(const std::string& key) const {
    used_.insert(key);
    return values_.at(key);
  }

  std::string str(const std::string& key, std::string fallback = {}) const {
    if (!has(key)) return fallback;
    const Value& v = at(key);
    if (v.is_list) throw ParseError(origin_, v.line, key + " must be a scalar");
    return v.text;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const Value& v = at(key);
    double d = 0.0;
    if (v.is_list || !io::parse_double(v.text, d)) throw ParseError(origin_, v.line, key + " must be a number");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const Value& v = at(key);
    std::int64_t i = 0;
    if (v.is_list || !io::parse_int(v.text, i)) throw ParseError(origin_, v.line, key + " must be an integer");
    return i;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Value& v = at(key);
    if (v.text == "true") return true;
    if (v.text == "false") return false;
    throw ParseError(origin_, v.line, key + " must be true or false");
  }

  // Rejects keys nobody asked for.
  void check_unused() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k))
        throw ParseError(origin_, v.line, "unknown key '" + k + "'" + (name_.empty() ? "" : " in [" + name_ + "]"));
  }

 private:
  std::string name_;
  std::map<std::string, Value> values_;
  const std::string& origin_;
  mutable std::set<std::string> used_;
};

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

Config parse_config(std::string_view text, const std::string& base_dir, const std::string& origin) {
  std::vector<std::pair<std::string, std::map<std::string, Value>>> tables;
  tables.emplace_back("", std::map<std::string, Value>{});
  std::set<std::string> seen_tables;
  auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string_view line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(origin, lineno, "unterminated table header");
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (name != "report" && name.rfind("model.", 0) != 0)
        throw ParseError(origin, lineno, "unknown table [" + name + "]");
      if (name == "model.") throw ParseError(origin, lineno, "model table needs an id");
      if (!seen_tables.insert(name).second) throw ParseError(origin, lineno, "duplicate table [" + name + "]");
      tables.emplace_back(name, std::map<std::string, Value>{});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(origin, lineno, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(origin, lineno, "empty key");
    auto& table = tables.back().second;
    if (!table.emplace(key, parse_value(line.substr(eq + 1), origin, lineno)).second)
      throw ParseError(origin, lineno, "duplicate key '" + key + "'");
  }

  Config c;
  for (auto& [name, values] : tables) {
    Table t(name, std::move(values), origin);
    if (name.empty()) {
      c.corpus_path = resolve(base_dir, t.str("corpus"));
      c.norms_path = resolve(base_dir, t.str("norms"));
      c.frequency_path = resolve(base_dir, t.str("frequency"));
      if (t.has("measures")) {
        const Value& v = t.at("measures");
        std::vector<std::string> names = v.is_list ? v.list : std::vector<std::string>{v.text};
        c.measures.clear();
        if (names.size() == 1 && names[0] == "all") names = {"ffd", "gd", "td"};
        for (const auto& m : names) {
          const corpus::Measure parsed = corpus::parse_measure(m);
          if (std::find(c.measures.begin(), c.measures.end(), parsed) == c.measures.end())
            c.measures.push_back(parsed);
        }
      }
      c.gam.spline_basis = static_cast<int>(t.integer("spline_basis", c.gam.spline_basis));
      c.gam.tensor_margin = static_cast<int>(t.integer("tensor_margin", c.gam.tensor_margin));
      c.gam.log_response = t.boolean("log_response", c.gam.log_response);
      c.log10_lambda_min = t.number("log10_lambda_min", c.log10_lambda_min);
      c.log10_lambda_max = t.number("log10_lambda_max", c.log10_lambda_max);
      c.cloze_alpha = t.number("cloze_alpha", c.cloze_alpha);
      c.pnc_retained_only = t.boolean("pnc_retained_only", c.pnc_retained_only);
      c.jobs = static_cast<int>(t.integer("jobs", c.jobs));
    } else if (name == "report") {
      c.report_csv = resolve(base_dir, t.str("csv"));
      c.report_json = resolve(base_dir, t.str("json"));
      c.report_svg = resolve(base_dir, t.str("svg"));
    } else {
      ModelEntry m;
      m.model_id = name.substr(6);
      const std::string source = t.str("source", "dump");
      if (source == "dump")
        m.source = ModelEntry::Source::Dump;
      else if (source == "ngram")
        m.source = ModelEntry::Source::Ngram;
      else
        throw ArgumentError(origin + ": model '" + m.model_id + "' has unknown source '" + source + "'");
      m.path = resolve(base_dir, t.str("path"));
      m.train_path = resolve(base_dir, t.str("train"));
      m.order = static_cast<int>(t.integer("order", m.order));
      m.vocab_size = t.integer("vocab_size", 0);
      m.log_base = surprisal::parse_log_base(t.str("log_base", "nats"));
      if (m.vocab_size < 0) throw ArgumentError(origin + ": vocab_size must be positive");
      if (m.source == ModelEntry::Source::Dump && m.path.empty())
        throw ArgumentError(origin + ": dump model '" + m.model_id + "' needs a path");
      if (m.source == ModelEntry::Source::Ngram && m.path.empty() && m.train_path.empty())
        throw ArgumentError(origin + ": n-gram model '" + m.model_id + "' needs a path or train file");
      c.models.push_back(std::move(m));
    }
    t.check_unused();
  }
  if (c.corpus_path.empty() || c.norms_path.empty() || c.frequency_path.empty())
    throw ArgumentError(origin + ": corpus, norms and frequency paths are required");
  if (c.measures.empty()) throw ArgumentError(origin + ": no measures selected");
  if (c.jobs < 1) throw ArgumentError(origin + ": jobs must be at least 1");
  return c;
}

Config load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(io::read_file(path), base.empty() ? "." : base, path);
}

}  // namespace psyeval::eval
