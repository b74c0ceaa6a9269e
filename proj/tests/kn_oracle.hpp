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

// Brute-force interpolated modified Kneser-Ney, written from the textbook
// definitions over strings: raw counts come from scanning the padded text,
// continuation counts and denominators by enumerating the vocabulary. Only
// usable on tiny corpora.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace kn_oracle {

using Words = std::vector<std::string>;

class Oracle {
 public:
  Oracle(const std::vector<Words>& sentences, int order) : order_(order) {
    symbols_.insert("<s>");
    predictable_.insert("</s>");
    predictable_.insert("<unk>");
    for (const auto& s : sentences) {
      Words padded{"<s>"};
      for (const auto& w : s) {
        padded.push_back(w);
        predictable_.insert(w);
      }
      padded.push_back("</s>");
      padded_.push_back(padded);
    }
    for (const auto& w : predictable_) symbols_.insert(w);
    for (const auto& p : padded_)
      for (std::size_t end = 1; end < p.size(); ++end)
        for (std::size_t len = 1; len <= end + 1 && len <= static_cast<std::size_t>(order_); ++len)
          ++raw_[Words(p.begin() + static_cast<long>(end + 1 - len), p.begin() + static_cast<long>(end + 1))];
    for (int k = 1; k <= order_; ++k) discounts_.push_back(compute_discounts(k));
  }

  const std::set<std::string>& predictable() const { return predictable_; }

  // Occurrences of g ending at a predicted position (never at the leading <s>).
  long raw(const Words& g) const {
    auto it = raw_.find(g);
    return it == raw_.end() ? 0 : it->second;
  }

  long adjusted(const Words& g) const {
    if (static_cast<int>(g.size()) == order_ || g.front() == "<s>") return raw(g);
    long distinct = 0;
    for (const auto& v : symbols_) {
      Words ext{v};
      ext.insert(ext.end(), g.begin(), g.end());
      if (raw(ext) > 0) ++distinct;
    }
    return distinct;
  }

  const std::vector<double>& discounts(int k) const { return discounts_[static_cast<std::size_t>(k - 1)]; }

  double prob(Words context, std::string w) const {
    auto known = [&](const std::string& s) { return symbols_.count(s) ? s : std::string("<unk>"); };
    for (auto& c : context) c = known(c);
    w = known(w);
    if (w == "<s>") return 0.0;
    while (static_cast<int>(context.size()) > order_ - 1) context.erase(context.begin());
    return interpolated(context, w);
  }

 private:
  // Count-of-counts over every k-gram that occurs in the padded data.
  std::vector<double> compute_discounts(int k) const {
    double n[5] = {0, 0, 0, 0, 0};
    for (const auto& [g, c] : raw_) {
      if (static_cast<int>(g.size()) != k) continue;
      const long a = adjusted(g);
      if (a >= 1 && a <= 4) n[a] += 1;
    }
    if (n[1] == 0 || n[2] == 0 || n[3] == 0) return {0.0, 0.75, 0.75, 0.75};
    const double y = n[1] / (n[1] + 2 * n[2]);
    auto clamp = [](double d) { return std::min(std::max(d, 0.0), 0.999); };
    return {0.0, clamp(1 - 2 * y * n[2] / n[1]), clamp(2 - 3 * y * n[3] / n[2]), clamp(3 - 4 * y * n[4] / n[3])};
  }

  double interpolated(const Words& h, const std::string& w) const {
    const double lower =
        h.empty() ? 1.0 / static_cast<double>(predictable_.size()) : interpolated(Words(h.begin() + 1, h.end()), w);
    const auto& d = discounts(static_cast<int>(h.size()) + 1);
    auto disc = [&](long a) { return a == 0 ? 0.0 : d[std::min<long>(a, 3)]; };
    double denom = 0.0, mass = 0.0;
    long target = 0;
    for (const auto& v : predictable_) {
      Words g = h;
      g.push_back(v);
      const long a = adjusted(g);
      denom += static_cast<double>(a);
      mass += disc(a);
      if (v == w) target = a;
    }
    if (denom == 0.0) return lower;
    return std::max(static_cast<double>(target) - disc(target), 0.0) / denom + mass / denom * lower;
  }

  int order_;
  std::vector<Words> padded_;
  std::set<std::string> symbols_;
  std::set<std::string> predictable_;
  std::map<Words, long> raw_;
  std::vector<std::vector<double>> discounts_;
};

}  // namespace kn_oracle
