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

#include "psyeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psyeval/error.hpp"

namespace psyeval::metrics {

HumanSurprisalSeries cloze_surprisal(const std::vector<corpus::ClozeNorm>& norms, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw ArgumentError("cloze smoothing alpha must be a finite non-negative number");
  HumanSurprisalSeries out;
  out.smoothing_alpha = alpha;
  for (const auto& n : norms) {
    if (n.n_responses <= 0 || n.n_correct < 0 || n.n_correct > n.n_responses)
      throw ArgumentError("malformed cloze norm for token " + corpus::to_string(n.key()));
    const double p = (n.n_correct + alpha) / (n.n_responses + 2.0 * alpha);
    if (p <= 0.0) {
      out.excluded.insert(n.key());
      continue;
    }
    out.values[n.key()] = -std::log(p);
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: series lengths differ");
  if (x.size() < 2) throw ArgumentError("pearson: need at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericalError("pearson: zero variance in input series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: series lengths differ");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

PNCResult pnc(const surprisal::WordSurprisalSeries& model, const HumanSurprisalSeries& human,
              const std::set<corpus::TokenKey>* restrict_to) {
  PNCResult out;
  std::vector<double> s, h;
  for (const auto& [key, hv] : human.values) {
    if (restrict_to && !restrict_to->count(key)) continue;
    auto it = model.values.find(key);
    if (it == model.values.end()) continue;
    s.push_back(it->second);
    h.push_back(hv);
  }
  for (const auto& key : human.excluded) {
    if (restrict_to && !restrict_to->count(key)) continue;
    if (model.values.count(key)) ++out.n_excluded;
  }
  out.n_pairs = s.size();
  if (s.size() < 2)
    throw ArgumentError("PNC needs at least two tokens shared by model and norms, found " +
                        std::to_string(s.size()));
  out.r = pearson(s, h);
  return out;
}

}  // namespace psyeval::metrics
