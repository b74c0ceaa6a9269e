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

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "psyeval/corpus.hpp"
#include "psyeval/surprisal.hpp"

namespace psyeval::metrics {

inline constexpr double kDefaultClozeAlpha = 0.5;

// Surprisal of each token under the human Cloze distribution. Tokens with a
// zero probability (only possible with alpha = 0) are listed in `excluded`.
struct HumanSurprisalSeries {
  std::map<corpus::TokenKey, double> values;
  double smoothing_alpha = kDefaultClozeAlpha;
  std::set<corpus::TokenKey> excluded;
};

struct PNCResult {
  double r = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_excluded = 0;
};

// p = (n_correct + alpha) / (n_responses + 2 alpha), value = -ln p.
HumanSurprisalSeries cloze_surprisal(const std::vector<corpus::ClozeNorm>& norms, double alpha);

// Pearson correlation (two-pass). Throws ArgumentError for fewer than two
// pairs or mismatched lengths, NumericalError for zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

// Predictability norm correlation between model and human surprisals over the
// tokens both series cover. `restrict_to`, when given, limits the keys used.
PNCResult pnc(const surprisal::WordSurprisalSeries& model, const HumanSurprisalSeries& human,
              const std::set<corpus::TokenKey>* restrict_to = nullptr);

}  // namespace psyeval::metrics
