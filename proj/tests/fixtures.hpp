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

// Small random regression problems shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "psyeval/corpus.hpp"
#include "psyeval/gam.hpp"

namespace fixtures {

// Reading-time style rows; the response depends smoothly on every covariate.
// `surprisal_effect` scales a linear dependence on surp_cur.
inline std::vector<psyeval::corpus::RegressionRow> random_rows(std::size_t n, int subjects, std::uint64_t seed,
                                                              double surprisal_effect = 0.0, double noise = 20.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<psyeval::corpus::RegressionRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    r.subject_id = "s" + std::to_string(i % static_cast<std::size_t>(subjects));
    r.len_cur = 1 + static_cast<int>(rng() % 12);
    r.len_prev = 1 + static_cast<int>(rng() % 12);
    r.logfreq_cur = -12.0 + 10.0 * u(rng);
    r.logfreq_prev = -12.0 + 10.0 * u(rng);
    r.position = u(rng);
    r.prev_fixated = u(rng) < 0.6;
    r.surp_cur = 10.0 * u(rng);
    r.surp_prev = 10.0 * u(rng);
    r.source = {1, static_cast<int>(i)};
    r.response_ms = 250.0 + 6.0 * r.len_cur - 4.0 * r.logfreq_cur + 30.0 * std::sin(6.0 * r.position) +
                    (r.prev_fixated ? -15.0 : 0.0) + 5.0 * static_cast<double>(i % static_cast<std::size_t>(subjects)) +
                    surprisal_effect * r.surp_cur + noise * g(rng);
  }
  return rows;
}

// Intercept plus two constrained cubic P-spline smooths and an unpenalized
// linear column: a small full-rank penalized problem.
inline psyeval::gam::PenalizedProblem random_problem(std::uint64_t seed, Eigen::Index n = 150) {
  using namespace psyeval::gam;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x1(n), x2(n), x3(n), y(n);
  const double amp = 0.5 + 2.0 * u(rng);
  const double sd = 0.05 + 0.5 * u(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    x1(i) = u(rng);
    x2(i) = u(rng);
    x3(i) = g(rng);
    y(i) = 1.0 + amp * std::sin(2.0 * std::numbers::pi * x1(i)) + x2(i) * x2(i) + 0.3 * x3(i) + sd * g(rng);
  }
  Design d;
  d.response = y;
  d.blocks.push_back({"intercept", BasisKind::Intercept, Eigen::MatrixXd::Ones(n, 1), {}, false});
  for (const Eigen::VectorXd* x : {&x1, &x2}) {
    DesignBlock b{"s", BasisKind::Spline, bspline_basis(*x, 8), {difference_penalty<double>(8)}, false};
    apply_sum_to_zero(b);
    d.blocks.push_back(std::move(b));
  }
  d.blocks.push_back({"x3", BasisKind::Linear, x3, {}, false});
  return to_problem(d);
}

}  // namespace fixtures
