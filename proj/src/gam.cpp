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

#include "psyeval/gam.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <tuple>

#include "json.hpp"

namespace psyeval::gam {

namespace {

constexpr double kRidge = 1e-10;
constexpr double kGoldenTolerance = 1e-5;
constexpr double kSingularPivot = 1e-13;

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return true;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  return hi - lo <= 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
}

// Affine map of v onto [0, 1] using its observed range.
Eigen::VectorXd unit_scale(const Eigen::VectorXd& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  return ((v.array() - lo) / (hi - lo)).matrix();
}

void check_penalty(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw ArgumentError("penalty matrix must be square");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError("penalty matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
    throw ArgumentError("penalty matrix must be positive semi-definite");
}

// Precomputed cross products for repeated solves at different lambdas.
class Solver {
 public:
  explicit Solver(const PenalizedProblem& p) : problem_(p) {
    const auto& X = p.X;
    xtx_ = X.transpose() * X;
    xty_ = X.transpose() * p.y;
    yty_ = p.y.squaredNorm();
    n_ = X.rows();
    const Eigen::Index cols = X.cols();
    const double scale = cols > 0 ? std::max(1.0, xtx_.trace() / static_cast<double>(cols)) : 1.0;
    ridge_ = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      if (p.ridged.empty() || p.ridged[static_cast<std::size_t>(j)]) ridge_(j) = kRidge * scale;
  }

  struct Result {
    Eigen::VectorXd beta;
    Eigen::VectorXd column_edf;
    double rss = 0.0;
    double edf = 0.0;
    double gcv = 0.0;
  };

  Result evaluate(const Eigen::VectorXd& lambdas) const {
    Eigen::MatrixXd A = xtx_;
    A.diagonal() += ridge_;
    for (std::size_t j = 0; j < problem_.penalties.size(); ++j) {
      const auto& term = problem_.penalties[j];
      const Eigen::Index m = term.matrix.rows();
      A.block(term.offset, term.offset, m, m) += lambdas(static_cast<Eigen::Index>(j)) * term.matrix;
    }
    Result r;
    // Pivots this small relative to the largest diagonal entry mean the system is
    // singular even though the factorization went through.
    const double floor = kSingularPivot * std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    Eigen::MatrixXd F;
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().array().square().minCoeff() > floor) {
      r.beta = llt.solve(xty_);
      F = llt.solve(xtx_);
    } else {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= floor)
        throw NumericalError("penalized normal equations are singular");
      r.beta = ldlt.solve(xty_);
      F = ldlt.solve(xtx_);
    }
    if (!r.beta.allFinite() || !F.allFinite())
      throw NumericalError("penalized normal equations are singular");
    r.column_edf = F.diagonal();
    r.edf = r.column_edf.sum();
    r.rss = std::max(0.0, yty_ - 2.0 * r.beta.dot(xty_) + r.beta.dot(xtx_ * r.beta));
    const double dof = static_cast<double>(n_) - r.edf;
    r.gcv = dof > 0.0 ? static_cast<double>(n_) * r.rss / (dof * dof) : std::numeric_limits<double>::infinity();
    return r;
  }

 private:
  const PenalizedProblem& problem_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  Eigen::VectorXd ridge_;
  double yty_ = 0.0;
  Eigen::Index n_ = 0;
};

// Minimizes f on [lo, hi]: unit-step grid to bracket the best point, then
// golden-section inside the bracket.
template <typename F>
double minimize_1d(F&& f, double lo, double hi) {
  const int steps = std::max(1, static_cast<int>(std::ceil(hi - lo)));
  const double h = (hi - lo) / steps;
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double v = f(lo + i * h);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = lo + std::max(0, best - 1) * h;
  double b = lo + std::min(steps, best + 1) * h;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > kGoldenTolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  double x = fc <= fd ? c : d;
  double fx = std::min(fc, fd);
  if (best_value < fx) x = lo + best * h;
  return x;
}

}  // namespace

std::string_view kind_name(BasisKind kind) {
  switch (kind) {
    case BasisKind::Intercept: return "intercept";
    case BasisKind::Linear: return "linear";
    case BasisKind::Spline: return "spline";
    case BasisKind::Tensor: return "tensor";
    case BasisKind::RandomIntercept: return "random_intercept";
    case BasisKind::Binary: return "binary";
  }
  return "?";
}

DesignBlock tensor_basis(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2, int penalty_order) {
  if (b1.rows() != b2.rows())
    throw ArgumentError("tensor_basis: margins have " + std::to_string(b1.rows()) + " and " +
                        std::to_string(b2.rows()) + " rows");
  const auto m = static_cast<int>(b1.cols());
  const auto k = static_cast<int>(b2.cols());
  DesignBlock block;
  block.kind = BasisKind::Tensor;
  block.columns = row_kronecker(b1, b2);
  const Eigen::MatrixXd S1 = difference_penalty<double>(m, penalty_order);
  const Eigen::MatrixXd S2 = difference_penalty<double>(k, penalty_order);
  block.penalties.push_back(kronecker<double>(S1, Eigen::MatrixXd::Identity(k, k)));
  block.penalties.push_back(kronecker<double>(Eigen::MatrixXd::Identity(m, m), S2));
  return block;
}

void apply_sum_to_zero(DesignBlock& block) {
  const Eigen::Index m = block.columns.cols();
  if (m < 2) throw ArgumentError("sum-to-zero constraint needs at least two columns");
  const Eigen::VectorXd sums = block.columns.colwise().sum().transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sums);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd Z = Q.rightCols(m - 1);
  block.columns = block.columns * Z;
  for (auto& S : block.penalties) {
    Eigen::MatrixXd T = Z.transpose() * S * Z;
    S = 0.5 * (T + T.transpose());
  }
  block.constrained = true;
}

Eigen::Index Design::cols() const {
  Eigen::Index c = 0;
  for (const auto& b : blocks) c += b.columns.cols();
  return c;
}

Eigen::MatrixXd Design::matrix() const {
  Eigen::MatrixXd X(rows(), cols());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    X.middleCols(at, b.columns.cols()) = b.columns;
    at += b.columns.cols();
  }
  return X;
}

Design assemble_design(const std::vector<corpus::RegressionRow>& input, bool include_surprisal,
                       const GamConfig& config) {
  if (input.empty()) throw ArgumentError("assemble_design: no rows");
  // Canonical row order: floating-point sums, and through them the smoothing
  // parameter search, are then independent of the caller's ordering.
  std::vector<corpus::RegressionRow> rows(input);
  std::sort(rows.begin(), rows.end(), [](const corpus::RegressionRow& a, const corpus::RegressionRow& b) {
    return std::tie(a.subject_id, a.source, a.measure, a.response_ms, a.surp_cur, a.surp_prev, a.len_cur,
                    a.logfreq_cur, a.len_prev, a.logfreq_prev, a.position, a.prev_fixated) <
           std::tie(b.subject_id, b.source, b.measure, b.response_ms, b.surp_cur, b.surp_prev, b.len_cur,
                    b.logfreq_cur, b.len_prev, b.logfreq_prev, b.position, b.prev_fixated);
  });
  const auto n = static_cast<Eigen::Index>(rows.size());
  Design d;
  d.response.resize(n);
  Eigen::VectorXd surp_cur(n), surp_prev(n), len_cur(n), len_prev(n), lf_cur(n), lf_prev(n), position(n),
      prev_fix(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (!(r.response_ms > 0.0)) throw ArgumentError("assemble_design: response must be positive");
    d.response(i) = config.log_response ? std::log(r.response_ms) : r.response_ms;
    surp_cur(i) = r.surp_cur;
    surp_prev(i) = r.surp_prev;
    len_cur(i) = r.len_cur;
    len_prev(i) = r.len_prev;
    lf_cur(i) = r.logfreq_cur;
    lf_prev(i) = r.logfreq_prev;
    position(i) = r.position;
    prev_fix(i) = r.prev_fixated ? 1.0 : 0.0;
  }

  DesignBlock intercept{"intercept", BasisKind::Intercept, Eigen::MatrixXd::Ones(n, 1), {}, false};
  d.blocks.push_back(std::move(intercept));

  auto add_linear = [&](const std::string& name, const Eigen::VectorXd& v, BasisKind kind) {
    if (is_constant(v)) {
      d.dropped.push_back(name);
      return;
    }
    d.blocks.push_back({name, kind, v, {}, false});
  };
  if (include_surprisal) {
    add_linear("surp_cur", surp_cur, BasisKind::Linear);
    add_linear("surp_prev", surp_prev, BasisKind::Linear);
  }

  auto add_tensor = [&](const std::string& name, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (is_constant(a) || is_constant(b)) {
      d.dropped.push_back(name);
      return;
    }
    Eigen::MatrixXd ba = bspline_basis(unit_scale(a), config.tensor_margin, config.degree, &d.clamped_points);
    Eigen::MatrixXd bb = bspline_basis(unit_scale(b), config.tensor_margin, config.degree, &d.clamped_points);
    DesignBlock block = tensor_basis(ba, bb, config.penalty_order);
    block.name = name;
    apply_sum_to_zero(block);
    d.blocks.push_back(std::move(block));
  };
  add_tensor("te(len_cur,logfreq_cur)", len_cur, lf_cur);
  add_tensor("te(len_prev,logfreq_prev)", len_prev, lf_prev);

  if (is_constant(position)) {
    d.dropped.push_back("s(position)");
  } else {
    DesignBlock block;
    block.name = "s(position)";
    block.kind = BasisKind::Spline;
    block.columns = bspline_basis(position, config.spline_basis, config.degree, &d.clamped_points);
    block.penalties.push_back(difference_penalty<double>(config.spline_basis, config.penalty_order));
    apply_sum_to_zero(block);
    d.blocks.push_back(std::move(block));
  }

  add_linear("prev_fixated", prev_fix, BasisKind::Binary);

  std::set<std::string> subjects;
  for (const auto& r : rows) subjects.insert(r.subject_id);
  if (subjects.size() < 2) {
    d.dropped.push_back("re(subject)");
  } else {
    std::vector<std::string> ordered(subjects.begin(), subjects.end());
    const auto s = static_cast<Eigen::Index>(ordered.size());
    DesignBlock block;
    block.name = "re(subject)";
    block.kind = BasisKind::RandomIntercept;
    block.columns = Eigen::MatrixXd::Zero(n, s);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& id = rows[static_cast<std::size_t>(i)].subject_id;
      const auto pos = std::lower_bound(ordered.begin(), ordered.end(), id) - ordered.begin();
      block.columns(i, pos) = 1.0;
    }
    block.penalties.push_back(Eigen::MatrixXd::Identity(s, s));
    d.blocks.push_back(std::move(block));
  }
  return d;
}

PenalizedProblem to_problem(const Design& design) {
  PenalizedProblem p;
  p.X = design.matrix();
  p.y = design.response;
  p.ridged.assign(static_cast<std::size_t>(p.X.cols()), true);
  Eigen::Index at = 0;
  for (const auto& b : design.blocks) {
    if (b.kind == BasisKind::Intercept)
      for (Eigen::Index j = 0; j < b.columns.cols(); ++j) p.ridged[static_cast<std::size_t>(at + j)] = false;
    for (const auto& S : b.penalties) p.penalties.push_back({at, S});
    at += b.columns.cols();
  }
  return p;
}

double gcv_score(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas) {
  return Solver(problem).evaluate(lambdas).gcv;
}

double penalized_objective(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas,
                           const Eigen::VectorXd& beta) {
  double value = (problem.y - problem.X * beta).squaredNorm();
  for (std::size_t j = 0; j < problem.penalties.size(); ++j) {
    const auto& t = problem.penalties[j];
    const auto b = beta.segment(t.offset, t.matrix.rows());
    value += lambdas(static_cast<Eigen::Index>(j)) * b.dot(t.matrix * b);
  }
  return value;
}

Eigen::VectorXd penalized_gradient(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas,
                                   const Eigen::VectorXd& beta) {
  Eigen::VectorXd g = -2.0 * problem.X.transpose() * (problem.y - problem.X * beta);
  for (std::size_t j = 0; j < problem.penalties.size(); ++j) {
    const auto& t = problem.penalties[j];
    g.segment(t.offset, t.matrix.rows()) +=
        2.0 * lambdas(static_cast<Eigen::Index>(j)) * t.matrix * beta.segment(t.offset, t.matrix.rows());
  }
  return g;
}

double gaussian_loglik(double rss, Eigen::Index n) {
  if (n <= 0) throw ArgumentError("log-likelihood needs at least one observation");
  if (!(rss > 0.0)) throw NumericalError("residual sum of squares is zero; log-likelihood is unbounded");
  const double nn = static_cast<double>(n);
  const double sigma2 = rss / nn;
  return -0.5 * nn * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
}

FittedGAM fit(const PenalizedProblem& problem, const LambdaPolicy& policy) {
  const Eigen::Index n = problem.X.rows();
  const Eigen::Index p = problem.X.cols();
  if (problem.y.size() != n) throw ArgumentError("fit: response length does not match design rows");
  if (p >= n)
    throw ArgumentError("fit: design has " + std::to_string(p) + " columns but only " + std::to_string(n) +
                        " rows");
  for (const auto& t : problem.penalties) {
    if (t.offset < 0 || t.offset + t.matrix.rows() > p) throw ArgumentError("fit: penalty outside design");
    check_penalty(t.matrix);
  }
  const auto q = static_cast<Eigen::Index>(problem.penalties.size());

  Solver solver(problem);
  FittedGAM out;
  Eigen::VectorXd log_lambda = Eigen::VectorXd::Zero(q);
  auto to_lambda = [](const Eigen::VectorXd& l) { return Eigen::pow(10.0, l.array()).matrix().eval(); };

  if (policy.kind == LambdaPolicy::Kind::Fixed) {
    if (static_cast<Eigen::Index>(policy.fixed.size()) != q)
      throw ArgumentError("fit: expected " + std::to_string(q) + " fixed smoothing parameters, got " +
                          std::to_string(policy.fixed.size()));
    out.lambdas = Eigen::Map<const Eigen::VectorXd>(policy.fixed.data(), q);
    if ((out.lambdas.array() < 0.0).any() || !out.lambdas.allFinite())
      throw ArgumentError("fit: smoothing parameters must be finite and non-negative");
  } else {
    if (!(policy.log10_min < policy.log10_max)) throw ArgumentError("fit: empty smoothing search range");
    log_lambda.setConstant(std::clamp(0.0, policy.log10_min, policy.log10_max));
    out.converged = q == 0;
    for (int sweep = 1; sweep <= policy.max_sweeps && q > 0; ++sweep) {
      out.sweeps = sweep;
      double moved = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        Eigen::VectorXd trial = log_lambda;
        auto objective = [&](double v) {
          trial(j) = v;
          return solver.evaluate(to_lambda(trial)).gcv;
        };
        const double best = minimize_1d(objective, policy.log10_min, policy.log10_max);
        moved = std::max(moved, std::abs(best - log_lambda(j)));
        log_lambda(j) = best;
      }
      if (moved <= policy.tolerance) {
        out.converged = true;
        break;
      }
    }
    out.lambdas = to_lambda(log_lambda);
  }

  const Solver::Result r = solver.evaluate(out.lambdas);
  out.coefficients = r.beta;
  out.column_edf = r.column_edf;
  out.edf = r.edf;
  out.rss = (problem.y - problem.X * r.beta).squaredNorm();
  out.n = n;
  out.sigma2_ml = out.rss / static_cast<double>(n);
  const double dof = static_cast<double>(n) - out.edf;
  out.gcv = dof > 0.0 ? static_cast<double>(n) * out.rss / (dof * dof) : std::numeric_limits<double>::infinity();
  out.loglik_ml = gaussian_loglik(out.rss, n);
  return out;
}

FittedGAM fit(const Design& design, const LambdaPolicy& policy) {
  FittedGAM out = fit(to_problem(design), policy);
  Eigen::Index col = 0;
  Eigen::Index lambda = 0;
  for (const auto& b : design.blocks) {
    BlockSummary s;
    s.name = b.name;
    s.kind = b.kind;
    s.first_column = col;
    s.num_columns = b.columns.cols();
    for (std::size_t k = 0; k < b.penalties.size(); ++k) s.lambda_indices.push_back(lambda++);
    s.edf = out.column_edf.segment(col, s.num_columns).sum();
    col += s.num_columns;
    out.blocks.push_back(std::move(s));
  }
  out.dropped_blocks = design.dropped;
  return out;
}

double delta_loglik(const FittedGAM& full, const FittedGAM& baseline) {
  if (full.n != baseline.n)
    throw ArgumentError("delta_loglik: models were fit on " + std::to_string(full.n) + " and " +
                        std::to_string(baseline.n) + " rows");
  return full.loglik_ml - baseline.loglik_ml;
}

std::string fit_summary_json(const FittedGAM& fit) {
  using nlohmann::json;
  json terms = json::array();
  for (const auto& b : fit.blocks) {
    json lambdas = json::array();
    for (auto j : b.lambda_indices) lambdas.push_back(fit.lambdas(j));
    terms.push_back({{"name", b.name},
                     {"kind", std::string(kind_name(b.kind))},
                     {"first_column", b.first_column},
                     {"columns", b.num_columns},
                     {"lambdas", lambdas},
                     {"edf", b.edf}});
  }
  json doc;
  doc["terms"] = terms;
  doc["dropped_terms"] = fit.dropped_blocks;
  doc["coefficients"] = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  doc["lambdas"] = std::vector<double>(fit.lambdas.data(), fit.lambdas.data() + fit.lambdas.size());
  doc["loglik_ml"] = fit.loglik_ml;
  doc["edf"] = fit.edf;
  doc["rss"] = fit.rss;
  doc["n"] = fit.n;
  doc["sigma2_ml"] = fit.sigma2_ml;
  doc["gcv"] = fit.gcv;
  doc["converged"] = fit.converged;
  doc["sweeps"] = fit.sweeps;
  return doc.dump(2) + "\n";
}

}  // namespace psyeval::gam
