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

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "psyeval/corpus.hpp"
#include "psyeval/error.hpp"

namespace psyeval::gam {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class BasisKind { Intercept, Linear, Spline, Tensor, RandomIntercept, Binary };

std::string_view kind_name(BasisKind kind);

struct BasisSpec {
  BasisKind kind = BasisKind::Spline;
  int num_basis = 10;
  int degree = 3;
  int penalty_order = 2;
};

// Knot vector for `num_basis` B-splines of the given degree on [0, 1]:
// equally spaced interior knots, boundary knots repeated degree+1 times.
template <typename Scalar>
Vector<Scalar> clamped_knots(int num_basis, int degree) {
  const int interior = num_basis - degree - 1;
  Vector<Scalar> t(num_basis + degree + 1);
  for (int i = 0; i <= degree; ++i) {
    t(i) = Scalar(0);
    t(num_basis + i) = Scalar(1);
  }
  for (int i = 1; i <= interior; ++i) t(degree + i) = Scalar(i) / Scalar(interior + 1);
  return t;
}

// B-spline basis matrix, one row per x and one column per basis function.
// Rows sum to one. Points outside [0, 1] are clamped to the boundary and
// counted in *n_clamped.
template <typename Derived>
Matrix<typename Derived::Scalar> bspline_basis(const Eigen::MatrixBase<Derived>& x, int num_basis,
                                                int degree = 3, Eigen::Index* n_clamped = nullptr) {
  using Scalar = typename Derived::Scalar;
  if (degree < 0 || num_basis < degree + 1)
    throw ArgumentError("bspline_basis: need num_basis >= degree + 1");
  const Vector<Scalar> t = clamped_knots<Scalar>(num_basis, degree);
  Matrix<Scalar> B = Matrix<Scalar>::Zero(x.size(), num_basis);
  Vector<Scalar> left(degree + 1), right(degree + 1), N(degree + 1);
  Eigen::Index clamped = 0;
  for (Eigen::Index r = 0; r < x.size(); ++r) {
    Scalar u = x(r);
    using std::isfinite;
    if (!isfinite(u)) throw ArgumentError("bspline_basis: non-finite input");
    if (u < Scalar(0) || u > Scalar(1)) {
      u = u < Scalar(0) ? Scalar(0) : Scalar(1);
      ++clamped;
    }
    // Knot span s with t[s] <= u < t[s+1]; u == 1 belongs to the last span.
    int s = num_basis - 1;
    if (u < Scalar(1)) {
      s = degree;
      while (s < num_basis - 1 && !(u < t(s + 1))) ++s;
    }
    // Triangular Cox-de Boor evaluation of the degree+1 non-zero functions.
    N(0) = Scalar(1);
    for (int j = 1; j <= degree; ++j) {
      left(j) = u - t(s + 1 - j);
      right(j) = t(s + j) - u;
      Scalar saved(0);
      for (int k = 0; k < j; ++k) {
        const Scalar tmp = N(k) / (right(k + 1) + left(j - k));
        N(k) = saved + right(k + 1) * tmp;
        saved = left(j - k) * tmp;
      }
      N(j) = saved;
    }
    for (int k = 0; k <= degree; ++k) B(r, s - degree + k) = N(k);
  }
  if (n_clamped) *n_clamped += clamped;
  return B;
}

// D^T D for the order-th difference operator on num_basis coefficients. Zero
// when there are no differences of that order.
template <typename Scalar>
Matrix<Scalar> difference_penalty(int num_basis, int order = 2) {
  if (num_basis <= order) return Matrix<Scalar>::Zero(num_basis, num_basis);
  Matrix<Scalar> D = Matrix<Scalar>::Identity(num_basis, num_basis);
  for (int k = 0; k < order; ++k) {
    const Eigen::Index m = D.rows() - 1;
    D = (D.bottomRows(m) - D.topRows(m)).eval();
  }
  return D.transpose() * D;
}

// Row-wise Kronecker product: row i is vec(a_i b_i^T) with b varying fastest.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> row_kronecker(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != b.rows()) throw ArgumentError("row_kronecker: row counts differ");
  Matrix<Scalar> out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    out.middleCols(i * b.cols(), b.cols()) = b.array().colwise() * a.col(i).array();
  return out;
}

template <typename Scalar>
Matrix<Scalar> kronecker(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  Matrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

struct DesignBlock {
  std::string name;
  BasisKind kind = BasisKind::Linear;
  Eigen::MatrixXd columns;
  std::vector<Eigen::MatrixXd> penalties;  // block-local, one smoothing parameter each
  bool constrained = false;                // sum-to-zero applied
};

// Tensor-product smooth of two marginal bases with one difference penalty
// per margin: S1 (x) I_k and I_m (x) S2.
DesignBlock tensor_basis(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2, int penalty_order = 2);

// Reparameterizes the block so its columns sum to zero over the rows,
// removing one coefficient. Penalties are transformed to match.
void apply_sum_to_zero(DesignBlock& block);

struct GamConfig {
  int spline_basis = 10;
  int tensor_margin = 5;
  int degree = 3;
  int penalty_order = 2;
  bool log_response = false;
};

struct Design {
  std::vector<DesignBlock> blocks;
  Eigen::VectorXd response;
  std::vector<std::string> dropped;  // names of blocks removed for zero variance
  Eigen::Index clamped_points = 0;

  Eigen::Index rows() const { return response.size(); }
  Eigen::Index cols() const;
  Eigen::MatrixXd matrix() const;
};

// Builds the reading-time model: intercept, optional linear surprisal terms
// for the current and previous word, length x log-frequency tensor smooths for
// both words, a position spline, the previous-word-fixated indicator, and
// per-subject random intercepts. Blocks without variance are dropped.
Design assemble_design(const std::vector<corpus::RegressionRow>& rows, bool include_surprisal,
                       const GamConfig& config = {});

// A block-local penalty placed on the diagonal of the full coefficient space.
struct PenaltyTerm {
  Eigen::Index offset = 0;
  Eigen::MatrixXd matrix;
};

// Penalized least squares problem ||y - X b||^2 + sum_j lambda_j b' S_j b.
struct PenalizedProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<PenaltyTerm> penalties;
  std::vector<bool> ridged;  // columns that receive the conditioning ridge; empty = all
};

PenalizedProblem to_problem(const Design& design);

struct LambdaPolicy {
  enum class Kind { Fixed, GCV };
  Kind kind = Kind::GCV;
  std::vector<double> fixed;
  double log10_min = -6.0;
  double log10_max = 6.0;
  double tolerance = 1e-3;  // log10 units
  int max_sweeps = 50;

  static LambdaPolicy gcv() { return {}; }
  static LambdaPolicy fixed_values(std::vector<double> lambdas) {
    LambdaPolicy p;
    p.kind = Kind::Fixed;
    p.fixed = std::move(lambdas);
    return p;
  }
};

struct BlockSummary {
  std::string name;
  BasisKind kind = BasisKind::Linear;
  Eigen::Index first_column = 0;
  Eigen::Index num_columns = 0;
  std::vector<Eigen::Index> lambda_indices;
  double edf = 0.0;
};

struct FittedGAM {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd lambdas;
  double loglik_ml = 0.0;
  double edf = 0.0;
  double rss = 0.0;
  Eigen::Index n = 0;
  double sigma2_ml = 0.0;
  double gcv = 0.0;
  bool converged = true;
  int sweeps = 0;
  Eigen::VectorXd column_edf;  // diagonal of the influence matrix
  std::vector<BlockSummary> blocks;
  std::vector<std::string> dropped_blocks;
};

// Minimizes the penalized objective by the normal equations, choosing the
// smoothing parameters per `policy`. Throws NumericalError if the system
// cannot be solved.
FittedGAM fit(const PenalizedProblem& problem, const LambdaPolicy& policy = LambdaPolicy::gcv());
FittedGAM fit(const Design& design, const LambdaPolicy& policy = LambdaPolicy::gcv());

// GCV score n * RSS / (n - edf)^2 at the given smoothing parameters.
double gcv_score(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas);

double penalized_objective(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas,
                           const Eigen::VectorXd& beta);
Eigen::VectorXd penalized_gradient(const PenalizedProblem& problem, const Eigen::VectorXd& lambdas,
                                   const Eigen::VectorXd& beta);

// Gaussian maximum-likelihood log-likelihood at sigma^2 = rss / n.
double gaussian_loglik(double rss, Eigen::Index n);

double delta_loglik(const FittedGAM& full, const FittedGAM& baseline);

// JSON document with terms, per-block lambda and edf, coefficients, logLik
// and convergence flags.
std::string fit_summary_json(const FittedGAM& fit);

}  // namespace psyeval::gam
