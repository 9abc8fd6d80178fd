#pragma once

// Function-on-scalar lasso (FSL) and its adaptive variant (AFSL).
//
// Both minimize
//   1/2 sum_n ||Y_n - X_n^T beta||^2 + lambda sum_i w_i ||beta_i||
// over functional coefficients beta_i, with every norm taken in the Hilbert
// space of the basis. The solver works on the group-lasso form: outcome
// coefficients are mapped through the Cholesky factor of the gram matrix so
// every norm is Euclidean, and ADMM alternates a ridge solve, a row-wise
// group soft-threshold and a dual update.

#include "fosr/funspace.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace fosr {

struct KktReport {
  // max over active rows of || -X_i^T R + lambda w_i beta_i / ||beta_i|| ||
  double max_active_residual = 0.0;
  // max over inactive finite-weight rows of (||X_i^T R|| - lambda w_i)^+
  double max_inactive_slack_violation = 0.0;

  bool within(double active_tol, double inactive_tol) const {
    return max_active_residual <= active_tol && max_inactive_slack_violation <= inactive_tol;
  }
};

struct FitConfig {
  double lambda = 0.0;
  // Empty means unit weights. +inf excludes a predictor.
  Eigen::VectorXd weights;
  double admm_rho = 1.0;
  bool adaptive_rho = true;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  int max_iter = 10000;
  // I x K coefficients in the basis of the outcomes.
  std::optional<Eigen::MatrixXd> warm_start;
  // A fit counts as converged only once the optimality conditions hold:
  // active residual <= kkt_active_tol * max(lambda, 1) and inactive slack
  // violation <= kkt_inactive_tol.
  double kkt_active_tol = 1e-6;
  double kkt_inactive_tol = 1e-8;
  // Solve on a working set of predictors, growing it until no predictor
  // outside the set violates its optimality condition. The optimum is the
  // same as for the full problem.
  bool working_set = false;
  std::vector<int> screen_hint;
};

struct FitResult {
  CoefficientMatrix B_hat;
  std::vector<int> support;  // 0-based
  double lambda = 0.0;
  Eigen::VectorXd weights;
  double objective = 0.0;
  double rss = 0.0;
  KktReport kkt;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  double final_rho = 1.0;
};

// Outcomes and design with the cross products every fit needs. Immutable.
class GroupLassoProblem {
 public:
  // Y is N x K in `basis`; X is N x I.
  GroupLassoProblem(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index p() const { return x_.cols(); }
  Eigen::Index k() const { return y_.cols(); }
  const BasisPtr& basis() const { return basis_; }
  const Eigen::MatrixXd& design() const { return x_; }
  // Outcomes in Euclidean coordinates.
  const Eigen::MatrixXd& outcomes() const { return y_; }
  const Eigen::MatrixXd& outcomes_in_basis() const { return y_basis_; }

  FitResult fit(const FitConfig& cfg) const;

  // Smallest lambda whose solution is zero: max_i ||X_i^T Y|| / w_i over
  // finite, positive weights.
  double lambda_max(const Eigen::VectorXd& weights) const;

  // Optimality report and score-space gradient X^T (Y - X B) for a
  // coefficient matrix in basis coordinates.
  KktReport kkt(const Eigen::MatrixXd& B, double lambda, const Eigen::VectorXd& weights) const;
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& B_euclid, const std::vector<int>& rows_nonzero) const;
  double rss(const Eigen::MatrixXd& B) const;
  double objective(const Eigen::MatrixXd& B, double lambda, const Eigen::VectorXd& weights) const;

 private:
  Eigen::MatrixXd y_basis_;
  Eigen::MatrixXd y_;    // N x K, Euclidean coordinates
  Eigen::MatrixXd x_;    // N x I
  Eigen::MatrixXd xtx_;  // I x I
  Eigen::MatrixXd xty_;  // I x K
  BasisPtr basis_;
};

FitResult fit_group_lasso(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                          const FitConfig& cfg);

// Row-wise soft threshold of the least-squares estimate; valid when
// N^{-1} X^T X is the identity.
CoefficientMatrix closed_form_orthogonal(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                                         const FitConfig& cfg);

FitResult fit_fsl(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, double lambda,
                  FitConfig base = {});

// w_i = 1 / ||beta_i|| on the support, +inf elsewhere.
Eigen::VectorXd adaptive_weights(const FitResult& fsl);

// Weighted fit through the change of variables alpha_i = w_i beta_i: drops
// infinite-weight predictors, rescales the remaining columns by 1 / w_i,
// solves with unit weights and maps back. The KKT report is evaluated on the
// original problem with weights w.
FitResult fit_reweighted(const GroupLassoProblem& problem, const Eigen::VectorXd& weights, const FitConfig& cfg);

// The reduced, rescaled problem behind fit_reweighted.
struct ReweightedProblem {
  std::vector<int> kept;     // original indices with finite weight
  Eigen::VectorXd scale;     // w_i for kept predictors (1 where w_i == 0)
  Eigen::VectorXd inner_weights;  // 1, or 0 for unpenalized predictors
  double max_weight = 1.0;
  std::optional<GroupLassoProblem> problem;  // empty when every weight is infinite

  ReweightedProblem(const GroupLassoProblem& original, const Eigen::VectorXd& weights);
  // Settings for the reduced problem: unit weights, warm start and screening
  // hint translated, KKT tolerances divided by the largest weight so the
  // original-scale conditions hold at convergence.
  FitConfig inner_config(const FitConfig& cfg) const;
  // Maps a fit of the reduced problem back to the original parameterization.
  FitResult map_back(const GroupLassoProblem& original, const Eigen::VectorXd& weights, const FitResult& inner,
                     const FitConfig& cfg) const;
  // Empty-problem fit (every weight infinite): zero coefficients.
  FitResult zero_fit(const GroupLassoProblem& original, const Eigen::VectorXd& weights, double lambda) const;
};

struct AfslResult {
  FitResult fsl;
  FitResult afsl;  // wall_time covers the adaptive stage only
  Eigen::VectorXd weights;
};

AfslResult fit_afsl(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, double lambda_fsl,
                    double lambda_afsl, FitConfig base = {});

KktReport kkt_check(const CoefficientMatrix& B_hat, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                    const FitConfig& cfg);

// Least squares on the given support, zero elsewhere.
CoefficientMatrix oracle_estimator(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                                   const std::vector<int>& support, BasisPtr basis);

// Row-wise group soft threshold (1 - c / ||v||)^+ v in Euclidean coordinates.
Eigen::RowVectorXd group_soft_threshold(const Eigen::RowVectorXd& v, double threshold);

}  // namespace fosr
