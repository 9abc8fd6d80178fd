#pragma once

// Turning discretely observed curves into functional data: penalized B-spline
// smoothing with a GCV-chosen smoothing parameter, followed by rotation into
// a functional principal component basis.

#include "fosr/funspace.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fosr {

struct SmoothingConfig {
  int n_basis = 100;
  int spline_order = 4;  // cubic
  int penalty_order = 2;
  // Geometric grid of candidate smoothing parameters.
  std::vector<double> gcv_grid = geometric_grid(1e-8, 1e4, 50);
  // Cap n_basis at this multiple of the grid length when the grid has fewer
  // than `cap_below_points` points. Zero disables the cap.
  int cap_multiple = 4;
  int cap_below_points = 30;

  static std::vector<double> geometric_grid(double lo, double hi, int count);
  void validate() const;
};

// Clamped B-spline basis on [0, 1] with equally spaced knots. The gram and
// roughness penalty are integrated exactly with Gauss-Legendre rules on each
// knot span.
BasisPtr build_bspline_basis(const std::vector<double>& grid, const SmoothingConfig& cfg);

// Number of basis functions actually used for a grid of `grid_points` points.
int effective_n_basis(int grid_points, const SmoothingConfig& cfg);

// Values (deriv = 0) or derivatives of every basis function at x.
Eigen::VectorXd bspline_values(const std::vector<double>& knots, int order, double x, int deriv = 0);
std::vector<double> clamped_uniform_knots(int n_basis, int order);

struct SmoothingResult {
  Eigen::MatrixXd coeffs;  // N x K
  double chosen_smoothing = 0.0;
  std::vector<double> gcv_values;  // one per gcv_grid entry; +inf where the solve failed
  std::vector<double> effective_df;  // trace of the hat matrix per gcv_grid entry
};

// Pooled GCV: one smoothing parameter shared by every curve.
SmoothingResult smooth_curves(const Eigen::MatrixXd& raw, const Basis& basis, const SmoothingConfig& cfg);

// Fitted coefficients and hat-matrix trace for one smoothing parameter.
// Returns false when the penalized normal equations cannot be solved.
bool penalized_fit(const Eigen::MatrixXd& raw, const Basis& basis, double mu, Eigen::MatrixXd& coeffs,
                   double& hat_trace);

struct FpcaResult {
  Eigen::MatrixXd components;  // K_fpc x K loadings, rows G-orthonormal
  Eigen::VectorXd eigenvalues;  // all eigenvalues, nonincreasing
  Eigen::VectorXd variance_explained;  // cumulative fractions, same length as eigenvalues
  Eigen::RowVectorXd mean_coeffs;
  int retained = 0;
};

struct FpcaOutput {
  FpcaResult result;
  Eigen::MatrixXd scores;  // N x K_fpc
  BasisPtr fpc_basis;
};

FpcaOutput fpca(const Eigen::MatrixXd& coeffs, const Basis& basis, double target_variance = 0.99);

// Scores of new coefficient rows in an existing FPC decomposition.
Eigen::MatrixXd project_scores(const Eigen::MatrixXd& coeffs, const FpcaResult& fit, const Basis& basis);

// Back-projection of scores to (centered) coefficients in the source basis.
Eigen::MatrixXd reconstruct_centered(const Eigen::MatrixXd& scores, const FpcaResult& fit);

}  // namespace fosr
