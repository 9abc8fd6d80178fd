#pragma once

// Synthetic function-on-scalar datasets: Matern Gaussian-process coefficient
// and error curves on an even grid, AR(1)-correlated standardized predictors,
// and Y_n = sum_i X_ni beta_i + eps_n.

#include "fosr/io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace fosr {

using Rng = std::mt19937_64;

enum class MaternNu { three_halves, five_halves };

struct MaternParams {
  double sigma2 = 1.0;
  double range = 0.25;
  MaternNu nu = MaternNu::five_halves;

  void validate() const;
};

double matern_cov(const MaternParams& params, double s, double t);
Eigen::MatrixXd matern_matrix(const MaternParams& params, const std::vector<double>& grid);

// n x grid draws of a mean-zero process. The covariance is Cholesky-factored
// with a jitter ladder 1e-12 * sigma2 ... 1e-6 * sigma2 when needed.
Eigen::MatrixXd sample_gp(const MaternParams& params, const std::vector<double>& grid, Eigen::Index n, Rng& rng);

// AR(1) rows with Cov(X_i, X_j) = rho^|i-j|, columns then standardized to
// mean 0 and (divide-by-N) variance 1.
Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index p, double rho, Rng& rng);

std::vector<double> even_grid(int points);

// splitmix64 finalizer over (master, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ScenarioConfig {
  int N = 500;
  int I = 500;
  int I0 = 10;
  int grid_points = 50;
  double tau_beta = 0.25;
  double tau_eps = 0.25;
  double rho = 0.0;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
  int replications = 50;
  bool noise_free = false;  // debug switch: error variance 0

  void validate() const;
  io::KeyValue to_key_value() const;
  // N, I, I0, grid_points and seed are required; the remaining keys default.
  static ScenarioConfig from_key_value(const io::KeyValue& kv);
};

struct SimulatedDataset {
  std::vector<double> grid;
  Eigen::MatrixXd Y;          // N x grid
  Eigen::MatrixXd X;          // N x I
  Eigen::MatrixXd beta_true;  // I0 x grid
  std::vector<int> support_true;  // 0-based, {0 .. I0-1}
  std::uint64_t seed_used = 0;
};

SimulatedDataset generate_scenario(const ScenarioConfig& cfg, int replication_index);

}  // namespace fosr
