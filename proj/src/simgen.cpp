#include "fosr/simgen.hpp"

#include "fosr/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace fosr {

void MaternParams::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("matern sigma2 must be positive");
  if (!(range > 0.0)) throw std::invalid_argument("matern range must be positive");
}

double matern_cov(const MaternParams& params, double s, double t) {
  const double d = std::abs(s - t);
  if (params.nu == MaternNu::five_halves) {
    const double a = std::sqrt(5.0) * d / params.range;
    return params.sigma2 * (1.0 + a + 5.0 * d * d / (3.0 * params.range * params.range)) * std::exp(-a);
  }
  const double a = std::sqrt(3.0) * d / params.range;
  return params.sigma2 * (1.0 + a) * std::exp(-a);
}

Eigen::MatrixXd matern_matrix(const MaternParams& params, const std::vector<double>& grid) {
  params.validate();
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = matern_cov(params, grid[i], grid[j]);
  return c;
}

Eigen::MatrixXd sample_gp(const MaternParams& params, const std::vector<double>& grid, Eigen::Index n, Rng& rng) {
  params.validate();
  if (n < 1) throw std::invalid_argument("sample_gp needs n >= 1");
  const Eigen::MatrixXd cov = matern_matrix(params, grid);
  const auto m = cov.rows();
  Eigen::MatrixXd factor;
  bool ok = false;
  for (double jitter = 0.0; jitter <= 1e-6 * params.sigma2 * (1.0 + 1e-9);
       jitter = jitter == 0.0 ? 1e-12 * params.sigma2 : jitter * 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalError("matern covariance factorization failed at maximum jitter");

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) z(i, j) = normal(rng);
  return (factor.triangularView<Eigen::Lower>() * z).transpose();
}

Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index p, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  if (n < 2 || p < 1) throw std::invalid_argument("design needs n >= 2 and p >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index r = 0; r < n; ++r) {
    x(r, 0) = normal(rng);
    for (Eigen::Index c = 1; c < p; ++c) x(r, c) = rho * x(r, c - 1) + innovation * normal(rng);
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    auto col = x.col(c);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) col /= sd;
  }
  return x;
}

std::vector<double> even_grid(int points) {
  if (points < 1) throw std::invalid_argument("grid needs at least one point");
  std::vector<double> grid(points, 0.0);
  for (int g = 0; g < points; ++g) grid[g] = points == 1 ? 0.0 : static_cast<double>(g) / (points - 1);
  return grid;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ScenarioConfig::validate() const {
  if (N < 2) throw ConfigError("N must be at least 2");
  if (I < 1) throw ConfigError("I must be at least 1");
  if (I0 < 0 || I0 > I) throw ConfigError("I0 must lie in [0, I]");
  if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
  if (!(tau_beta > 0.0) || !(tau_eps > 0.0)) throw ConfigError("tau_beta and tau_eps must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (replications < 1) throw ConfigError("replications must be at least 1");
}

io::KeyValue ScenarioConfig::to_key_value() const {
  io::KeyValue kv;
  kv.set("N", N);
  kv.set("I", I);
  kv.set("I0", I0);
  kv.set("grid_points", grid_points);
  kv.set("tau_beta", tau_beta);
  kv.set("tau_eps", tau_eps);
  kv.set("rho", rho);
  kv.set("sigma2", sigma2);
  kv.set("seed", std::to_string(seed));
  kv.set("replications", replications);
  kv.set("noise_free", noise_free);
  return kv;
}

ScenarioConfig ScenarioConfig::from_key_value(const io::KeyValue& kv) {
  ScenarioConfig cfg;
  cfg.N = static_cast<int>(kv.get_int("N"));
  cfg.I = static_cast<int>(kv.get_int("I"));
  cfg.I0 = static_cast<int>(kv.get_int("I0"));
  cfg.grid_points = static_cast<int>(kv.get_int("grid_points"));
  const long long seed = kv.get_int("seed");
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.tau_beta = kv.get_double("tau_beta", cfg.tau_beta);
  cfg.tau_eps = kv.get_double("tau_eps", cfg.tau_eps);
  cfg.rho = kv.get_double("rho", cfg.rho);
  cfg.sigma2 = kv.get_double("sigma2", cfg.sigma2);
  cfg.replications = static_cast<int>(kv.get_int("replications", cfg.replications));
  cfg.noise_free = kv.get_bool("noise_free", cfg.noise_free);
  cfg.validate();
  return cfg;
}

SimulatedDataset generate_scenario(const ScenarioConfig& cfg, int replication_index) {
  cfg.validate();
  SimulatedDataset ds;
  ds.seed_used = derive_seed(cfg.seed, static_cast<std::uint64_t>(replication_index));
  Rng rng(ds.seed_used);
  ds.grid = even_grid(cfg.grid_points);
  const auto m = static_cast<Eigen::Index>(cfg.grid_points);

  // Draw order is fixed: coefficients, design, errors.
  if (cfg.I0 > 0) {
    ds.beta_true = sample_gp({cfg.sigma2, cfg.tau_beta, MaternNu::five_halves}, ds.grid, cfg.I0, rng);
  } else {
    ds.beta_true.resize(0, m);
  }
  ds.X = sample_design(cfg.N, cfg.I, cfg.rho, rng);
  ds.Y = Eigen::MatrixXd::Zero(cfg.N, m);
  if (cfg.I0 > 0) ds.Y.noalias() = ds.X.leftCols(cfg.I0) * ds.beta_true;
  if (!cfg.noise_free) ds.Y += sample_gp({cfg.sigma2, cfg.tau_eps, MaternNu::three_halves}, ds.grid, cfg.N, rng);
  for (int i = 0; i < cfg.I0; ++i) ds.support_true.push_back(i);
  return ds;
}

}  // namespace fosr
