#include "fosr/prep.hpp"

#include "fosr/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fosr {

namespace {

struct GaussRule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

// Values of all order-k basis functions (k >= 1) differentiated d times.
std::vector<double> bspline_table(const std::vector<double>& t, int k, int d, double x) {
  const int nt = static_cast<int>(t.size());
  if (d > 0) {
    const std::vector<double> lower = bspline_table(t, k - 1, d - 1, x);
    std::vector<double> out(nt - k, 0.0);
    for (int i = 0; i < nt - k; ++i) {
      const double left = t[i + k - 1] - t[i];
      const double right = t[i + k] - t[i + 1];
      double v = 0.0;
      if (left > 0.0) v += lower[i] / left;
      if (right > 0.0) v -= lower[i + 1] / right;
      out[i] = (k - 1) * v;
    }
    return out;
  }
  // Order 1: indicator of the knot span containing x; the right end point
  // belongs to the last nonempty span.
  std::vector<double> b(nt - 1, 0.0);
  int span = -1;
  for (int i = 0; i < nt - 1; ++i) {
    if (t[i] < t[i + 1] && x >= t[i] && x < t[i + 1]) {
      span = i;
      break;
    }
  }
  if (span < 0 && x == t.back()) {
    for (int i = nt - 2; i >= 0; --i) {
      if (t[i] < t[i + 1]) {
        span = i;
        break;
      }
    }
  }
  if (span >= 0) b[span] = 1.0;
  for (int order = 2; order <= k; ++order) {
    std::vector<double> next(nt - order, 0.0);
    for (int i = 0; i < nt - order; ++i) {
      double v = 0.0;
      const double left = t[i + order - 1] - t[i];
      const double right = t[i + order] - t[i + 1];
      if (left > 0.0) v += (x - t[i]) / left * b[i];
      if (right > 0.0) v += (t[i + order] - x) / right * b[i + 1];
      next[i] = v;
    }
    b = std::move(next);
  }
  return b;
}

}  // namespace

std::vector<double> SmoothingConfig::geometric_grid(double lo, double hi, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = lo * std::exp(step * i);
  out.back() = hi;
  return out;
}

void SmoothingConfig::validate() const {
  if (spline_order < 1) throw std::invalid_argument("spline_order must be positive");
  if (n_basis < spline_order) throw std::invalid_argument("n_basis must be at least spline_order");
  if (penalty_order < 0 || penalty_order >= spline_order)
    throw std::invalid_argument("penalty_order must be below spline_order");
  if (gcv_grid.empty()) throw std::invalid_argument("gcv_grid is empty");
  for (std::size_t i = 0; i < gcv_grid.size(); ++i) {
    if (!(gcv_grid[i] > 0.0)) throw std::invalid_argument("gcv_grid entries must be positive");
    if (i > 0 && !(gcv_grid[i] > gcv_grid[i - 1])) throw std::invalid_argument("gcv_grid must be increasing");
  }
}

std::vector<double> clamped_uniform_knots(int n_basis, int order) {
  const int interior = n_basis - order;
  std::vector<double> knots;
  knots.reserve(n_basis + order);
  for (int i = 0; i < order; ++i) knots.push_back(0.0);
  for (int j = 1; j <= interior; ++j) knots.push_back(static_cast<double>(j) / (interior + 1));
  for (int i = 0; i < order; ++i) knots.push_back(1.0);
  return knots;
}

Eigen::VectorXd bspline_values(const std::vector<double>& knots, int order, double x, int deriv) {
  if (deriv >= order) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(knots.size()) - order);
  const std::vector<double> v = bspline_table(knots, order, deriv, x);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int effective_n_basis(int grid_points, const SmoothingConfig& cfg) {
  int k = cfg.n_basis;
  if (cfg.cap_multiple > 0 && grid_points < cfg.cap_below_points)
    k = std::min(k, cfg.cap_multiple * grid_points);
  return std::max(k, cfg.spline_order);
}

BasisPtr build_bspline_basis(const std::vector<double>& grid, const SmoothingConfig& cfg) {
  cfg.validate();
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least two points");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < 0.0 || grid[g] > 1.0) throw std::invalid_argument("grid point outside [0, 1]");
    if (g > 0 && !(grid[g] > grid[g - 1])) throw std::invalid_argument("grid must be sorted increasing");
  }
  const int order = cfg.spline_order;
  const int k = effective_n_basis(static_cast<int>(grid.size()), cfg);
  const std::vector<double> knots = clamped_uniform_knots(k, order);

  Eigen::MatrixXd eval(static_cast<Eigen::Index>(grid.size()), k);
  for (std::size_t g = 0; g < grid.size(); ++g) eval.row(static_cast<Eigen::Index>(g)) = bspline_values(knots, order, grid[g]);

  // The integrands are piecewise polynomials of degree <= 2(order-1), so an
  // order-point rule per span is exact.
  const GaussRule rule = gauss_legendre(order);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s], b = knots[s + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q];
      const Eigen::VectorXd v = bspline_values(knots, order, x);
      gram.noalias() += w * v * v.transpose();
      const Eigen::VectorXd d = bspline_values(knots, order, x, cfg.penalty_order);
      penalty.noalias() += w * d * d.transpose();
    }
  }
  gram = 0.5 * (gram + gram.transpose()).eval();
  penalty = 0.5 * (penalty + penalty.transpose()).eval();
  return std::make_shared<const Basis>(BasisKind::bspline, std::move(gram), std::move(penalty), grid,
                                       std::move(eval));
}

bool penalized_fit(const Eigen::MatrixXd& raw, const Basis& basis, double mu, Eigen::MatrixXd& coeffs,
                   double& hat_trace) {
  const Eigen::MatrixXd& phi = basis.evaluation();
  const Eigen::MatrixXd gram_obs = phi.transpose() * phi;
  const Eigen::MatrixXd system = gram_obs + mu * basis.penalty();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) return false;
  const Eigen::MatrixXd rhs = phi.transpose() * raw.transpose();
  const Eigen::MatrixXd c = ldlt.solve(rhs);
  if (!c.allFinite()) return false;
  hat_trace = ldlt.solve(gram_obs).trace();
  coeffs = c.transpose();
  return std::isfinite(hat_trace);
}

SmoothingResult smooth_curves(const Eigen::MatrixXd& raw, const Basis& basis, const SmoothingConfig& cfg) {
  cfg.validate();
  const Eigen::Index m = static_cast<Eigen::Index>(basis.grid().size());
  if (basis.evaluation().rows() != m || m == 0) throw std::invalid_argument("basis has no evaluation grid");
  if (raw.cols() != m) throw std::invalid_argument("raw curves must be sampled on the basis grid");
  if (!raw.allFinite()) throw std::invalid_argument("raw curves contain missing or non-finite values");

  SmoothingResult out;
  out.gcv_values.assign(cfg.gcv_grid.size(), std::numeric_limits<double>::infinity());
  out.effective_df.assign(cfg.gcv_grid.size(), std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cfg.gcv_grid.size(); ++j) {
    Eigen::MatrixXd c;
    double tr = 0.0;
    if (!penalized_fit(raw, basis, cfg.gcv_grid[j], c, tr)) continue;
    out.effective_df[j] = tr;
    const double rss = (raw - c * basis.evaluation().transpose()).squaredNorm();
    const double denom = static_cast<double>(m) * (1.0 - tr / static_cast<double>(m));
    if (!(denom > 0.0)) continue;
    const double gcv = rss / (denom * denom);
    out.gcv_values[j] = gcv;
    if (gcv < best) {
      best = gcv;
      out.chosen_smoothing = cfg.gcv_grid[j];
      out.coeffs = std::move(c);
    }
  }
  if (!std::isfinite(best)) throw NumericalError("smoothing failed for every candidate smoothing parameter");
  return out;
}

FpcaOutput fpca(const Eigen::MatrixXd& coeffs, const Basis& basis, double target_variance) {
  if (coeffs.rows() < 2) throw std::invalid_argument("fpca needs at least two curves");
  if (!(target_variance > 0.0 && target_variance <= 1.0))
    throw std::invalid_argument("target_variance must lie in (0, 1]");
  if (coeffs.cols() != basis.dim()) throw std::invalid_argument("incompatible bases");

  FpcaOutput out;
  FpcaResult& fit = out.result;
  fit.mean_coeffs = coeffs.colwise().mean();
  const Eigen::MatrixXd centered = coeffs.rowwise() - fit.mean_coeffs;
  // Eigenproblem of L^T C L with G = L L^T; loadings are L^{-T} v.
  const Eigen::MatrixXd half = centered * basis.gram_factor();
  const Eigen::MatrixXd cov = half.transpose() * half / static_cast<double>(coeffs.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("fpca eigendecomposition failed");
  const Eigen::Index k = basis.dim();
  const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  fit.eigenvalues = values;
  const double total = values.sum();
  fit.variance_explained.resize(k);
  double running = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    running += values(j);
    fit.variance_explained(j) = total > 0.0 ? running / total : 1.0;
  }
  Eigen::Index keep = k;
  if (target_variance < 1.0) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (fit.variance_explained(j) >= target_variance) {
        keep = j + 1;
        break;
      }
    }
  }
  fit.retained = static_cast<int>(keep);

  const Eigen::MatrixXd v = vectors.leftCols(keep);
  // components = V^T L^{-1}
  fit.components = basis.gram_factor().transpose().triangularView<Eigen::Upper>().solve(v).transpose();
  out.scores = half * v;

  Eigen::MatrixXd penalty = fit.components * basis.penalty() * fit.components.transpose();
  penalty = 0.5 * (penalty + penalty.transpose()).eval();
  Eigen::MatrixXd evaluation = basis.evaluation().rows() > 0
                                   ? Eigen::MatrixXd(basis.evaluation() * fit.components.transpose())
                                   : Eigen::MatrixXd(0, keep);
  std::vector<double> grid = basis.evaluation().rows() > 0 ? basis.grid() : std::vector<double>{};
  out.fpc_basis = Basis::fpc(std::move(penalty), std::move(grid), std::move(evaluation));
  return out;
}

Eigen::MatrixXd project_scores(const Eigen::MatrixXd& coeffs, const FpcaResult& fit, const Basis& basis) {
  if (coeffs.cols() != basis.dim() || fit.components.cols() != basis.dim())
    throw std::invalid_argument("incompatible bases");
  return (coeffs.rowwise() - fit.mean_coeffs) * basis.gram() * fit.components.transpose();
}

Eigen::MatrixXd reconstruct_centered(const Eigen::MatrixXd& scores, const FpcaResult& fit) {
  if (scores.cols() != fit.components.rows()) throw std::invalid_argument("score width mismatch");
  return scores * fit.components;
}

}  // namespace fosr
