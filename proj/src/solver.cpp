#include "fosr/solver.hpp"

#include "fosr/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fosr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXd resolve_weights(const Eigen::VectorXd& weights, Eigen::Index p) {
  if (weights.size() == 0) return Eigen::VectorXd::Ones(p);
  if (weights.size() != p) throw std::invalid_argument("weight vector length must equal predictor count");
  for (Eigen::Index i = 0; i < p; ++i)
    if (!(weights(i) >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
  return weights;
}

std::vector<int> nonzero_rows(const Eigen::MatrixXd& B) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    if (B.row(i).cwiseAbs().maxCoeff() > 0.0) out.push_back(static_cast<int>(i));
  return out;
}

struct SubproblemResult {
  Eigen::MatrixXd z;
  double rho = 1.0;
  int iterations = 0;
  bool converged = false;
};

// Subproblem KKT in Euclidean coordinates with gradient g = b - H0 z.
KktReport sub_kkt(const Eigen::MatrixXd& H0, const Eigen::MatrixXd& b, const Eigen::VectorXd& w, double lambda,
                  const Eigen::MatrixXd& z) {
  const Eigen::MatrixXd g = b - H0 * z;
  KktReport report;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zn = z.row(i).norm();
    if (zn > 0.0) {
      report.max_active_residual =
          std::max(report.max_active_residual, (-g.row(i) + (lambda * w(i) / zn) * z.row(i)).norm());
    } else {
      report.max_inactive_slack_violation =
          std::max(report.max_inactive_slack_violation, g.row(i).norm() - lambda * w(i));
    }
  }
  return report;
}

// ADMM for min 1/2 a^T H0 a - tr(b^T a) + lambda sum w_i ||a_i|| with the
// splitting beta = z.
SubproblemResult admm_subproblem(const Eigen::MatrixXd& H0, const Eigen::MatrixXd& b, const Eigen::VectorXd& w,
                                 double lambda, Eigen::MatrixXd z, double rho, const FitConfig& cfg, int budget) {
  SubproblemResult out;
  const Eigen::Index a = H0.rows();
  const Eigen::Index k = b.cols();
  if (a == 0) {
    out.z = std::move(z);
    out.rho = rho;
    out.converged = true;
    return out;
  }
  const double active_tol = cfg.kkt_active_tol * std::max(lambda, 1.0);
  const double sqrt_n = std::sqrt(static_cast<double>(a * k));

  // Scaled dual initialised from the stationarity condition at z.
  Eigen::MatrixXd u = (b - H0 * z) / rho;
  Eigen::MatrixXd beta = z;
  Eigen::MatrixXd z_old;
  Eigen::MatrixXd system = H0;
  system.diagonal().array() += rho;
  Eigen::LLT<Eigen::MatrixXd> llt(system);

  for (int it = 1; it <= budget; ++it) {
    beta = llt.solve(b + rho * (z - u));
    z_old = z;
    const Eigen::MatrixXd v = beta + u;
    for (Eigen::Index i = 0; i < a; ++i) z.row(i) = group_soft_threshold(v.row(i), lambda * w(i) / rho);
    u += beta - z;
    out.iterations = it;

    const double r = (beta - z).norm();
    const double s = rho * (z - z_old).norm();
    const double eps_pri = sqrt_n * cfg.eps_abs + cfg.eps_rel * std::max(beta.norm(), z.norm());
    const double eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * rho * u.norm();
    const bool residuals_small = r <= eps_pri && s <= eps_dual;
    if (residuals_small || it % 50 == 0) {
      if (sub_kkt(H0, b, w, lambda, z).within(active_tol, cfg.kkt_inactive_tol)) {
        out.converged = true;
        break;
      }
    }
    // Residual balancing.
    if (cfg.adaptive_rho && !residuals_small) {
      double factor = 1.0;
      if (r > 10.0 * s)
        factor = 2.0;
      else if (s > 10.0 * r)
        factor = 0.5;
      if (factor != 1.0) {
        rho *= factor;
        u /= factor;
        system.diagonal().array() += rho - rho / factor;
        llt.compute(system);
      }
    }
  }
  out.z = std::move(z);
  out.rho = rho;
  return out;
}

}  // namespace

Eigen::RowVectorXd group_soft_threshold(const Eigen::RowVectorXd& v, double threshold) {
  const double vn = v.norm();
  if (!(vn > threshold)) return Eigen::RowVectorXd::Zero(v.size());
  return (1.0 - threshold / vn) * v;
}

GroupLassoProblem::GroupLassoProblem(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis)
    : basis_(std::move(basis)) {
  if (!basis_) throw std::invalid_argument("basis is required");
  if (Y.rows() != X.rows()) throw std::invalid_argument("Y and X must have the same number of rows");
  if (Y.cols() != basis_->dim()) throw std::invalid_argument("incompatible bases");
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("empty design");
  y_basis_ = Y;
  y_ = basis_->to_euclidean(Y);
  x_ = X;
  xtx_ = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  xtx_.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  xtx_ = xtx_.selfadjointView<Eigen::Lower>();
  xty_ = X.transpose() * y_;
}

double GroupLassoProblem::lambda_max(const Eigen::VectorXd& weights) const {
  const Eigen::VectorXd w = resolve_weights(weights, p());
  double best = -1.0;
  for (Eigen::Index i = 0; i < p(); ++i) {
    if (std::isinf(w(i)) || w(i) == 0.0) continue;
    best = std::max(best, xty_.row(i).norm() / w(i));
  }
  if (best < 0.0) throw std::invalid_argument("lambda_max needs at least one finite positive weight");
  return best;
}

Eigen::MatrixXd GroupLassoProblem::gradient(const Eigen::MatrixXd& B_euclid, const std::vector<int>& rows) const {
  if (rows.empty()) return xty_;
  return xty_ - xtx_(Eigen::all, rows) * B_euclid(rows, Eigen::all);
}

KktReport GroupLassoProblem::kkt(const Eigen::MatrixXd& B, double lambda, const Eigen::VectorXd& weights) const {
  const Eigen::VectorXd w = resolve_weights(weights, p());
  const Eigen::MatrixXd be = basis_->to_euclidean(B);
  const std::vector<int> rows = nonzero_rows(be);
  const Eigen::MatrixXd g = gradient(be, rows);
  KktReport report;
  for (Eigen::Index i = 0; i < p(); ++i) {
    if (std::isinf(w(i))) continue;
    const double bn = be.row(i).norm();
    if (bn > 0.0) {
      report.max_active_residual =
          std::max(report.max_active_residual, (-g.row(i) + (lambda * w(i) / bn) * be.row(i)).norm());
    } else {
      report.max_inactive_slack_violation =
          std::max(report.max_inactive_slack_violation, g.row(i).norm() - lambda * w(i));
    }
  }
  return report;
}

double GroupLassoProblem::rss(const Eigen::MatrixXd& B) const {
  const Eigen::MatrixXd be = basis_->to_euclidean(B);
  const std::vector<int> rows = nonzero_rows(be);
  if (rows.empty()) return y_.squaredNorm();
  return (y_ - x_(Eigen::all, rows) * be(rows, Eigen::all)).squaredNorm();
}

double GroupLassoProblem::objective(const Eigen::MatrixXd& B, double lambda, const Eigen::VectorXd& weights) const {
  const Eigen::VectorXd w = resolve_weights(weights, p());
  const Eigen::VectorXd norms = basis_->row_sq_norms(B).cwiseMax(0.0).cwiseSqrt();
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < p(); ++i) {
    if (norms(i) == 0.0) continue;
    if (std::isinf(w(i))) return std::numeric_limits<double>::infinity();
    penalty += w(i) * norms(i);
  }
  return 0.5 * rss(B) + lambda * penalty;
}

FitResult GroupLassoProblem::fit(const FitConfig& cfg) const {
  const auto start = Clock::now();
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(cfg.eps_abs > 0.0) || !(cfg.eps_rel > 0.0)) throw std::invalid_argument("eps values must be positive");
  if (!(cfg.admm_rho > 0.0)) throw std::invalid_argument("admm_rho must be positive");
  const Eigen::VectorXd w = resolve_weights(cfg.weights, p());

  std::vector<int> finite;
  std::vector<char> is_finite(p(), 0);
  for (Eigen::Index i = 0; i < p(); ++i) {
    if (std::isfinite(w(i))) {
      finite.push_back(static_cast<int>(i));
      is_finite[i] = 1;
    }
  }

  Eigen::MatrixXd be = Eigen::MatrixXd::Zero(p(), k());
  if (cfg.warm_start) {
    if (cfg.warm_start->rows() != p() || cfg.warm_start->cols() != k())
      throw std::invalid_argument("warm start has wrong shape");
    be = basis_->to_euclidean(*cfg.warm_start);
    for (Eigen::Index i = 0; i < p(); ++i)
      if (!is_finite[i]) be.row(i).setZero();
  }

  // Working set.
  std::vector<char> in_set(p(), 0);
  if (!cfg.working_set || cfg.lambda == 0.0) {
    for (int i : finite) in_set[i] = 1;
  } else {
    for (int i : nonzero_rows(be)) in_set[i] = 1;
    for (int i : cfg.screen_hint) {
      if (i < 0 || i >= p()) throw std::invalid_argument("screen hint index out of range");
      if (is_finite[i]) in_set[i] = 1;
    }
  }

  const double inactive_tol = cfg.kkt_inactive_tol;
  double rho = cfg.admm_rho;
  int iterations = 0;
  bool sub_converged = false;
  while (true) {
    std::vector<int> set;
    for (int i : finite)
      if (in_set[i]) set.push_back(i);
    if (!set.empty()) {
      const Eigen::MatrixXd H0 = xtx_(set, set);
      const Eigen::MatrixXd b = xty_(set, Eigen::all);
      const Eigen::VectorXd ws = w(set);
      SubproblemResult sub =
          admm_subproblem(H0, b, ws, cfg.lambda, be(set, Eigen::all), rho, cfg, cfg.max_iter - iterations);
      iterations += sub.iterations;
      rho = sub.rho;
      sub_converged = sub.converged;
      be.setZero();
      be(set, Eigen::all) = sub.z;
    } else {
      be.setZero();
      sub_converged = true;
    }
    if (set.size() == finite.size() || !sub_converged || iterations >= cfg.max_iter) break;

    const Eigen::MatrixXd g = gradient(be, nonzero_rows(be));
    bool grew = false;
    for (int i : finite) {
      if (in_set[i]) continue;
      if (g.row(i).norm() - cfg.lambda * w(i) > inactive_tol) {
        in_set[i] = 1;
        grew = true;
      }
    }
    if (!grew) break;
  }

  FitResult out;
  out.B_hat = CoefficientMatrix{basis_->from_euclidean(be), basis_};
  // Exact zeros survive the back transform only when rows were zero.
  for (Eigen::Index i = 0; i < p(); ++i)
    if (be.row(i).cwiseAbs().maxCoeff() == 0.0) out.B_hat.B.row(i).setZero();
  out.support = nonzero_rows(be);
  out.lambda = cfg.lambda;
  out.weights = w;
  out.rss = rss(out.B_hat.B);
  out.objective = objective(out.B_hat.B, cfg.lambda, w);
  out.kkt = kkt(out.B_hat.B, cfg.lambda, w);
  out.iterations = iterations;
  out.final_rho = rho;
  out.converged =
      sub_converged && out.kkt.within(cfg.kkt_active_tol * std::max(cfg.lambda, 1.0), cfg.kkt_inactive_tol);
  out.wall_time = seconds_since(start);
  return out;
}

FitResult fit_group_lasso(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                          const FitConfig& cfg) {
  return GroupLassoProblem(Y, X, std::move(basis)).fit(cfg);
}

CoefficientMatrix closed_form_orthogonal(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                                         const FitConfig& cfg) {
  if (!basis) throw std::invalid_argument("basis is required");
  if (Y.rows() != X.rows()) throw std::invalid_argument("Y and X must have the same number of rows");
  if (Y.cols() != basis->dim()) throw std::invalid_argument("incompatible bases");
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd scaled_gram = X.transpose() * X / n;
  if ((scaled_gram - Eigen::MatrixXd::Identity(X.cols(), X.cols())).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("design is not orthogonal: N^-1 X^T X differs from the identity");
  const Eigen::VectorXd w = resolve_weights(cfg.weights, X.cols());

  Eigen::MatrixXd ls = X.transpose() * Y / n;
  const Eigen::VectorXd norms = basis->row_sq_norms(ls).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < ls.rows(); ++i) {
    const double threshold = cfg.lambda * w(i) / n;
    if (std::isinf(w(i)) || !(norms(i) > threshold)) {
      ls.row(i).setZero();
    } else {
      ls.row(i) *= 1.0 - threshold / norms(i);
    }
  }
  return CoefficientMatrix{std::move(ls), std::move(basis)};
}

FitResult fit_fsl(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, double lambda,
                  FitConfig base) {
  base.lambda = lambda;
  base.weights = Eigen::VectorXd();
  return fit_group_lasso(Y, X, std::move(basis), base);
}

Eigen::VectorXd adaptive_weights(const FitResult& fsl) {
  const Eigen::VectorXd norms = fsl.B_hat.row_norms();
  Eigen::VectorXd w(norms.size());
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    w(i) = norms(i) > 0.0 ? 1.0 / norms(i) : std::numeric_limits<double>::infinity();
  return w;
}

ReweightedProblem::ReweightedProblem(const GroupLassoProblem& original, const Eigen::VectorXd& weights) {
  const Eigen::VectorXd w = resolve_weights(weights, original.p());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (std::isfinite(w(i))) kept.push_back(static_cast<int>(i));
  const auto q = static_cast<Eigen::Index>(kept.size());
  scale = Eigen::VectorXd::Ones(q);
  inner_weights = Eigen::VectorXd::Ones(q);
  max_weight = 0.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double wj = w(kept[j]);
    if (wj > 0.0) {
      scale(j) = wj;
      max_weight = std::max(max_weight, wj);
    } else {
      inner_weights(j) = 0.0;
    }
  }
  if (!(max_weight > 0.0)) max_weight = 1.0;
  if (q == 0) return;
  Eigen::MatrixXd x = original.design()(Eigen::all, kept);
  for (Eigen::Index j = 0; j < q; ++j) x.col(j) /= scale(j);
  problem.emplace(original.outcomes_in_basis(), x, original.basis());
}

FitConfig ReweightedProblem::inner_config(const FitConfig& cfg) const {
  FitConfig inner = cfg;
  inner.weights = inner_weights;
  inner.kkt_active_tol = cfg.kkt_active_tol / max_weight;
  inner.kkt_inactive_tol = cfg.kkt_inactive_tol / max_weight;
  if (cfg.warm_start) {
    Eigen::MatrixXd alpha = (*cfg.warm_start)(kept, Eigen::all);
    for (Eigen::Index j = 0; j < alpha.rows(); ++j) alpha.row(j) *= scale(j);
    inner.warm_start = std::move(alpha);
  }
  inner.screen_hint.clear();
  for (int i : cfg.screen_hint) {
    const auto it = std::lower_bound(kept.begin(), kept.end(), i);
    if (it != kept.end() && *it == i) inner.screen_hint.push_back(static_cast<int>(it - kept.begin()));
  }
  return inner;
}

FitResult ReweightedProblem::map_back(const GroupLassoProblem& original, const Eigen::VectorXd& weights,
                                      const FitResult& inner, const FitConfig& cfg) const {
  const Eigen::VectorXd w = resolve_weights(weights, original.p());
  FitResult out;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(original.p(), original.k());
  for (std::size_t j = 0; j < kept.size(); ++j)
    B.row(kept[j]) = inner.B_hat.B.row(static_cast<Eigen::Index>(j)) / scale(static_cast<Eigen::Index>(j));
  out.B_hat = CoefficientMatrix{std::move(B), original.basis()};
  out.support = out.B_hat.support();
  out.lambda = inner.lambda;
  out.weights = w;
  out.rss = original.rss(out.B_hat.B);
  out.objective = original.objective(out.B_hat.B, inner.lambda, w);
  out.kkt = original.kkt(out.B_hat.B, inner.lambda, w);
  out.iterations = inner.iterations;
  out.final_rho = inner.final_rho;
  out.wall_time = inner.wall_time;
  out.converged =
      inner.converged && out.kkt.within(cfg.kkt_active_tol * std::max(inner.lambda, 1.0), cfg.kkt_inactive_tol);
  return out;
}

FitResult ReweightedProblem::zero_fit(const GroupLassoProblem& original, const Eigen::VectorXd& weights,
                                      double lambda) const {
  FitResult out;
  out.B_hat = CoefficientMatrix{Eigen::MatrixXd::Zero(original.p(), original.k()), original.basis()};
  out.lambda = lambda;
  out.weights = resolve_weights(weights, original.p());
  out.rss = original.rss(out.B_hat.B);
  out.objective = 0.5 * out.rss;
  out.kkt = original.kkt(out.B_hat.B, lambda, out.weights);
  out.converged = true;
  return out;
}

FitResult fit_reweighted(const GroupLassoProblem& problem, const Eigen::VectorXd& weights, const FitConfig& cfg) {
  const auto start = Clock::now();
  const ReweightedProblem reduced(problem, weights);
  FitResult out;
  if (!reduced.problem) {
    out = reduced.zero_fit(problem, weights, cfg.lambda);
  } else {
    const FitResult inner = reduced.problem->fit(reduced.inner_config(cfg));
    out = reduced.map_back(problem, weights, inner, cfg);
  }
  out.wall_time = seconds_since(start);
  return out;
}

AfslResult fit_afsl(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, double lambda_fsl,
                    double lambda_afsl, FitConfig base) {
  const GroupLassoProblem problem(Y, X, std::move(basis));
  AfslResult out;
  base.weights = Eigen::VectorXd();
  base.lambda = lambda_fsl;
  out.fsl = problem.fit(base);
  out.weights = adaptive_weights(out.fsl);
  base.lambda = lambda_afsl;
  base.warm_start.reset();
  base.screen_hint.clear();
  out.afsl = fit_reweighted(problem, out.weights, base);
  return out;
}

KktReport kkt_check(const CoefficientMatrix& B_hat, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                    const FitConfig& cfg) {
  if (!B_hat.basis) throw std::invalid_argument("basis is required");
  if (B_hat.B.rows() != X.cols()) throw std::invalid_argument("coefficient rows must match predictors");
  const Basis& basis = *B_hat.basis;
  const Eigen::VectorXd w = resolve_weights(cfg.weights, X.cols());
  // Direct evaluation: residual and X_i^T R in the basis, norms in G.
  const Eigen::MatrixXd residual = Y - X * B_hat.B;
  const Eigen::MatrixXd xtr = X.transpose() * residual;
  const Eigen::VectorXd norms = B_hat.row_norms();
  KktReport report;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    if (std::isinf(w(i))) continue;
    if (norms(i) > 0.0) {
      const Eigen::RowVectorXd stationarity = -xtr.row(i) + (cfg.lambda * w(i) / norms(i)) * B_hat.B.row(i);
      report.max_active_residual =
          std::max(report.max_active_residual, std::sqrt(std::max(0.0, basis.row_sq_norms(stationarity)(0))));
    } else {
      const double gn = std::sqrt(std::max(0.0, basis.row_sq_norms(xtr.row(i))(0)));
      report.max_inactive_slack_violation = std::max(report.max_inactive_slack_violation, gn - cfg.lambda * w(i));
    }
  }
  return report;
}

CoefficientMatrix oracle_estimator(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                                   const std::vector<int>& support, BasisPtr basis) {
  if (!basis) throw std::invalid_argument("basis is required");
  if (Y.rows() != X.rows()) throw std::invalid_argument("Y and X must have the same number of rows");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(X.cols(), Y.cols());
  if (support.empty()) return CoefficientMatrix{std::move(B), std::move(basis)};
  for (int i : support)
    if (i < 0 || i >= X.cols()) throw std::invalid_argument("support index out of range");
  const Eigen::MatrixXd x1 = X(Eigen::all, support);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x1);
  if (qr.rank() < x1.cols()) throw NumericalError("oracle design is rank deficient");
  B(support, Eigen::all) = qr.solve(Y);
  return CoefficientMatrix{std::move(B), std::move(basis)};
}

}  // namespace fosr
