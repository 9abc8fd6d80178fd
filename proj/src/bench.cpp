#include "fosr/bench.hpp"

#include "fosr/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace fosr {

SelectionCounts selection_metrics(const std::vector<int>& support_hat, const std::vector<int>& support_true) {
  SelectionCounts out;
  for (int i : support_hat) {
    if (std::find(support_true.begin(), support_true.end(), i) != support_true.end())
      ++out.true_positives;
    else
      ++out.false_positives;
  }
  return out;
}

double rmsp(const CoefficientMatrix& B_hat, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X) {
  if (X.cols() != B_hat.B.rows() || Y.rows() != X.rows() || Y.cols() != B_hat.B.cols())
    throw std::invalid_argument("rmsp: inconsistent shapes");
  const Eigen::MatrixXd residual = Y - X * B_hat.B;
  return std::sqrt(B_hat.basis->row_sq_norms(residual).sum() / static_cast<double>(Y.rows()));
}

double rmsp(const CoefficientMatrix& B_hat, const SimulatedDataset& dataset) {
  return rmsp(B_hat, dataset.Y, dataset.X);
}

PreparedOutcomes prepare_outcomes(const Eigen::MatrixXd& raw, const std::vector<double>& grid,
                                  const PrepConfig& cfg) {
  PreparedOutcomes out;
  if (cfg.smooth) {
    out.source_basis = build_bspline_basis(grid, cfg.smoothing);
    SmoothingResult smoothed = smooth_curves(raw, *out.source_basis, cfg.smoothing);
    out.smoothing = smoothed.chosen_smoothing;
    out.source_coeffs = std::move(smoothed.coeffs);
  } else {
    out.source_basis = Basis::raw_grid(grid);
    out.source_coeffs = raw;
  }
  FpcaOutput rotated = fpca(out.source_coeffs, *out.source_basis, cfg.target_variance);
  out.scores = std::move(rotated.scores);
  out.fpc_basis = std::move(rotated.fpc_basis);
  out.fpca = std::move(rotated.result);
  return out;
}

AssumptionDiagnostics diagnostics(const Eigen::MatrixXd& X, const std::vector<int>& support_true,
                                  const CoefficientMatrix& B_true) {
  if (support_true.empty()) throw std::invalid_argument("diagnostics need a nonempty support");
  if (static_cast<Eigen::Index>(support_true.size()) != B_true.B.rows())
    throw std::invalid_argument("B_true must have one row per true predictor");
  const double n = static_cast<double>(X.rows());
  std::vector<char> in_support(X.cols(), 0);
  for (int i : support_true) {
    if (i < 0 || i >= X.cols()) throw std::invalid_argument("support index out of range");
    in_support[i] = 1;
  }
  std::vector<int> rest;
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    if (!in_support[i]) rest.push_back(static_cast<int>(i));

  AssumptionDiagnostics out;
  const Eigen::MatrixXd x1 = X(Eigen::all, support_true);
  const Eigen::MatrixXd s11 = x1.transpose() * x1 / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s11, Eigen::EigenvaluesOnly);
  out.sigma_min = eig.eigenvalues().minCoeff();
  out.sigma_max = eig.eigenvalues().maxCoeff();
  if (rest.empty()) {
    out.irrepresentable_phi = 0.0;
  } else if (!(out.sigma_min > 1e-12 * std::max(out.sigma_max, 1.0))) {
    out.irrepresentable_phi = std::numeric_limits<double>::infinity();
  } else {
    const Eigen::MatrixXd s21 = X(Eigen::all, rest).transpose() * x1 / n;
    // Sigma_21 Sigma_11^{-1} = (Sigma_11^{-1} Sigma_12)^T
    const Eigen::MatrixXd a = s11.ldlt().solve(s21.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    out.irrepresentable_phi = svd.singularValues()(0);
  }
  out.b_N = B_true.row_norms().minCoeff();
  const double i0 = static_cast<double>(support_true.size());
  out.signal_ratio = out.b_N * out.b_N * n / (i0 * i0 * std::log(static_cast<double>(X.cols())));
  return out;
}

BenchMetrics aggregate(const std::vector<ReplicationRow>& rows, const std::string& method) {
  BenchMetrics m;
  int timed = 0;
  for (const auto& row : rows) {
    if (row.method != method) continue;
    m.mean_wall_time += row.seconds;
    ++timed;
    if (row.failed) {
      ++m.n_failed;
      continue;
    }
    m.true_positives += row.tp;
    m.false_positives += row.fp;
    m.rmsp += row.rmsp;
    ++m.n_replications;
  }
  if (m.n_replications > 0) {
    m.true_positives /= m.n_replications;
    m.false_positives /= m.n_replications;
    m.rmsp /= m.n_replications;
  }
  if (timed > 0) m.mean_wall_time /= timed;
  return m;
}

namespace {

struct ReplicationOutcome {
  ReplicationRow fsl;
  ReplicationRow afsl;
  AssumptionDiagnostics diag;
};

ReplicationOutcome run_replication(const ScenarioConfig& cfg, const PathConfig& path_cfg,
                                   const CampaignOptions& options, int rep) {
  ReplicationOutcome out;
  out.fsl.replication = out.afsl.replication = rep;
  out.fsl.method = "fsl";
  out.afsl.method = "afsl";
  try {
    const SimulatedDataset ds = generate_scenario(cfg, rep);
    if (options.compute_diagnostics && cfg.I0 > 0)
      out.diag = diagnostics(ds.X, ds.support_true, CoefficientMatrix{ds.beta_true, Basis::raw_grid(ds.grid)});
    const PreparedOutcomes prepared = prepare_outcomes(ds.Y, ds.grid, options.prep);
    const GroupLassoProblem problem(prepared.scores, ds.X, prepared.fpc_basis);
    const Selection sel = select_model(problem, Mode::afsl, path_cfg);

    CoefficientMatrix oracle;
    if (options.compute_oracle_gap && cfg.I0 > 0)
      oracle = oracle_estimator(prepared.scores, ds.X, ds.support_true, prepared.fpc_basis);

    auto fill = [&](ReplicationRow& row, const FitResult& fit) {
      const SelectionCounts counts = selection_metrics(fit.support, ds.support_true);
      row.tp = counts.true_positives;
      row.fp = counts.false_positives;
      row.rmsp = rmsp(fit.B_hat, prepared.scores, ds.X);
      row.lambda_selected = fit.lambda;
      row.df = static_cast<int>(fit.support.size());
      row.converged = fit.converged;
      row.failed = !fit.converged;
      row.k_fpc = static_cast<int>(prepared.scores.cols());
      if (oracle.basis) {
        const Eigen::MatrixXd diff = fit.B_hat.B - oracle.B;
        row.oracle_gap =
            std::sqrt(static_cast<double>(cfg.N)) * std::sqrt(prepared.fpc_basis->row_sq_norms(diff).sum());
      }
    };
    fill(out.fsl, *sel.fsl_chosen);
    fill(out.afsl, sel.chosen);
    out.fsl.seconds = out.fsl.stage_seconds = sel.fsl_seconds;
    out.afsl.stage_seconds = sel.afsl_seconds;
    out.afsl.seconds = sel.fsl_seconds + sel.afsl_seconds;
  } catch (const std::exception& e) {
    out.fsl.failed = out.afsl.failed = true;
    out.fsl.error = out.afsl.error = e.what();
  }
  return out;
}

}  // namespace

CampaignResult run_campaign(const ScenarioConfig& cfg, const PathConfig& path_cfg, const CampaignOptions& options) {
  cfg.validate();
  path_cfg.validate();
  CampaignResult result;
  result.scenario = cfg;
  std::vector<ReplicationOutcome> outcomes(cfg.replications);

  const int workers = std::max(1, std::min(options.threads, cfg.replications));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int rep = next++; rep < cfg.replications; rep = next++)
      outcomes[rep] = run_replication(cfg, path_cfg, options, rep);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  double fsl_stage = 0.0, afsl_stage = 0.0;
  for (auto& o : outcomes) {
    fsl_stage += o.fsl.stage_seconds;
    afsl_stage += o.afsl.stage_seconds;
    result.rows.push_back(std::move(o.fsl));
    result.rows.push_back(std::move(o.afsl));
    if (options.compute_diagnostics && cfg.I0 > 0) result.diagnostics.push_back(o.diag);
  }
  result.mean_fsl_stage_seconds = fsl_stage / cfg.replications;
  result.mean_afsl_stage_seconds = afsl_stage / cfg.replications;
  result.fsl = aggregate(result.rows, "fsl");
  result.afsl = aggregate(result.rows, "afsl");
  return result;
}

namespace {

std::string timing_field(double seconds, bool timing) { return timing ? io::format_double(seconds) : "NA"; }

}  // namespace

void write_campaign_csv(std::ostream& out, const CampaignResult& result, bool timing) {
  const ScenarioConfig& s = result.scenario;
  out << "N,I,I0,grid_points,tau_beta,tau_eps,rho,replication,method,tp,fp,rmsp,lambda_selected,df,seconds,"
         "stage_seconds,converged,failed,oracle_gap,k_fpc\n";
  for (const auto& row : result.rows) {
    out << s.N << ',' << s.I << ',' << s.I0 << ',' << s.grid_points << ',' << io::format_double(s.tau_beta) << ','
        << io::format_double(s.tau_eps) << ',' << io::format_double(s.rho) << ',' << row.replication << ','
        << row.method << ',' << row.tp << ',' << row.fp << ',' << io::format_double(row.rmsp) << ','
        << io::format_double(row.lambda_selected) << ',' << row.df << ',' << timing_field(row.seconds, timing)
        << ',' << timing_field(row.stage_seconds, timing) << ',' << (row.converged ? 1 : 0) << ','
        << (row.failed ? 1 : 0) << ',' << io::format_double(row.oracle_gap) << ',' << row.k_fpc << '\n';
  }
}

void write_summary_csv(std::ostream& out, const CampaignResult& result, bool timing) {
  const ScenarioConfig& s = result.scenario;
  out << "N,I,I0,grid_points,tau_eps,rho,fsl_tp,afsl_tp,fsl_fp,afsl_fp,fsl_rmsp,afsl_rmsp,fsl_time,afsl_time,"
         "n_replications,fsl_failed,afsl_failed\n";
  out << s.N << ',' << s.I << ',' << s.I0 << ',' << s.grid_points << ',' << io::format_double(s.tau_eps) << ','
      << io::format_double(s.rho) << ',' << io::format_double(result.fsl.true_positives) << ','
      << io::format_double(result.afsl.true_positives) << ',' << io::format_double(result.fsl.false_positives)
      << ',' << io::format_double(result.afsl.false_positives) << ',' << io::format_double(result.fsl.rmsp) << ','
      << io::format_double(result.afsl.rmsp) << ',' << timing_field(result.fsl.mean_wall_time, timing) << ','
      << timing_field(result.afsl.mean_wall_time, timing) << ',' << s.replications << ',' << result.fsl.n_failed
      << ',' << result.afsl.n_failed << '\n';
}

void write_diagnostics_csv(std::ostream& out, const std::vector<AssumptionDiagnostics>& diags) {
  out << "replication,sigma_min,sigma_max,irrepresentable_phi,b_N,signal_ratio\n";
  for (std::size_t r = 0; r < diags.size(); ++r) {
    const auto& d = diags[r];
    out << r << ',' << io::format_double(d.sigma_min) << ',' << io::format_double(d.sigma_max) << ','
        << io::format_double(d.irrepresentable_phi) << ',' << io::format_double(d.b_N) << ','
        << io::format_double(d.signal_ratio) << '\n';
  }
}

double TrainTestResult::mean(const std::string& key) const {
  for (const auto& [k, v] : means)
    if (k == key) return v;
  throw std::out_of_range("no mean named " + key);
}

std::pair<int, int> split_sizes(int n, double split_fraction) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw std::invalid_argument("split_fraction must lie in (0,1)");
  const int train = static_cast<int>(std::lround(split_fraction * n));
  if (train < 2 || n - train < 1) throw std::invalid_argument("both splits must be nonempty");
  return {train, n - train};
}

TrainTestResult train_test_rmse(const SimulatedDataset& dataset, double split_fraction, int n_splits,
                                const PathConfig& path_cfg, const PrepConfig& prep, std::uint64_t seed) {
  if (n_splits < 1) throw std::invalid_argument("n_splits must be positive");
  const int n = static_cast<int>(dataset.Y.rows());
  const auto [n_train, n_test] = split_sizes(n, split_fraction);
  TrainTestResult out;
  out.n_train = n_train;
  out.n_test = n_test;

  // Curves are smoothed once; the FPC rotation and all fits use training rows only.
  BasisPtr source;
  Eigen::MatrixXd coeffs;
  if (prep.smooth) {
    source = build_bspline_basis(dataset.grid, prep.smoothing);
    coeffs = smooth_curves(dataset.Y, *source, prep.smoothing).coeffs;
  } else {
    source = Basis::raw_grid(dataset.grid);
    coeffs = dataset.Y;
  }

  const std::vector<std::string> keys = {"fsl_bic", "fsl_ebic", "afsl_bic", "afsl_ebic"};
  std::vector<double> sums(keys.size(), 0.0);
  for (int split = 0; split < n_splits; ++split) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(split)));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> train(order.begin(), order.begin() + n_train);
    std::vector<int> test(order.begin() + n_train, order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());

    const FpcaOutput rotated = fpca(coeffs(train, Eigen::all), *source, prep.target_variance);
    const Eigen::MatrixXd y_test = project_scores(coeffs(test, Eigen::all), rotated.result, *source);
    const Eigen::RowVectorXd x_mean = dataset.X(train, Eigen::all).colwise().mean();
    const Eigen::MatrixXd x_train = dataset.X(train, Eigen::all).rowwise() - x_mean;
    const Eigen::MatrixXd x_test = dataset.X(test, Eigen::all).rowwise() - x_mean;
    const GroupLassoProblem problem(rotated.scores, x_train, rotated.fpc_basis);

    std::size_t slot = 0;
    for (Criterion crit : {Criterion::bic, Criterion::ebic}) {
      PathConfig pc = path_cfg;
      pc.criterion = crit;
      const Selection sel = select_model(problem, Mode::afsl, pc);
      const FitResult* fits[2] = {&*sel.fsl_chosen, &sel.chosen};
      const char* methods[2] = {"fsl", "afsl"};
      for (int m = 0; m < 2; ++m) {
        SplitRow row;
        row.split = split;
        row.method = methods[m];
        row.criterion = to_string(crit);
        row.rmse = rmsp(fits[m]->B_hat, y_test, x_test);
        row.df = static_cast<int>(fits[m]->support.size());
        const std::size_t key = (m == 0 ? 0 : 2) + slot;
        sums[key] += row.rmse;
        out.rows.push_back(std::move(row));
      }
      ++slot;
    }
  }
  for (std::size_t k = 0; k < keys.size(); ++k) out.means.emplace_back(keys[k], sums[k] / n_splits);
  return out;
}

void write_split_csv(std::ostream& out, const TrainTestResult& result) {
  out << "split,method,criterion,rmse,df\n";
  for (const auto& row : result.rows)
    out << row.split << ',' << row.method << ',' << row.criterion << ',' << io::format_double(row.rmse) << ','
        << row.df << '\n';
}

}  // namespace fosr
