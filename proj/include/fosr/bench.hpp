#pragma once

// Simulation campaigns comparing FSL and AFSL (selection counts, prediction
// error, timing), train/test prediction error on synthetic data, and
// finite-sample diagnostics of the design conditions behind the oracle
// property.

#include "fosr/prep.hpp"
#include "fosr/simgen.hpp"
#include "fosr/tuning.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fosr {

struct SelectionCounts {
  int true_positives = 0;
  int false_positives = 0;
};

SelectionCounts selection_metrics(const std::vector<int>& support_hat, const std::vector<int>& support_true);

// sqrt(N^-1 sum_n ||Y_n - X_n^T B||^2) with the norm of B's basis; Y is in
// the same basis.
double rmsp(const CoefficientMatrix& B_hat, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X);
// B_hat expressed on the dataset grid (raw-grid basis).
double rmsp(const CoefficientMatrix& B_hat, const SimulatedDataset& dataset);

struct PrepConfig {
  bool smooth = true;  // false: FPCA directly on the raw-grid values
  SmoothingConfig smoothing;
  double target_variance = 0.99;
};

// Raw curves turned into the FPC scores the regressions run on.
struct PreparedOutcomes {
  Eigen::MatrixXd scores;  // N x K_fpc, centered
  BasisPtr fpc_basis;
  BasisPtr source_basis;   // B-spline (or raw-grid) basis before rotation
  FpcaResult fpca;
  double smoothing = 0.0;  // chosen GCV parameter, 0 without smoothing
  Eigen::MatrixXd source_coeffs;  // N x K in source_basis
};

PreparedOutcomes prepare_outcomes(const Eigen::MatrixXd& raw, const std::vector<double>& grid,
                                  const PrepConfig& cfg);

struct AssumptionDiagnostics {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double irrepresentable_phi = 0.0;
  double b_N = 0.0;
  double signal_ratio = 0.0;
};

// Eigenvalues of N^-1 X_1^T X_1, the spectral norm of Sigma_21 Sigma_11^-1,
// the smallest true signal norm and b_N^2 N / (I0^2 log I).
AssumptionDiagnostics diagnostics(const Eigen::MatrixXd& X, const std::vector<int>& support_true,
                                  const CoefficientMatrix& B_true);

struct BenchMetrics {
  double true_positives = 0.0;
  double false_positives = 0.0;
  double rmsp = 0.0;
  double mean_wall_time = 0.0;
  int n_replications = 0;  // replications entering the TP/FP/RMSP means
  int n_failed = 0;
};

struct ReplicationRow {
  int replication = 0;
  std::string method;  // "fsl" or "afsl"
  int tp = 0;
  int fp = 0;
  double rmsp = 0.0;
  double lambda_selected = 0.0;
  int df = 0;
  double seconds = 0.0;        // total time to obtain this method's estimate
  double stage_seconds = 0.0;  // time of this method's own stage
  bool converged = false;
  bool failed = false;
  double oracle_gap = 0.0;  // sqrt(N) ||B_hat - B_oracle||
  int k_fpc = 0;
  std::string error;
};

struct CampaignOptions {
  int threads = 1;
  PrepConfig prep;
  bool compute_oracle_gap = true;
  bool compute_diagnostics = true;
};

struct CampaignResult {
  ScenarioConfig scenario;
  BenchMetrics fsl;
  BenchMetrics afsl;
  double mean_fsl_stage_seconds = 0.0;
  double mean_afsl_stage_seconds = 0.0;
  std::vector<ReplicationRow> rows;  // replication-major, fsl then afsl
  std::vector<AssumptionDiagnostics> diagnostics;  // one per replication when computed
};

CampaignResult run_campaign(const ScenarioConfig& cfg, const PathConfig& path_cfg,
                            const CampaignOptions& options = {});

// Means over rows of one method, failed rows excluded from TP/FP/RMSP.
BenchMetrics aggregate(const std::vector<ReplicationRow>& rows, const std::string& method);

void write_campaign_csv(std::ostream& out, const CampaignResult& result, bool timing);
void write_summary_csv(std::ostream& out, const CampaignResult& result, bool timing);
void write_diagnostics_csv(std::ostream& out, const std::vector<AssumptionDiagnostics>& diags);

struct SplitRow {
  int split = 0;
  std::string method;
  std::string criterion;
  double rmse = 0.0;
  int df = 0;
};

struct TrainTestResult {
  int n_train = 0;
  int n_test = 0;
  std::vector<SplitRow> rows;
  // Mean test RMSE keyed "fsl_bic", "fsl_ebic", "afsl_bic", "afsl_ebic".
  std::vector<std::pair<std::string, double>> means;

  double mean(const std::string& key) const;
};

// Sizes of the training and test parts for a split fraction.
std::pair<int, int> split_sizes(int n, double split_fraction);

TrainTestResult train_test_rmse(const SimulatedDataset& dataset, double split_fraction, int n_splits,
                                const PathConfig& path_cfg, const PrepConfig& prep = {},
                                std::uint64_t seed = 1);

void write_split_csv(std::ostream& out, const TrainTestResult& result);

}  // namespace fosr
