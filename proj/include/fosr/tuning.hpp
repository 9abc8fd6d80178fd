#pragma once

// Lambda paths with warm starts and selection by BIC / extended BIC.

#include "fosr/io.hpp"
#include "fosr/solver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fosr {

enum class Criterion { bic, ebic };
enum class Mode { fsl, afsl };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& name);
std::string to_string(Mode m);
Mode mode_from_string(const std::string& name);

struct PathConfig {
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  Criterion criterion = Criterion::bic;
  double ebic_gamma = 0.2;
  // Stop the path once a fit selects more than max_df predictors. With
  // max_df == 0 the cap is floor(N / 2).
  bool early_stop = true;
  int max_df = 0;
  FitConfig fit;  // solver settings shared by every path point

  void validate() const;
  io::KeyValue to_key_value() const;
  static PathConfig from_key_value(const io::KeyValue& kv);
};

struct PathResult {
  Eigen::VectorXd lambdas;  // the full planned grid
  std::vector<FitResult> fits;  // one per visited grid point
  Eigen::VectorXd criterion_values;
  Eigen::VectorXd bic;
  Eigen::VectorXd ebic;
  int selected_index = 0;
  bool truncated = false;  // stopped early by the df cap
  Criterion criterion = Criterion::bic;
  double gamma = 0.2;
  int n = 0;
  int p = 0;
  double wall_time = 0.0;
};

Eigen::VectorXd lambda_path(const GroupLassoProblem& problem, const Eigen::VectorXd& weights,
                            const PathConfig& cfg);
Eigen::VectorXd lambda_path(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                            const Eigen::VectorXd& weights, const PathConfig& cfg);
Eigen::VectorXd geometric_lambdas(double lambda_max, int count, double min_ratio);

// BIC = N log(RSS/N) + df log N; EBIC adds 2 gamma df log I. df counts
// selected functional coefficients. RSS == 0 yields -inf.
double criterion_value(const FitResult& fit, Criterion criterion, double gamma, int n, int p);
double criterion_from_rss(double rss, int df, Criterion criterion, double gamma, int n, int p);

// Warm-started path over the problem with the given weights. Non-unit or
// infinite weights are handled through the change of variables of
// fit_reweighted; fits and criteria are always reported in the original
// parameterization with I = problem.p().
PathResult fit_path(const GroupLassoProblem& problem, const Eigen::VectorXd& weights, const PathConfig& cfg);

struct Selection {
  PathResult path;  // AFSL path in afsl mode
  FitResult chosen;
  std::optional<PathResult> fsl_path;
  std::optional<FitResult> fsl_chosen;
  Eigen::VectorXd weights;
  double fsl_seconds = 0.0;
  double afsl_seconds = 0.0;  // adaptive stage only
};

Selection select_model(const GroupLassoProblem& problem, Mode mode, const PathConfig& cfg);
Selection select_model(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, Mode mode,
                       const PathConfig& cfg);

// Columns: lambda, df, rss, bic, ebic, converged, iterations, wall_time.
// Without `timing` the wall_time column holds NA so output is reproducible.
void write_path_csv(std::ostream& out, const PathResult& path, bool timing = false);
void write_path_csv_file(const std::string& file, const PathResult& path, bool timing = false);

}  // namespace fosr
