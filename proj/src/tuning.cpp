#include "fosr/tuning.hpp"

#include "fosr/errors.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fosr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool all_unit(const Eigen::VectorXd& w) { return w.size() == 0 || (w.array() == 1.0).all(); }

}  // namespace

std::string to_string(Criterion c) { return c == Criterion::bic ? "bic" : "ebic"; }

Criterion criterion_from_string(const std::string& name) {
  if (name == "bic") return Criterion::bic;
  if (name == "ebic") return Criterion::ebic;
  throw ConfigError("unknown criterion '" + name + "' (expected bic or ebic)");
}

std::string to_string(Mode m) { return m == Mode::fsl ? "fsl" : "afsl"; }

Mode mode_from_string(const std::string& name) {
  if (name == "fsl") return Mode::fsl;
  if (name == "afsl") return Mode::afsl;
  throw ConfigError("unknown mode '" + name + "' (expected fsl or afsl)");
}

void PathConfig::validate() const {
  if (n_lambda < 2) throw ConfigError("n_lambda must be at least 2");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) throw ConfigError("lambda_min_ratio must lie in (0, 1)");
  if (!(ebic_gamma >= 0.0)) throw ConfigError("ebic_gamma must be nonnegative");
  if (max_df < 0) throw ConfigError("max_df must be nonnegative");
}

io::KeyValue PathConfig::to_key_value() const {
  io::KeyValue kv;
  kv.set("n_lambda", n_lambda);
  kv.set("lambda_min_ratio", lambda_min_ratio);
  kv.set("criterion", to_string(criterion));
  kv.set("ebic_gamma", ebic_gamma);
  kv.set("early_stop", early_stop);
  kv.set("max_df", max_df);
  kv.set("admm_rho", fit.admm_rho);
  kv.set("eps_abs", fit.eps_abs);
  kv.set("eps_rel", fit.eps_rel);
  kv.set("max_iter", fit.max_iter);
  return kv;
}

PathConfig PathConfig::from_key_value(const io::KeyValue& kv) {
  PathConfig cfg;
  cfg.n_lambda = static_cast<int>(kv.get_int("n_lambda", cfg.n_lambda));
  cfg.lambda_min_ratio = kv.get_double("lambda_min_ratio", cfg.lambda_min_ratio);
  if (kv.has("criterion")) cfg.criterion = criterion_from_string(kv.get("criterion"));
  cfg.ebic_gamma = kv.get_double("ebic_gamma", cfg.ebic_gamma);
  cfg.early_stop = kv.get_bool("early_stop", cfg.early_stop);
  cfg.max_df = static_cast<int>(kv.get_int("max_df", cfg.max_df));
  cfg.fit.admm_rho = kv.get_double("admm_rho", cfg.fit.admm_rho);
  cfg.fit.eps_abs = kv.get_double("eps_abs", cfg.fit.eps_abs);
  cfg.fit.eps_rel = kv.get_double("eps_rel", cfg.fit.eps_rel);
  cfg.fit.max_iter = static_cast<int>(kv.get_int("max_iter", cfg.fit.max_iter));
  cfg.validate();
  return cfg;
}

Eigen::VectorXd geometric_lambdas(double lambda_max, int count, double min_ratio) {
  Eigen::VectorXd out(count);
  const double step = std::log(min_ratio) / (count - 1);
  for (int j = 0; j < count; ++j) out(j) = lambda_max * std::exp(step * j);
  out(0) = lambda_max;
  out(count - 1) = lambda_max * min_ratio;
  return out;
}

Eigen::VectorXd lambda_path(const GroupLassoProblem& problem, const Eigen::VectorXd& weights,
                            const PathConfig& cfg) {
  cfg.validate();
  if (weights.size() > 0 && !weights.array().isFinite().any())
    throw std::invalid_argument("lambda path needs at least one finite weight");
  return geometric_lambdas(problem.lambda_max(weights), cfg.n_lambda, cfg.lambda_min_ratio);
}

Eigen::VectorXd lambda_path(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis,
                            const Eigen::VectorXd& weights, const PathConfig& cfg) {
  return lambda_path(GroupLassoProblem(Y, X, std::move(basis)), weights, cfg);
}

double criterion_from_rss(double rss, int df, Criterion criterion, double gamma, int n, int p) {
  if (!(rss > 0.0)) return -std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  double value = nn * std::log(rss / nn) + df * std::log(nn);
  if (criterion == Criterion::ebic) value += 2.0 * gamma * df * std::log(static_cast<double>(p));
  return value;
}

double criterion_value(const FitResult& fit, Criterion criterion, double gamma, int n, int p) {
  return criterion_from_rss(fit.rss, static_cast<int>(fit.support.size()), criterion, gamma, n, p);
}

namespace {

// Path over a unit-weight problem with the sequential strong rule as the
// initial working set at each grid point.
void run_unit_path(const GroupLassoProblem& problem, const Eigen::VectorXd& inner_weights,
                   const Eigen::VectorXd& lambdas, const PathConfig& cfg,
                   const std::function<void(const FitResult&)>& on_fit,
                   const std::function<bool(const FitResult&)>& stop) {
  Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(problem.p(), problem.k());
  Eigen::MatrixXd grad = problem.gradient(Eigen::MatrixXd::Zero(problem.p(), problem.k()), {});
  double rho = cfg.fit.admm_rho;
  double previous = lambdas(0);
  for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
    const double lambda = lambdas(j);
    FitConfig fc = cfg.fit;
    fc.lambda = lambda;
    fc.weights = inner_weights;
    fc.warm_start = warm;
    fc.working_set = true;
    fc.admm_rho = rho;
    fc.screen_hint.clear();
    for (Eigen::Index i = 0; i < problem.p(); ++i) {
      const double w = inner_weights.size() ? inner_weights(i) : 1.0;
      if (grad.row(i).norm() >= w * (2.0 * lambda - previous)) fc.screen_hint.push_back(static_cast<int>(i));
    }
    FitResult fit = problem.fit(fc);
    warm = fit.B_hat.B;
    rho = fit.final_rho;
    grad = problem.gradient(problem.basis()->to_euclidean(warm), fit.support);
    previous = lambda;
    on_fit(fit);
    if (stop(fit)) break;
  }
}

}  // namespace

PathResult fit_path(const GroupLassoProblem& problem, const Eigen::VectorXd& weights, const PathConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  PathResult out;
  out.criterion = cfg.criterion;
  out.gamma = cfg.ebic_gamma;
  out.n = static_cast<int>(problem.n());
  out.p = static_cast<int>(problem.p());
  out.lambdas = lambda_path(problem, weights, cfg);

  const int df_cap = cfg.max_df > 0 ? cfg.max_df : out.n / 2;
  auto stop = [&](const FitResult& fit) {
    if (cfg.early_stop && static_cast<int>(fit.support.size()) > df_cap) {
      out.truncated = true;
      return true;
    }
    return false;
  };

  if (all_unit(weights)) {
    run_unit_path(problem, Eigen::VectorXd(), out.lambdas, cfg,
                  [&](const FitResult& fit) { out.fits.push_back(fit); }, stop);
  } else {
    const ReweightedProblem reduced(problem, weights);
    const FitConfig inner_cfg = reduced.inner_config(cfg.fit);
    PathConfig inner_path = cfg;
    inner_path.fit = inner_cfg;
    run_unit_path(*reduced.problem, reduced.inner_weights, out.lambdas, inner_path,
                  [&](const FitResult& inner) {
                    out.fits.push_back(reduced.map_back(problem, weights, inner, cfg.fit));
                  },
                  stop);
  }

  const auto visited = static_cast<Eigen::Index>(out.fits.size());
  out.bic.resize(visited);
  out.ebic.resize(visited);
  for (Eigen::Index j = 0; j < visited; ++j) {
    out.bic(j) = criterion_value(out.fits[j], Criterion::bic, cfg.ebic_gamma, out.n, out.p);
    out.ebic(j) = criterion_value(out.fits[j], Criterion::ebic, cfg.ebic_gamma, out.n, out.p);
  }
  out.criterion_values = cfg.criterion == Criterion::bic ? out.bic : out.ebic;
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < visited; ++j)
    if (out.criterion_values(j) < out.criterion_values(best)) best = j;
  out.selected_index = static_cast<int>(best);
  out.wall_time = seconds_since(start);
  return out;
}

Selection select_model(const GroupLassoProblem& problem, Mode mode, const PathConfig& cfg) {
  Selection out;
  const auto fsl_start = Clock::now();
  PathResult fsl = fit_path(problem, Eigen::VectorXd(), cfg);
  FitResult fsl_chosen = fsl.fits[fsl.selected_index];
  out.fsl_seconds = seconds_since(fsl_start);
  if (mode == Mode::fsl) {
    out.weights = Eigen::VectorXd::Ones(problem.p());
    out.chosen = fsl_chosen;
    out.path = std::move(fsl);
    return out;
  }

  const auto afsl_start = Clock::now();
  out.weights = adaptive_weights(fsl_chosen);
  if (!out.weights.array().isFinite().any()) {
    // Nothing survived the first stage; the adaptive problem is empty.
    const ReweightedProblem reduced(problem, out.weights);
    PathResult empty;
    empty.criterion = cfg.criterion;
    empty.gamma = cfg.ebic_gamma;
    empty.n = static_cast<int>(problem.n());
    empty.p = static_cast<int>(problem.p());
    empty.lambdas = Eigen::VectorXd::Zero(1);
    empty.fits.push_back(reduced.zero_fit(problem, out.weights, 0.0));
    empty.bic = Eigen::VectorXd::Constant(1, criterion_value(empty.fits[0], Criterion::bic, cfg.ebic_gamma,
                                                             empty.n, empty.p));
    empty.ebic = Eigen::VectorXd::Constant(1, criterion_value(empty.fits[0], Criterion::ebic, cfg.ebic_gamma,
                                                              empty.n, empty.p));
    empty.criterion_values = cfg.criterion == Criterion::bic ? empty.bic : empty.ebic;
    out.path = std::move(empty);
  } else {
    out.path = fit_path(problem, out.weights, cfg);
  }
  out.chosen = out.path.fits[out.path.selected_index];
  out.afsl_seconds = seconds_since(afsl_start);
  out.fsl_path = std::move(fsl);
  out.fsl_chosen = std::move(fsl_chosen);
  return out;
}

Selection select_model(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, BasisPtr basis, Mode mode,
                       const PathConfig& cfg) {
  return select_model(GroupLassoProblem(Y, X, std::move(basis)), mode, cfg);
}

void write_path_csv(std::ostream& out, const PathResult& path, bool timing) {
  out << "lambda,df,rss,bic,ebic,converged,iterations,wall_time\n";
  for (std::size_t j = 0; j < path.fits.size(); ++j) {
    const FitResult& fit = path.fits[j];
    const auto jj = static_cast<Eigen::Index>(j);
    out << io::format_double(fit.lambda) << ',' << fit.support.size() << ',' << io::format_double(fit.rss) << ','
        << io::format_double(path.bic(jj)) << ',' << io::format_double(path.ebic(jj)) << ','
        << (fit.converged ? 1 : 0) << ',' << fit.iterations << ','
        << (timing ? io::format_double(fit.wall_time) : "NA") << '\n';
  }
}

void write_path_csv_file(const std::string& file, const PathResult& path, bool timing) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file);
  write_path_csv(out, path, timing);
}

}  // namespace fosr
