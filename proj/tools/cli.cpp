#include "cli.hpp"

#include "svg.hpp"

#include "fosr/bench.hpp"
#include "fosr/errors.hpp"
#include "fosr/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace fosr::cli {

namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::optional<long long> seed;
  int replication = 0;
};

struct SmoothArgs {
  std::string y_path;
  std::string out_dir;
  int n_basis = 100;
  double target_variance = 0.99;
};

struct FitArgs {
  std::string y_path;
  std::string x_path;
  std::string out_dir;
  std::string basis = "fpca";
  std::string mode = "fsl";
  std::optional<double> lambda;
  std::optional<double> lambda_afsl;
  std::string path_config;
  std::optional<std::string> criterion;
  std::optional<double> ebic_gamma;
  std::optional<int> n_lambda;
  std::optional<double> lambda_min_ratio;
  std::optional<int> max_df;
  bool no_early_stop = false;
  int n_basis = 100;
  double target_variance = 0.99;
  bool timing = false;
};

struct BenchArgs {
  std::string config;
  std::string path_config;
  std::string out_dir;
  std::optional<long long> seed;
  std::optional<int> replications;
  int threads = 0;
  bool no_smooth = false;
  bool timing = false;
};

struct DiagnoseArgs {
  std::string x_path;
  std::string beta_true_path;
  std::string out_dir;
  std::string support;
};

struct PlotArgs {
  std::string beta_hat;
  std::string beta_afsl;
  std::string beta_true;
  std::vector<int> indices;
  std::string out;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string timing_value(double seconds, bool timing) { return timing ? io::format_double(seconds) : "NA"; }

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  io::KeyValue kv = io::read_key_value_file(args.config);
  if (args.seed) kv.set("seed", *args.seed);
  const ScenarioConfig cfg = ScenarioConfig::from_key_value(kv);
  if (args.replication < 0) throw ConfigError("replication must be nonnegative");
  const SimulatedDataset ds = generate_scenario(cfg, args.replication);

  ensure_dir(args.out_dir);
  io::write_csv_file(join(args.out_dir, "Y.csv"), io::numeric_header(ds.grid), ds.Y);
  io::write_csv_file(join(args.out_dir, "X.csv"), io::prefixed_header("x", ds.X.cols()), ds.X);
  io::write_csv_file(join(args.out_dir, "beta_true.csv"), io::numeric_header(ds.grid), ds.beta_true);
  io::KeyValue meta = cfg.to_key_value();
  meta.set("replication", args.replication);
  meta.set("seed_used", std::to_string(ds.seed_used));
  meta.set("Y_shape", std::to_string(ds.Y.rows()) + "x" + std::to_string(ds.Y.cols()));
  meta.set("X_shape", std::to_string(ds.X.rows()) + "x" + std::to_string(ds.X.cols()));
  meta.set("beta_true_shape", std::to_string(ds.beta_true.rows()) + "x" + std::to_string(ds.beta_true.cols()));
  meta.set("support_true", io::join_indices(ds.support_true));
  io::write_key_value_file(join(args.out_dir, "meta.txt"), meta);
  out << "wrote " << args.out_dir << '\n';
}

// ---------------------------------------------------------------- smooth

void cmd_smooth(const SmoothArgs& args, std::ostream& out) {
  const io::CsvMatrix y = io::read_csv_file(args.y_path);
  const std::vector<double> grid = io::header_as_numbers(y.header);
  PrepConfig prep;
  prep.smoothing.n_basis = args.n_basis;
  prep.target_variance = args.target_variance;
  if (args.n_basis < prep.smoothing.spline_order) throw ConfigError("n-basis must be at least 4");
  if (!(args.target_variance > 0.0 && args.target_variance <= 1.0))
    throw ConfigError("target-variance must lie in (0, 1]");
  const PreparedOutcomes prepared = prepare_outcomes(y.values, grid, prep);

  ensure_dir(args.out_dir);
  io::write_csv_file(join(args.out_dir, "coeffs.csv"), io::prefixed_header("b", prepared.source_coeffs.cols()),
                     prepared.source_coeffs);
  save_basis(join(args.out_dir, "basis.txt"), *prepared.source_basis);
  io::write_csv_file(join(args.out_dir, "scores.csv"), io::prefixed_header("fpc", prepared.scores.cols()),
                     prepared.scores);
  save_basis(join(args.out_dir, "fpc_basis.txt"), *prepared.fpc_basis);
  Eigen::MatrixXd spectrum(prepared.fpca.eigenvalues.size(), 2);
  spectrum << prepared.fpca.eigenvalues, prepared.fpca.variance_explained;
  io::write_csv_file(join(args.out_dir, "fpca.csv"), {"eigenvalue", "variance_explained"}, spectrum);

  io::KeyValue meta;
  meta.set("n_curves", static_cast<long long>(y.values.rows()));
  meta.set("grid_points", static_cast<long long>(grid.size()));
  meta.set("n_basis_requested", args.n_basis);
  meta.set("n_basis_used", static_cast<long long>(prepared.source_basis->dim()));
  meta.set("n_basis_capped", prepared.source_basis->dim() < args.n_basis);
  meta.set("smoothing_parameter", prepared.smoothing);
  meta.set("target_variance", args.target_variance);
  meta.set("k_fpc", static_cast<long long>(prepared.scores.cols()));
  meta.set("variance_retained", prepared.fpca.variance_explained(prepared.scores.cols() - 1));
  io::write_key_value_file(join(args.out_dir, "smooth_meta.txt"), meta);
  out << "wrote " << args.out_dir << '\n';
}

// ---------------------------------------------------------------- fit

void add_fit_block(io::KeyValue& meta, const std::string& prefix, const FitResult& fit, bool timing) {
  meta.set(prefix + ".lambda", fit.lambda);
  meta.set(prefix + ".df", static_cast<long long>(fit.support.size()));
  meta.set(prefix + ".support", io::join_indices(fit.support));
  meta.set(prefix + ".rss", fit.rss);
  meta.set(prefix + ".objective", fit.objective);
  meta.set(prefix + ".kkt_max_active_residual", fit.kkt.max_active_residual);
  meta.set(prefix + ".kkt_max_inactive_slack_violation", fit.kkt.max_inactive_slack_violation);
  meta.set(prefix + ".iterations", fit.iterations);
  meta.set(prefix + ".converged", fit.converged);
  meta.set(prefix + ".seconds", timing_value(fit.wall_time, timing));
}

void cmd_fit(const FitArgs& args, std::ostream& out) {
  const io::CsvMatrix y = io::read_csv_file(args.y_path);
  const io::CsvMatrix x = io::read_csv_file(args.x_path);
  if (y.values.rows() != x.values.rows())
    throw ConfigError("shape mismatch: Y has " + std::to_string(y.values.rows()) + " rows but X has " +
                      std::to_string(x.values.rows()));
  const std::vector<double> grid = io::header_as_numbers(y.header);
  const Mode mode = mode_from_string(args.mode);

  Eigen::MatrixXd outcomes;
  BasisPtr basis;
  io::KeyValue meta;
  meta.set("mode", args.mode);
  meta.set("basis", args.basis);
  if (args.basis == "fpca") {
    PrepConfig prep;
    prep.smoothing.n_basis = args.n_basis;
    prep.target_variance = args.target_variance;
    PreparedOutcomes prepared = prepare_outcomes(y.values, grid, prep);
    outcomes = std::move(prepared.scores);
    basis = prepared.fpc_basis;
    meta.set("smoothing_parameter", prepared.smoothing);
    meta.set("n_basis_used", static_cast<long long>(prepared.source_basis->dim()));
  } else if (args.basis == "raw") {
    outcomes = y.values;
    basis = Basis::raw_grid(grid);
  } else {
    throw ConfigError("unknown basis '" + args.basis + "' (expected fpca or raw)");
  }
  meta.set("N", static_cast<long long>(outcomes.rows()));
  meta.set("I", static_cast<long long>(x.values.cols()));
  meta.set("K", static_cast<long long>(outcomes.cols()));

  const GroupLassoProblem problem(outcomes, x.values, basis);
  ensure_dir(args.out_dir);

  PathConfig path_cfg;
  if (!args.path_config.empty()) path_cfg = PathConfig::from_key_value(io::read_key_value_file(args.path_config));
  if (args.criterion) path_cfg.criterion = criterion_from_string(*args.criterion);
  if (args.ebic_gamma) path_cfg.ebic_gamma = *args.ebic_gamma;
  if (args.n_lambda) path_cfg.n_lambda = *args.n_lambda;
  if (args.lambda_min_ratio) path_cfg.lambda_min_ratio = *args.lambda_min_ratio;
  if (args.max_df) path_cfg.max_df = *args.max_df;
  if (args.no_early_stop) path_cfg.early_stop = false;
  path_cfg.validate();

  FitResult final_fit;
  std::optional<FitResult> fsl_fit;
  if (args.lambda) {
    if (*args.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    FitConfig fc = path_cfg.fit;
    fc.lambda = *args.lambda;
    fc.working_set = true;
    const FitResult fsl = problem.fit(fc);
    if (mode == Mode::fsl) {
      final_fit = fsl;
    } else {
      fc.lambda = args.lambda_afsl.value_or(*args.lambda);
      fc.working_set = false;
      final_fit = fit_reweighted(problem, adaptive_weights(fsl), fc);
      fsl_fit = fsl;
    }
    meta.set("tuning", std::string("fixed"));
  } else {
    const Selection sel = select_model(problem, mode, path_cfg);
    final_fit = sel.chosen;
    if (sel.fsl_chosen) fsl_fit = *sel.fsl_chosen;
    meta.set("tuning", std::string("path"));
    meta.set("criterion", to_string(path_cfg.criterion));
    meta.set("ebic_gamma", path_cfg.ebic_gamma);
    meta.set("n_lambda", path_cfg.n_lambda);
    meta.set("lambda_min_ratio", path_cfg.lambda_min_ratio);
    meta.set("selected_index", sel.path.selected_index);
    meta.set("path_truncated", sel.path.truncated);
    write_path_csv_file(join(args.out_dir, "path.csv"), sel.path, args.timing);
    if (sel.fsl_path) write_path_csv_file(join(args.out_dir, "fsl_path.csv"), *sel.fsl_path, args.timing);
  }

  auto on_grid = [&](const FitResult& fit) -> Eigen::MatrixXd {
    return fit.B_hat.B * basis->evaluation().transpose();
  };
  io::write_csv_file(join(args.out_dir, "beta_hat.csv"), io::numeric_header(grid), on_grid(final_fit));
  io::write_csv_file(join(args.out_dir, "beta_coeffs.csv"), io::prefixed_header("c", final_fit.B_hat.B.cols()),
                     final_fit.B_hat.B);
  save_basis(join(args.out_dir, "basis.txt"), *basis);
  if (fsl_fit) {
    io::write_csv_file(join(args.out_dir, "beta_hat_fsl.csv"), io::numeric_header(grid), on_grid(*fsl_fit));
    add_fit_block(meta, "fsl", *fsl_fit, args.timing);
    add_fit_block(meta, "afsl", final_fit, args.timing);
  } else {
    add_fit_block(meta, "fsl", final_fit, args.timing);
  }
  io::write_key_value_file(join(args.out_dir, "fit_meta.txt"), meta);
  out << "selected " << final_fit.support.size() << " predictors; wrote " << args.out_dir << '\n';
}

// ---------------------------------------------------------------- bench

void cmd_bench(const BenchArgs& args, std::ostream& out) {
  io::KeyValue kv = io::read_key_value_file(args.config);
  if (args.seed) kv.set("seed", *args.seed);
  if (args.replications) kv.set("replications", static_cast<long long>(*args.replications));
  const ScenarioConfig cfg = ScenarioConfig::from_key_value(kv);
  PathConfig path_cfg;
  if (!args.path_config.empty()) path_cfg = PathConfig::from_key_value(io::read_key_value_file(args.path_config));
  CampaignOptions options;
  options.threads = args.threads > 0 ? args.threads : default_threads();
  options.prep.smooth = !args.no_smooth;

  const CampaignResult result = run_campaign(cfg, path_cfg, options);
  ensure_dir(args.out_dir);
  std::ostringstream campaign, summary, diags;
  write_campaign_csv(campaign, result, args.timing);
  write_summary_csv(summary, result, args.timing);
  write_diagnostics_csv(diags, result.diagnostics);
  write_text(join(args.out_dir, "campaign.csv"), campaign.str());
  write_text(join(args.out_dir, "summary.csv"), summary.str());
  write_text(join(args.out_dir, "diagnostics.csv"), diags.str());
  io::KeyValue meta = cfg.to_key_value();
  const io::KeyValue path_kv = path_cfg.to_key_value();
  for (const auto& [k, v] : path_kv.entries()) meta.set("path." + k, v);
  meta.set("threads", options.threads);
  meta.set("smoothing", options.prep.smooth);
  meta.set("fsl_failed", result.fsl.n_failed);
  meta.set("afsl_failed", result.afsl.n_failed);
  io::write_key_value_file(join(args.out_dir, "bench_meta.txt"), meta);
  out << "FSL  TP " << io::format_double(result.fsl.true_positives) << " FP "
      << io::format_double(result.fsl.false_positives) << " RMSP " << io::format_double(result.fsl.rmsp) << '\n'
      << "AFSL TP " << io::format_double(result.afsl.true_positives) << " FP "
      << io::format_double(result.afsl.false_positives) << " RMSP " << io::format_double(result.afsl.rmsp) << '\n';
}

// ---------------------------------------------------------------- diagnose

std::vector<int> parse_support(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    try {
      const int v = std::stoi(item);
      if (v < 1) throw ConfigError("support indices are 1-based");
      out.push_back(v - 1);
    } catch (const std::logic_error&) {
      throw ConfigError("bad support index '" + item + "'");
    }
  }
  return out;
}

void cmd_diagnose(const DiagnoseArgs& args, std::ostream& out) {
  const io::CsvMatrix x = io::read_csv_file(args.x_path);
  const io::CsvMatrix beta = io::read_csv_file(args.beta_true_path);
  std::vector<int> support;
  if (args.support.empty()) {
    for (Eigen::Index i = 0; i < beta.values.rows(); ++i) support.push_back(static_cast<int>(i));
  } else {
    support = parse_support(args.support);
  }
  if (static_cast<Eigen::Index>(support.size()) != beta.values.rows())
    throw ConfigError("support size must equal the number of rows of beta_true");
  for (int i : support)
    if (i >= x.values.cols()) throw ConfigError("support index exceeds the number of predictors");
  const BasisPtr basis = Basis::raw_grid(io::header_as_numbers(beta.header));
  const AssumptionDiagnostics d = diagnostics(x.values, support, CoefficientMatrix{beta.values, basis});
  ensure_dir(args.out_dir);
  std::ostringstream ss;
  write_diagnostics_csv(ss, {d});
  write_text(join(args.out_dir, "diagnostics.csv"), ss.str());
  out << "irrepresentable_phi " << io::format_double(d.irrepresentable_phi) << '\n';
}

// ---------------------------------------------------------------- plot

void cmd_plot(const PlotArgs& args, std::ostream& out) {
  const io::CsvMatrix hat = io::read_csv_file(args.beta_hat);
  const std::vector<double> grid = io::header_as_numbers(hat.header);
  std::optional<io::CsvMatrix> afsl, truth;
  if (!args.beta_afsl.empty()) afsl = io::read_csv_file(args.beta_afsl);
  if (!args.beta_true.empty()) truth = io::read_csv_file(args.beta_true);
  for (const auto* other : {afsl ? &*afsl : nullptr, truth ? &*truth : nullptr})
    if (other && io::header_as_numbers(other->header) != grid)
      throw ConfigError("coefficient files are on different grids");
  if (args.indices.empty()) throw ConfigError("at least one --index is required");

  auto row_values = [&](const io::CsvMatrix& m, int index) {
    std::vector<double> v(grid.size(), 0.0);
    if (index < m.values.rows())
      for (std::size_t g = 0; g < grid.size(); ++g) v[g] = m.values(index, static_cast<Eigen::Index>(g));
    return v;
  };
  for (int one_based : args.indices) {
    const int index = one_based - 1;
    if (index < 0 || index >= hat.values.rows())
      throw ConfigError("unknown coefficient index " + std::to_string(one_based));
    if (afsl && index >= afsl->values.rows())
      throw ConfigError("unknown coefficient index " + std::to_string(one_based));
  }
  for (int one_based : args.indices) {
    const int index = one_based - 1;
    std::vector<svg::Series> series;
    // beta_true lists only the true predictors; later indices are zero.
    if (truth) series.push_back({"true", row_values(*truth, index), svg::Style::solid_black});
    series.push_back({afsl ? "FSL" : "estimate", row_values(hat, index), svg::Style::blue_squares});
    if (afsl) series.push_back({"AFSL", row_values(*afsl, index), svg::Style::red_dashed});
    std::string file = args.out;
    if (args.indices.size() > 1) {
      const fs::path p(args.out);
      file = (p.parent_path() / (p.stem().string() + "_" + std::to_string(one_based) + p.extension().string())).string();
    }
    const fs::path parent = fs::path(file).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    write_text(file, svg::render_coefficient_plot(grid, series, "beta_" + std::to_string(one_based)));
    out << "wrote " << file << '\n';
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Function-on-scalar lasso (FSL) and adaptive FSL"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset from a scenario config");
  simulate->add_option("--config", sim.config, "Scenario key-value file")->required();
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("--replication", sim.replication, "Replication index used to derive the seed");

  SmoothArgs sm;
  auto* smooth = app.add_subcommand("smooth", "Penalized B-spline smoothing (GCV) and FPCA rotation");
  smooth->add_option("--y", sm.y_path, "Curves CSV, header row of grid points")->required();
  smooth->add_option("--out", sm.out_dir, "Output directory")->required();
  smooth->add_option("--n-basis", sm.n_basis, "Number of cubic B-splines");
  smooth->add_option("--target-variance", sm.target_variance, "FPC variance fraction to retain");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit FSL or AFSL at a fixed lambda or along a tuned path");
  fit->add_option("--y", fa.y_path, "Outcome curves CSV")->required();
  fit->add_option("--x", fa.x_path, "Design CSV")->required();
  fit->add_option("--out", fa.out_dir, "Output directory")->required();
  fit->add_option("--basis", fa.basis, "fpca (smooth + rotate) or raw (grid values)");
  fit->add_option("--mode", fa.mode, "fsl or afsl");
  fit->add_option("--lambda", fa.lambda, "Fixed penalty; omit to tune along a path");
  fit->add_option("--lambda-afsl", fa.lambda_afsl, "Fixed penalty of the adaptive stage (default: --lambda)");
  fit->add_option("--path-config", fa.path_config, "Path key-value file");
  fit->add_option("--criterion", fa.criterion, "bic or ebic");
  fit->add_option("--ebic-gamma", fa.ebic_gamma, "Extended BIC parameter");
  fit->add_option("--n-lambda", fa.n_lambda, "Path length");
  fit->add_option("--lambda-min-ratio", fa.lambda_min_ratio, "Smallest lambda relative to lambda_max");
  fit->add_option("--max-df", fa.max_df, "Stop the path once more predictors are selected");
  fit->add_flag("--no-early-stop", fa.no_early_stop, "Visit the whole lambda grid");
  fit->add_option("--n-basis", fa.n_basis, "Number of cubic B-splines (fpca basis)");
  fit->add_option("--target-variance", fa.target_variance, "FPC variance fraction (fpca basis)");
  fit->add_flag("--timing", fa.timing, "Record wall-clock times in outputs");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a replication campaign comparing FSL and AFSL");
  bench->add_option("--config", ba.config, "Scenario key-value file")->required();
  bench->add_option("--path-config", ba.path_config, "Path key-value file");
  bench->add_option("--out", ba.out_dir, "Output directory")->required();
  bench->add_option("--seed", ba.seed, "Override the scenario seed");
  bench->add_option("--replications", ba.replications, "Override the replication count");
  bench->add_option("--threads", ba.threads, "Worker threads (default: hardware concurrency)");
  bench->add_flag("--no-smooth", ba.no_smooth, "Skip B-spline smoothing; FPCA on grid values");
  bench->add_flag("--timing", ba.timing, "Record wall-clock times in outputs");

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "Design diagnostics for a known support");
  diagnose->add_option("--x", da.x_path, "Design CSV")->required();
  diagnose->add_option("--beta-true", da.beta_true_path, "True coefficient curves CSV")->required();
  diagnose->add_option("--out", da.out_dir, "Output directory")->required();
  diagnose->add_option("--support", da.support, "1-based indices separated by ';' (default 1..rows)");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "Plot coefficient functions as SVG");
  plot->add_option("--beta-hat", pa.beta_hat, "Estimated coefficients on the grid (FSL)")->required();
  plot->add_option("--beta-afsl", pa.beta_afsl, "Second estimate drawn as a dashed line (AFSL)");
  plot->add_option("--beta-true", pa.beta_true, "True coefficients");
  plot->add_option("--index", pa.indices, "1-based coefficient index (repeatable)")->required();
  plot->add_option("--out", pa.out, "Output SVG path")->required();

  int threads_unused = 1;
  for (auto* sub : {simulate, smooth, fit, diagnose, plot})
    sub->add_option("--threads", threads_unused, "Accepted for uniformity; single-threaded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) cmd_simulate(sim, out);
    else if (*smooth) cmd_smooth(sm, out);
    else if (*fit) cmd_fit(fa, out);
    else if (*bench) cmd_bench(ba, out);
    else if (*diagnose) cmd_diagnose(da, out);
    else if (*plot) cmd_plot(pa, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fosr::cli
