#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include "fosr/prep.hpp"
#include "fosr/simgen.hpp"

#include <cmath>

using namespace fosr;

namespace {

SmoothingConfig config(int n_basis) {
  SmoothingConfig cfg;
  cfg.n_basis = n_basis;
  return cfg;
}

// Composite Simpson on every knot span, `panels` panels per span.
Eigen::MatrixXd simpson_gram(const std::vector<double>& knots, int order, int deriv, int panels) {
  const auto k = static_cast<Eigen::Index>(knots.size()) - order;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s], b = knots[s + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / (2.0 * panels);
    for (int j = 0; j <= 2 * panels; ++j) {
      const double w = (j == 0 || j == 2 * panels) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      // Stay inside the span so one-sided derivatives are taken on it.
      const double x = std::clamp(a + j * h, a + 1e-13, b - 1e-13);
      const Eigen::VectorXd v = bspline_values(knots, order, x, deriv);
      g += (w * h / 3.0) * v * v.transpose();
    }
  }
  return g;
}

// Coefficients of f(t) = a + b t in a clamped spline basis (Greville abscissae).
Eigen::VectorXd linear_coeffs(const std::vector<double>& knots, int order, double a, double b) {
  const auto k = static_cast<Eigen::Index>(knots.size()) - order;
  Eigen::VectorXd c(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double avg = 0.0;
    for (int r = 1; r < order; ++r) avg += knots[static_cast<std::size_t>(j + r)];
    c(j) = a + b * avg / (order - 1);
  }
  return c;
}

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& scores) {
  const Eigen::MatrixXd c = scores.rowwise() - scores.colwise().mean();
  return c.transpose() * c / static_cast<double>(scores.rows() - 1);
}

}  // namespace

TEST_CASE("two-point grid: single cubic span sums to one") {
  const std::vector<double> grid{0.0, 1.0};
  auto basis = build_bspline_basis(grid, config(4));
  REQUIRE(basis->dim() == 4);
  for (Eigen::Index g = 0; g < 2; ++g) CHECK(basis->evaluation().row(g).sum() == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<double> knots = clamped_uniform_knots(4, 4);
  for (double t : {0.1, 0.37, 0.5, 0.93}) {
    const Eigen::VectorXd v = bspline_values(knots, 4, t);
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Bernstein polynomials of degree 3.
    CHECK(v(1) == doctest::Approx(3 * t * (1 - t) * (1 - t)).epsilon(1e-13));
  }
}

TEST_CASE("penalty annihilates linear functions") {
  for (int k : {4, 10, 25}) {
    auto basis = build_bspline_basis(even_grid(50), config(k));
    const std::vector<double> knots = clamped_uniform_knots(k, 4);
    const Eigen::VectorXd c = linear_coeffs(knots, 4, 0.7, -2.3);
    // The coefficients reproduce the line on the grid.
    for (Eigen::Index g = 0; g < 50; ++g)
      CHECK(basis->evaluation().row(g).dot(c) == doctest::Approx(0.7 - 2.3 * basis->grid()[g]).epsilon(1e-12));
    CHECK((basis->penalty() * c).cwiseAbs().maxCoeff() < 1e-9 * basis->penalty().norm());
  }
}

TEST_CASE("gram and penalty agree with refined Simpson quadrature") {
  auto basis = build_bspline_basis(even_grid(50), config(10));
  const std::vector<double> knots = clamped_uniform_knots(10, 4);
  const Eigen::MatrixXd coarse = simpson_gram(knots, 4, 0, 100);
  const Eigen::MatrixXd fine = simpson_gram(knots, 4, 0, 1000);
  CHECK((coarse - fine).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((basis->gram() - fine).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd pen = simpson_gram(knots, 4, 2, 1000);
  CHECK((basis->penalty() - pen).cwiseAbs().maxCoeff() < 1e-8 * pen.cwiseAbs().maxCoeff());
}

TEST_CASE("bad grids") {
  CHECK_THROWS_AS(build_bspline_basis({0.0, 1.2}, config(4)), std::invalid_argument);
  CHECK_THROWS_AS(build_bspline_basis({0.5, 0.2}, config(4)), std::invalid_argument);
  CHECK_THROWS_AS(build_bspline_basis({0.5}, config(4)), std::invalid_argument);
  SmoothingConfig cfg = config(3);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(10);
  cfg.gcv_grid = {1.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("basis size is capped on short grids") {
  CHECK(effective_n_basis(16, SmoothingConfig{}) == 64);
  CHECK(effective_n_basis(50, SmoothingConfig{}) == 100);
  auto basis = build_bspline_basis(even_grid(16), SmoothingConfig{});
  CHECK(basis->dim() == 64);
}

TEST_CASE("curves in the spline span are reproduced") {
  std::mt19937_64 rng(21);
  auto basis = build_bspline_basis(even_grid(50), config(12));
  const Eigen::MatrixXd c = testing::gaussian(8, 12, rng);
  const Eigen::MatrixXd raw = c * basis->evaluation().transpose();
  SmoothingConfig cfg = config(12);
  cfg.gcv_grid = {1e-16};
  const SmoothingResult fit = smooth_curves(raw, *basis, cfg);
  CHECK((fit.coeffs * basis->evaluation().transpose() - raw).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("constant curves are penalty free") {
  auto basis = build_bspline_basis(even_grid(30), config(20));
  const Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(3, 30, 2.5);
  for (double mu : {1e-8, 1.0, 1e4}) {
    Eigen::MatrixXd c;
    double tr = 0.0;
    REQUIRE(penalized_fit(raw, *basis, mu, c, tr));
    // Rounding in the penalty entries (order 1e5) is amplified by mu.
    CHECK(((c * basis->evaluation().transpose()).array() - 2.5).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("white noise selects a smoothing parameter above the grid minimum") {
  std::mt19937_64 rng(4);
  const std::vector<double> grid = even_grid(50);
  auto basis = build_bspline_basis(grid, config(30));
  const Eigen::MatrixXd raw = testing::gaussian(20, 50, rng);
  const SmoothingConfig cfg = config(30);
  const SmoothingResult fit = smooth_curves(raw, *basis, cfg);
  CHECK(fit.chosen_smoothing > cfg.gcv_grid.front());

  // Exhaustive GCV with the explicit hat matrix.
  const Eigen::MatrixXd& phi = basis->evaluation();
  double best = std::numeric_limits<double>::infinity(), best_mu = 0.0;
  for (double mu : cfg.gcv_grid) {
    const Eigen::MatrixXd hat =
        phi * (phi.transpose() * phi + mu * basis->penalty()).inverse() * phi.transpose();
    const double rss = (raw - raw * hat.transpose()).squaredNorm();
    const double d = 50.0 * (1.0 - hat.trace() / 50.0);
    const double gcv = rss / (d * d);
    if (gcv < best) best = gcv, best_mu = mu;
  }
  CHECK(fit.chosen_smoothing == best_mu);
}

TEST_CASE("hat trace decreases in the smoothing parameter") {
  std::mt19937_64 rng(9);
  auto basis = build_bspline_basis(even_grid(50), config(40));
  const SmoothingResult fit = smooth_curves(testing::gaussian(5, 50, rng), *basis, config(40));
  for (std::size_t j = 1; j < fit.effective_df.size(); ++j)
    CHECK(fit.effective_df[j] <= fit.effective_df[j - 1] + 1e-9);
}

TEST_CASE("rank-one data keeps one component") {
  std::mt19937_64 rng(13);
  auto basis = build_bspline_basis(even_grid(40), config(15));
  const Eigen::VectorXd direction = testing::gaussian(15, 1, rng);
  const Eigen::VectorXd amp = testing::gaussian(30, 1, rng);
  const Eigen::MatrixXd coeffs = amp * direction.transpose();
  for (double target : {0.5, 0.9, 0.999}) {
    const FpcaOutput out = fpca(coeffs, *basis, target);
    CHECK(out.result.retained == 1);
    CHECK(out.result.variance_explained(0) >= target);
  }
}

TEST_CASE("full rotation is an isometry and inverts") {
  std::mt19937_64 rng(17);
  auto basis = build_bspline_basis(even_grid(40), config(12));
  const Eigen::MatrixXd coeffs = testing::gaussian(60, 12, rng);
  const FpcaOutput out = fpca(coeffs, *basis, 1.0);
  REQUIRE(out.result.retained == 12);
  const Eigen::MatrixXd centered = coeffs.rowwise() - coeffs.colwise().mean();
  CHECK((reconstruct_centered(out.scores, out.result) - centered).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::VectorXd spline_norms = basis->row_sq_norms(centered).cwiseSqrt();
  const Eigen::VectorXd score_norms = out.scores.rowwise().norm();
  CHECK((spline_norms - score_norms).cwiseAbs().maxCoeff() < 1e-8);
  // Components are G-orthonormal and the rotated basis has identity gram.
  const Eigen::MatrixXd ortho = out.result.components * basis->gram() * out.result.components.transpose();
  CHECK((ortho - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(out.fpc_basis->kind() == BasisKind::fpc);
  CHECK(out.fpc_basis->gram_is_identity());
  CHECK((project_scores(coeffs, out.result, *basis) - out.scores).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("scores are uncorrelated and spectrum is ordered") {
  std::mt19937_64 rng(23);
  auto basis = build_bspline_basis(even_grid(40), config(12));
  const FpcaOutput out = fpca(testing::gaussian(80, 12, rng), *basis, 0.95);
  const Eigen::MatrixXd cov = sample_cov(out.scores);
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j)
      if (i != j) CHECK(std::abs(cov(i, j)) <= 1e-8 * std::sqrt(cov(i, i) * cov(j, j)));
  for (Eigen::Index j = 1; j < out.result.eigenvalues.size(); ++j) {
    CHECK(out.result.eigenvalues(j) <= out.result.eigenvalues(j - 1));
    CHECK(out.result.variance_explained(j) >= out.result.variance_explained(j - 1));
  }
  CHECK(out.result.variance_explained(out.result.retained - 1) >= 0.95);
  CHECK((out.result.retained == 1 || out.result.variance_explained(out.result.retained - 2) < 0.95));
}

TEST_CASE("fpca preconditions") {
  auto basis = Basis::fpc(3);
  CHECK_THROWS_AS(fpca(Eigen::MatrixXd::Zero(1, 3), *basis, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(fpca(Eigen::MatrixXd::Zero(4, 3), *basis, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fpca(Eigen::MatrixXd::Zero(4, 3), *basis, 1.5), std::invalid_argument);
}

TEST_CASE("component count for Matern curves is stable across seeds") {
  const std::vector<double> grid = even_grid(50);
  auto basis = build_bspline_basis(grid, SmoothingConfig{});
  const MaternParams p{1.0, 0.25, MaternNu::three_halves};
  std::vector<int> counts;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    Rng rng(seed);
    const Eigen::MatrixXd raw = sample_gp(p, grid, 500, rng);
    const SmoothingResult s = smooth_curves(raw, *basis, SmoothingConfig{});
    const FpcaOutput out = fpca(s.coeffs, *basis, 0.99);
    CHECK(out.result.variance_explained(out.result.retained - 1) >= 0.99);
    counts.push_back(out.result.retained);
  }
  MESSAGE("components for 99% variance: " << counts[0] << " " << counts[1] << " " << counts[2] << " " << counts[3]);
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 2);
}
