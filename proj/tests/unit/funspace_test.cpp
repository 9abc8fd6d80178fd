#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include "fosr/errors.hpp"
#include "fosr/funspace.hpp"

#include <cmath>
#include <sstream>

using namespace fosr;

namespace {

BasisPtr diag21() {
  Eigen::MatrixXd g(2, 2);
  g << 2, 0, 0, 1;
  return std::make_shared<const Basis>(BasisKind::bspline, g, Eigen::MatrixXd(), std::vector<double>{},
                                       Eigen::MatrixXd(0, 2));
}

BasisPtr random_basis(Eigen::Index k, std::mt19937_64& rng) {
  return std::make_shared<const Basis>(BasisKind::bspline, testing::random_spd(k, rng), Eigen::MatrixXd(),
                                       std::vector<double>{}, Eigen::MatrixXd(0, k));
}

}  // namespace

TEST_CASE("inner product examples") {
  auto id = Basis::fpc(3);
  FunctionalVector zero{Eigen::VectorXd::Zero(3), id};
  CHECK(inner(zero, zero) == 0.0);
  FunctionalVector e1{Eigen::VectorXd::Unit(3, 0), id};
  CHECK(inner(e1, e1) == 1.0);
  auto g = diag21();
  FunctionalVector ones{Eigen::Vector2d(1, 1), g};
  CHECK(inner(ones, ones) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("norm examples") {
  auto id = Basis::fpc(2);
  CHECK(norm(FunctionalVector{Eigen::Vector2d::Zero(), id}) == 0.0);
  CHECK(norm(FunctionalVector{Eigen::Vector2d(3, 4), id}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(norm(FunctionalVector{Eigen::Vector2d(1, 1), diag21()}) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("incompatible bases are rejected") {
  FunctionalVector a{Eigen::Vector2d(1, 0), Basis::fpc(2)};
  FunctionalVector b{Eigen::Vector2d(1, 0), diag21()};
  CHECK_THROWS_WITH_AS(inner(a, b), "incompatible bases", std::invalid_argument);
  FunctionalVector c{Eigen::Vector3d(1, 0, 0), Basis::fpc(3)};
  CHECK_THROWS_WITH_AS(inner(a, c), "incompatible bases", std::invalid_argument);
}

TEST_CASE("group penalty examples") {
  auto id2 = Basis::fpc(2);
  CHECK(group_penalty({Eigen::MatrixXd::Zero(3, 2), id2}, Eigen::Vector3d(1, 2, 3)) == 0.0);
  Eigen::MatrixXd b1(1, 2);
  b1 << 3, 4;
  CHECK(group_penalty({b1, id2}, Eigen::VectorXd::Ones(1)) == doctest::Approx(5.0));
  Eigen::MatrixXd b2(2, 2);
  b2 << 1, 0, 0, 2;
  CHECK(group_penalty({b2, id2}, Eigen::Vector2d(2, 0.5)) == doctest::Approx(3.0));

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd b3(2, 2);
  b3 << 1, 0, 0, 0;
  CHECK(group_penalty({b3, id2}, Eigen::Vector2d(1, inf)) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(group_penalty({b3, id2}, Eigen::Vector2d(inf, 1)),
                       "excluded predictor has nonzero coefficient", std::invalid_argument);
}

TEST_CASE("basis validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(Basis(BasisKind::bspline, asym, {}, {}, Eigen::MatrixXd(0, 2)), std::invalid_argument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(Basis(BasisKind::bspline, indefinite, {}, {}, Eigen::MatrixXd(0, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Basis(BasisKind::fpc, 2.0 * Eigen::MatrixXd::Identity(2, 2), {}, {}, Eigen::MatrixXd(0, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(Basis::raw_grid({0.0, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("random pairs satisfy Cauchy-Schwarz and homogeneity") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = 1 + trial % 7;
    auto basis = random_basis(k, rng);
    FunctionalVector x{testing::gaussian(k, 1, rng), basis};
    FunctionalVector y{testing::gaussian(k, 1, rng), basis};
    CHECK(std::abs(inner(x, y)) <= norm(x) * norm(y) * (1 + 1e-12));
    CHECK(inner(x, y) == doctest::Approx(inner(y, x)).epsilon(1e-12));
    const double a = z(rng);
    FunctionalVector ax{a * x.coeffs, basis};
    CHECK(norm(ax) == doctest::Approx(std::abs(a) * norm(x)).epsilon(1e-12));
    FunctionalVector sum{x.coeffs + y.coeffs, basis};
    CHECK(norm(sum) <= norm(x) + norm(y) + 1e-12);
  }
}

TEST_CASE("fpc inner product is the dot product") {
  std::mt19937_64 rng(5);
  auto id = Basis::fpc(6);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd a = testing::gaussian(6, 1, rng), b = testing::gaussian(6, 1, rng);
    CHECK(inner({a, id}, {b, id}) == a.dot(b));
  }
}

TEST_CASE("unit-weight penalty equals the sum of row norms") {
  std::mt19937_64 rng(3);
  auto basis = random_basis(4, rng);
  CoefficientMatrix B{testing::gaussian(6, 4, rng), basis};
  double total = 0.0;
  for (Eigen::Index i = 0; i < 6; ++i) total += norm({B.B.row(i).transpose(), basis});
  CHECK(group_penalty(B, Eigen::VectorXd::Ones(6)) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("euclidean map preserves norms and inverts") {
  std::mt19937_64 rng(8);
  auto basis = random_basis(5, rng);
  Eigen::MatrixXd rows = testing::gaussian(4, 5, rng);
  Eigen::MatrixXd e = basis->to_euclidean(rows);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double direct = std::sqrt(rows.row(i).dot(basis->gram() * rows.row(i).transpose()));
    CHECK(e.row(i).norm() == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK((basis->from_euclidean(e) - rows).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("support lists nonzero rows") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
  b(1, 0) = 1e-300;
  b(3, 1) = -2;
  CoefficientMatrix B{b, Basis::fpc(2)};
  CHECK(B.support() == std::vector<int>{1, 3});
}

TEST_CASE("basis serialization round trip") {
  std::mt19937_64 rng(2);
  std::vector<double> grid{0.0, 0.1, 0.35, 1.0};
  Eigen::MatrixXd eval = testing::gaussian(4, 3, rng);
  Eigen::MatrixXd pen = testing::random_spd(3, rng);
  Basis basis(BasisKind::bspline, testing::random_spd(3, rng), pen, grid, eval);
  std::stringstream ss;
  write_basis(ss, basis);
  BasisPtr back = read_basis(ss);
  CHECK(back->kind() == BasisKind::bspline);
  CHECK(back->grid() == grid);
  CHECK(back->gram() == basis.gram());
  CHECK(back->penalty() == basis.penalty());
  CHECK(back->evaluation() == basis.evaluation());

  auto raw = Basis::raw_grid({0.0, 0.25, 0.5, 0.75, 1.0});
  std::stringstream rs;
  write_basis(rs, *raw);
  BasisPtr raw_back = read_basis(rs);
  CHECK(raw_back->kind() == BasisKind::raw_grid);
  CHECK(raw_back->gram()(0, 0) == 0.25);
}

TEST_CASE("malformed basis file") {
  std::stringstream ss("# fosr basis v1\nkind = spline\nK = 2\ngrid_points = 0\n[grid]\n");
  CHECK_THROWS_AS(read_basis(ss), ConfigError);
  std::stringstream missing("# fosr basis v1\nkind = fpc\ngrid_points = 0\n[grid]\n");
  CHECK_THROWS_WITH_AS(read_basis(missing), "missing required key 'K'", ConfigError);
}
