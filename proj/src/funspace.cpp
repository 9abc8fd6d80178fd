#include "fosr/funspace.hpp"

#include "fosr/errors.hpp"
#include "fosr/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace fosr {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::bspline: return "bspline";
    case BasisKind::fpc: return "fpc";
    case BasisKind::raw_grid: return "raw-grid";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "bspline") return BasisKind::bspline;
  if (name == "fpc") return BasisKind::fpc;
  if (name == "raw-grid") return BasisKind::raw_grid;
  throw ConfigError("unknown basis kind '" + name + "'");
}

Basis::Basis(BasisKind kind, Eigen::MatrixXd gram, Eigen::MatrixXd penalty, std::vector<double> grid,
             Eigen::MatrixXd evaluation)
    : kind_(kind),
      gram_(std::move(gram)),
      penalty_(std::move(penalty)),
      grid_(std::move(grid)),
      evaluation_(std::move(evaluation)) {
  const Eigen::Index k = gram_.rows();
  if (k == 0 || gram_.cols() != k) throw std::invalid_argument("gram matrix must be square and nonempty");
  const double scale = gram_.cwiseAbs().maxCoeff();
  if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("gram matrix is not symmetric");
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();

  if (penalty_.size() == 0) penalty_ = Eigen::MatrixXd::Zero(k, k);
  if (penalty_.rows() != k || penalty_.cols() != k)
    throw std::invalid_argument("penalty matrix must be K x K");

  if (evaluation_.size() != 0 &&
      (evaluation_.cols() != k || evaluation_.rows() != static_cast<Eigen::Index>(grid_.size())))
    throw std::invalid_argument("evaluation matrix must be grid-length x K");
  for (std::size_t g = 1; g < grid_.size(); ++g)
    if (!(grid_[g] > grid_[g - 1])) throw std::invalid_argument("basis grid must be strictly increasing");

  identity_gram_ = gram_.isIdentity(0.0);
  if (kind_ == BasisKind::fpc && !gram_.isIdentity(1e-12))
    throw std::invalid_argument("fpc basis must have identity gram");

  Eigen::LLT<Eigen::MatrixXd> llt(gram_);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("gram matrix is not positive definite");
  gram_factor_ = llt.matrixL();
  if (!(gram_factor_.diagonal().array() > 0.0).all())
    throw std::invalid_argument("gram matrix is not positive definite");
}

std::shared_ptr<const Basis> Basis::fpc(Eigen::Index k) {
  return std::make_shared<const Basis>(BasisKind::fpc, Eigen::MatrixXd::Identity(k, k),
                                       Eigen::MatrixXd::Zero(k, k), std::vector<double>{},
                                       Eigen::MatrixXd(0, k));
}

std::shared_ptr<const Basis> Basis::fpc(Eigen::MatrixXd penalty, std::vector<double> grid,
                                        Eigen::MatrixXd evaluation) {
  const Eigen::Index k = evaluation.cols();
  return std::make_shared<const Basis>(BasisKind::fpc, Eigen::MatrixXd::Identity(k, k), std::move(penalty),
                                       std::move(grid), std::move(evaluation));
}

std::shared_ptr<const Basis> Basis::raw_grid(std::vector<double> grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (m < 1) throw std::invalid_argument("raw-grid basis needs at least one point");
  const double dt = m > 1 ? (grid.back() - grid.front()) / static_cast<double>(m - 1) : 1.0;
  return std::make_shared<const Basis>(BasisKind::raw_grid, dt * Eigen::MatrixXd::Identity(m, m),
                                       Eigen::MatrixXd::Zero(m, m), std::move(grid),
                                       Eigen::MatrixXd::Identity(m, m));
}

Eigen::MatrixXd Basis::to_euclidean(const Eigen::MatrixXd& coeff_rows) const {
  if (coeff_rows.cols() != dim()) throw std::invalid_argument("incompatible bases");
  if (identity_gram_) return coeff_rows;
  return coeff_rows * gram_factor_.triangularView<Eigen::Lower>();
}

Eigen::MatrixXd Basis::from_euclidean(const Eigen::MatrixXd& euclid_rows) const {
  if (euclid_rows.cols() != dim()) throw std::invalid_argument("incompatible bases");
  if (identity_gram_) return euclid_rows;
  // Solve X L = E  <=>  L^T X^T = E^T.
  Eigen::MatrixXd xt = gram_factor_.transpose().triangularView<Eigen::Upper>().solve(euclid_rows.transpose());
  return xt.transpose();
}

Eigen::VectorXd Basis::row_sq_norms(const Eigen::MatrixXd& coeff_rows) const {
  if (coeff_rows.cols() != dim()) throw std::invalid_argument("incompatible bases");
  if (identity_gram_) return coeff_rows.rowwise().squaredNorm();
  return (coeff_rows * gram_factor_.triangularView<Eigen::Lower>()).rowwise().squaredNorm();
}

bool Basis::same_as(const Basis& other) const {
  return this == &other || (kind_ == other.kind_ && gram_ == other.gram_ && grid_ == other.grid_);
}

double CoefficientMatrix::row_norm(Eigen::Index i) const {
  return std::sqrt(std::max(0.0, basis->row_sq_norms(B.row(i)).coeff(0)));
}

Eigen::VectorXd CoefficientMatrix::row_norms() const {
  return basis->row_sq_norms(B).cwiseMax(0.0).cwiseSqrt();
}

std::vector<int> CoefficientMatrix::support() const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    if (B.row(i).cwiseAbs().maxCoeff() > 0.0) out.push_back(static_cast<int>(i));
  return out;
}

double inner(const FunctionalVector& x, const FunctionalVector& y) {
  if (!x.basis || !y.basis || !x.basis->same_as(*y.basis)) throw std::invalid_argument("incompatible bases");
  if (x.coeffs.size() != x.basis->dim() || y.coeffs.size() != y.basis->dim())
    throw std::invalid_argument("incompatible bases");
  return x.coeffs.dot(x.basis->gram() * y.coeffs);
}

double norm(const FunctionalVector& x) {
  if (!x.basis || x.coeffs.size() != x.basis->dim()) throw std::invalid_argument("incompatible bases");
  return std::sqrt(std::max(0.0, x.basis->row_sq_norms(x.coeffs.transpose()).coeff(0)));
}

double group_penalty(const CoefficientMatrix& B, const Eigen::VectorXd& weights) {
  if (weights.size() != B.rows()) throw std::invalid_argument("weight vector length must equal row count");
  const Eigen::VectorXd norms = B.row_norms();
  double total = 0.0;
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    if (weights(i) < 0.0 || std::isnan(weights(i))) throw std::invalid_argument("weights must be nonnegative");
    if (std::isinf(weights(i))) {
      if (norms(i) > 0.0) throw std::invalid_argument("excluded predictor has nonzero coefficient");
      continue;
    }
    total += weights(i) * norms(i);
  }
  return total;
}

void write_basis(std::ostream& out, const Basis& basis) {
  out << "# fosr basis v1\n";
  io::KeyValue kv;
  kv.set("kind", to_string(basis.kind()));
  kv.set("K", static_cast<long long>(basis.dim()));
  kv.set("grid_points", static_cast<long long>(basis.grid().size()));
  io::write_key_value(out, kv);
  out << "[grid]\n";
  if (!basis.grid().empty()) {
    const auto& g = basis.grid();
    for (std::size_t j = 0; j < g.size(); ++j) out << (j ? "," : "") << io::format_double(g[j]);
    out << '\n';
  }
  auto block = [&](const char* name, const Eigen::MatrixXd& m) {
    out << '[' << name << "]\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << io::format_double(m(i, j));
      out << '\n';
    }
  };
  block("gram", basis.gram());
  block("penalty", basis.penalty());
  block("evaluation", basis.evaluation());
}

BasisPtr read_basis(std::istream& in) {
  std::string line;
  std::ostringstream header;
  while (std::getline(in, line)) {
    if (line.rfind("[grid]", 0) == 0) break;
    header << line << '\n';
  }
  std::istringstream hs(header.str());
  const io::KeyValue kv = io::parse_key_value(hs);
  const BasisKind kind = basis_kind_from_string(kv.get("kind"));
  const Eigen::Index k = kv.get_int("K");
  const Eigen::Index m = kv.get_int("grid_points");
  if (k <= 0 || m < 0) throw ConfigError("basis header has invalid K or grid_points");

  std::vector<double> grid;
  if (m > 0) {
    const Eigen::MatrixXd g = io::read_csv_block(in, 1);
    if (g.cols() != m) throw ConfigError("basis grid length does not match grid_points");
    grid.assign(g.data(), g.data() + g.size());
  }
  auto expect = [&](const char* name) {
    if (!std::getline(in, line) || line != std::string("[") + name + "]")
      throw ConfigError(std::string("basis file: expected section [") + name + "]");
  };
  expect("gram");
  Eigen::MatrixXd gram = io::read_csv_block(in, k);
  expect("penalty");
  Eigen::MatrixXd penalty = io::read_csv_block(in, k);
  expect("evaluation");
  Eigen::MatrixXd evaluation = m > 0 ? io::read_csv_block(in, m) : Eigen::MatrixXd(0, k);
  if (m > 0 && evaluation.cols() != k) throw ConfigError("basis evaluation block has wrong width");
  return std::make_shared<const Basis>(kind, std::move(gram), std::move(penalty), std::move(grid),
                                       std::move(evaluation));
}

void save_basis(const std::string& path, const Basis& basis) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_basis(out, basis);
}

BasisPtr load_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_basis(in);
}

}  // namespace fosr
