#pragma once

// Elements of a real separable Hilbert space stored as coefficient vectors in
// a finite basis. The inner product is <x, y> = x^T G y for the basis Gram
// matrix G, so L2, Sobolev and RKHS variants differ only in G.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace fosr {

enum class BasisKind { bspline, fpc, raw_grid };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

class Basis {
 public:
  // Validates symmetry and positive definiteness of `gram` and caches its
  // Cholesky factor. `evaluation` is grid.size() x K.
  Basis(BasisKind kind, Eigen::MatrixXd gram, Eigen::MatrixXd penalty,
        std::vector<double> grid, Eigen::MatrixXd evaluation);

  // Orthonormal basis of dimension k. Without a grid the evaluation matrix is
  // empty.
  static std::shared_ptr<const Basis> fpc(Eigen::Index k);
  static std::shared_ptr<const Basis> fpc(Eigen::MatrixXd penalty, std::vector<double> grid,
                                          Eigen::MatrixXd evaluation);

  // Point values on a grid, G = dt * I with dt the mean grid spacing.
  static std::shared_ptr<const Basis> raw_grid(std::vector<double> grid);

  BasisKind kind() const { return kind_; }
  Eigen::Index dim() const { return gram_.rows(); }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::MatrixXd& penalty() const { return penalty_; }
  const std::vector<double>& grid() const { return grid_; }
  const Eigen::MatrixXd& evaluation() const { return evaluation_; }

  // Lower-triangular L with G = L L^T.
  const Eigen::MatrixXd& gram_factor() const { return gram_factor_; }
  bool gram_is_identity() const { return identity_gram_; }

  // Maps coefficient rows into coordinates where the G-norm is Euclidean
  // (rows c -> c L) and back.
  Eigen::MatrixXd to_euclidean(const Eigen::MatrixXd& coeff_rows) const;
  Eigen::MatrixXd from_euclidean(const Eigen::MatrixXd& euclid_rows) const;

  // Squared norms of each row of a coefficient matrix.
  Eigen::VectorXd row_sq_norms(const Eigen::MatrixXd& coeff_rows) const;

  bool same_as(const Basis& other) const;

 private:
  BasisKind kind_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd penalty_;
  std::vector<double> grid_;
  Eigen::MatrixXd evaluation_;
  Eigen::MatrixXd gram_factor_;
  bool identity_gram_ = false;
};

using BasisPtr = std::shared_ptr<const Basis>;

struct FunctionalVector {
  Eigen::VectorXd coeffs;
  BasisPtr basis;
};

// Row i holds the coefficients of the functional coefficient beta_i.
struct CoefficientMatrix {
  Eigen::MatrixXd B;
  BasisPtr basis;

  Eigen::Index rows() const { return B.rows(); }
  double row_norm(Eigen::Index i) const;
  Eigen::VectorXd row_norms() const;
  // Indices of rows with strictly positive norm, ascending.
  std::vector<int> support() const;
};

double inner(const FunctionalVector& x, const FunctionalVector& y);
double norm(const FunctionalVector& x);

// sum_i w_i ||beta_i|| over rows with finite weight. Rows carrying an infinite
// weight must be zero.
double group_penalty(const CoefficientMatrix& B, const Eigen::VectorXd& weights);

// Text serialization: key-value header followed by CSV blocks. See
// docs/basis_format.md.
void write_basis(std::ostream& out, const Basis& basis);
BasisPtr read_basis(std::istream& in);
void save_basis(const std::string& path, const Basis& basis);
BasisPtr load_basis(const std::string& path);

}  // namespace fosr
