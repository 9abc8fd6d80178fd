#pragma once

#include <Eigen/Dense>

#include <random>

namespace testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

// Columns scaled so that N^-1 X^T X = I.
inline Eigen::MatrixXd orthogonal_design(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, p, rng));
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  return std::sqrt(static_cast<double>(n)) * q;
}

inline Eigen::MatrixXd random_spd(Eigen::Index k, std::mt19937_64& rng) {
  Eigen::MatrixXd a = gaussian(k, k, rng);
  return a * a.transpose() / static_cast<double>(k) + 0.5 * Eigen::MatrixXd::Identity(k, k);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace testing
