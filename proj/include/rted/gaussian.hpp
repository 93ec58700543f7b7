#pragma once

#include <algorithm>
#include <span>

#include <Eigen/Dense>

namespace rted {

/// Linear-Gaussian regression of one coordinate of N(0, cov) on a subset:
/// E[z_t | z_g] = coeffs . z_g, Var[z_t | z_g] = variance.
template <typename Scalar>
struct GaussianRegression {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coeffs;
  Scalar variance;
};

/// Partitioned-covariance conditioning of coordinate `target` on `given`.
template <typename Derived>
GaussianRegression<typename Derived::Scalar> gaussian_regression(const Eigen::MatrixBase<Derived>& cov,
                                                                 Eigen::Index target,
                                                                 std::span<const Eigen::Index> given) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto g = static_cast<Eigen::Index>(given.size());
  if (g == 0) return {Vector(), cov(target, target)};
  Matrix s_gg(g, g);
  Vector s_gt(g);
  for (Eigen::Index a = 0; a < g; ++a) {
    s_gt(a) = cov(given[a], target);
    for (Eigen::Index b = 0; b < g; ++b) s_gg(a, b) = cov(given[a], given[b]);
  }
  Vector coeffs = s_gg.ldlt().solve(s_gt);
  const Scalar variance = cov(target, target) - s_gt.dot(coeffs);
  return {std::move(coeffs), variance};
}

struct CorrelationRepair {
  Eigen::MatrixXd matrix;
  double min_eigenvalue_before = 0.0;
  double min_eigenvalue_after = 0.0;
  bool modified = false;
};

/// Nearest positive-definite correlation matrix by eigenvalue clipping at
/// `floor` followed by rescaling to unit diagonal, repeated until the
/// smallest eigenvalue clears the floor.
template <typename Derived>
CorrelationRepair repair_correlation(const Eigen::MatrixBase<Derived>& corr, double floor = 1e-10) {
  CorrelationRepair out;
  Eigen::MatrixXd m = 0.5 * (corr + corr.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  out.min_eigenvalue_before = eig.eigenvalues().minCoeff();
  double clip = floor;
  for (int iter = 0; iter < 60 && eig.eigenvalues().minCoeff() < floor; ++iter) {
    out.modified = true;
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(clip);
    m = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::VectorXd inv_sd = m.diagonal().cwiseSqrt().cwiseInverse();
    m = inv_sd.asDiagonal() * m * inv_sd.asDiagonal();
    m = 0.5 * (m + m.transpose());
    m.diagonal().setOnes();
    eig.compute(m);
    clip *= 2.0;
  }
  out.min_eigenvalue_after = eig.eigenvalues().minCoeff();
  out.matrix = std::move(m);
  return out;
}

}  // namespace rted
