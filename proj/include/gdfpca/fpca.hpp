#pragma once

#include <Eigen/Dense>
#include <string>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"

// Classical (static) functional PCA on truncated scores, used as the
// comparison method. Covariance is normalized by 1/(n-1).
namespace gdfpca {

struct FpcaFit {
  Eigen::VectorXd mean_scores;   // m
  Eigen::VectorXd eigenvalues;   // all m, descending
  Eigen::MatrixXd eigenvectors;  // m x p, orthonormal columns
  Eigen::MatrixXd pc_scores;     // n x p

  Eigen::Index components() const { return eigenvectors.cols(); }
};

inline FpcaFit fit_fpca(const ScoreMatrix& scores, int p) {
  const Eigen::Index n = scores.length();
  const Eigen::Index m = scores.dim();
  if (p < 1 || p > m) {
    throw InvalidArgumentError("fit_fpca: p must satisfy 1 <= p <= m, got " + std::to_string(p));
  }
  if (n < 2) throw DimensionError("fit_fpca: need n >= 2");

  FpcaFit fit;
  fit.mean_scores = scores.entries.colwise().mean();
  const Eigen::MatrixXd centered = scores.entries.rowwise() - fit.mean_scores.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);  // ascending order
  fit.eigenvalues = eig.eigenvalues().reverse();
  fit.eigenvectors.resize(m, p);
  for (int k = 0; k < p; ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(m - 1 - k);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;  // deterministic sign
    fit.eigenvectors.col(k) = v;
  }
  fit.pc_scores = centered * fit.eigenvectors;
  return fit;
}

// Mean plus the leading p_used principal directions: the MSE-optimal
// rank-p_used-plus-mean approximation of the scores.
inline ScoreMatrix reconstruct_fpca(const FpcaFit& fit, int p_used) {
  if (p_used < 1 || p_used > fit.components()) {
    throw InvalidArgumentError("reconstruct_fpca: p_used out of range");
  }
  ScoreMatrix out;
  out.entries = (fit.pc_scores.leftCols(p_used) * fit.eigenvectors.leftCols(p_used).transpose())
                    .rowwise() +
                fit.mean_scores.transpose();
  return out;
}

}  // namespace gdfpca
