#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"
#include "gdfpca/grid.hpp"

// Seeded generators for the three simulation designs: stationary FAR(1),
// non-stationary smoothed VARI(1,1), and a dynamic factor model with static
// representation.
namespace gdfpca {

// Master seed with deterministic per-replication streams.
struct Seed {
  std::uint64_t master = 0;

  // splitmix64 of master + r; stream 0 differs from the master itself
  std::uint64_t stream(std::uint64_t r) const {
    std::uint64_t z = master + (r + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

namespace detail {

inline double spectral_norm(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()[0];
}

// Least-squares smoothing of a panel onto Fourier curves: the panel_dim
// cross-sectional coordinates sit on equispaced design points spanning the
// output grid's interval, and each time slice is fitted with n_basis
// Fourier functions then evaluated on the grid.
inline FunctionalSeries smooth_panel(const Eigen::MatrixXd& panel, int n_basis,
                                     const Grid& grid) {
  const Eigen::Index T = panel.rows();
  const Eigen::Index panel_dim = panel.cols();
  if (n_basis > panel_dim) {
    throw InvalidArgumentError("smooth_panel: n_basis = " + std::to_string(n_basis) +
                               " exceeds panel dimension " + std::to_string(panel_dim) +
                               "; smoothing is underdetermined");
  }
  const Eigen::VectorXd design_pts =
      Eigen::VectorXd::LinSpaced(panel_dim, grid.a(), grid.b());
  const Eigen::MatrixXd phi_d = fourier_values(n_basis, design_pts, grid.a(), grid.b());
  const Eigen::MatrixXd coef =
      (phi_d * phi_d.transpose()).ldlt().solve(phi_d * panel.transpose()).transpose();

  FunctionalSeries out;
  out.grid = grid;
  out.values = coef * fourier_values(n_basis, grid.points, grid.a(), grid.b());
  return out;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
// of each R diagonal entry folded into Q.
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) M(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

}  // namespace detail

// FAR(1) via a VAR(1) on the first d Fourier coefficients: X_{t+1} = B X_t +
// eps with B = kappa G / (2 ||G||), G_ij = exp(-(i+j)), standard Gaussian
// innovations. The first burn_in draws are discarded.
inline FunctionalSeries gen_far1(int d, double kappa, Eigen::Index n, Eigen::Index burn_in,
                                 const Grid& grid, std::uint64_t seed) {
  if (d < 1 || d % 2 == 0) {
    throw InvalidArgumentError("gen_far1: d must be odd and >= 1, got " + std::to_string(d));
  }
  if (!(kappa >= 0.0 && kappa < 2.0)) {
    throw InvalidArgumentError("gen_far1: kappa must lie in [0, 2) for stationarity (||B|| = "
                               "kappa/2), got " + std::to_string(kappa));
  }
  if (n < 1) throw InvalidArgumentError("gen_far1: n must be >= 1");
  if (burn_in < 0) throw InvalidArgumentError("gen_far1: burn_in must be >= 0");

  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) G(i, j) = std::exp(-static_cast<double>(i + j + 2));
  }
  const Eigen::MatrixXd B = kappa * G / (2.0 * detail::spectral_norm(G));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eps(d);
  Eigen::MatrixXd coef(n, d);
  for (Eigen::Index t = 0; t < burn_in + n; ++t) {
    for (int i = 0; i < d; ++i) eps[i] = gauss(rng);
    x = B * x + eps;
    if (t >= burn_in) coef.row(t - burn_in) = x;
  }

  FunctionalSeries out;
  out.grid = grid;
  out.values = coef * detail::fourier_values(d, grid.points, grid.a(), grid.b());
  return out;
}

// Smoothed VARI(1,1): z_t = z_{t-1} + x_t, x_t = A x_{t-1} + u_t with A =
// V Lambda V', Lambda ~ U[0, 0.9] diagonal, V Haar; each time slice is
// smoothed onto n_basis Fourier functions.
inline FunctionalSeries gen_vari11(int panel_dim, Eigen::Index T, int n_basis, const Grid& grid,
                                   std::uint64_t seed) {
  if (panel_dim < 2) throw InvalidArgumentError("gen_vari11: panel dimension must be >= 2");
  if (T < 2) throw InvalidArgumentError("gen_vari11: T must be >= 2");
  if (n_basis < 1 || n_basis % 2 == 0) {
    throw InvalidArgumentError("gen_vari11: n_basis must be odd and >= 1");
  }
  if (n_basis > panel_dim) {
    throw InvalidArgumentError("gen_vari11: n_basis exceeds panel dimension; smoothing is "
                               "underdetermined");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 0.9);
  Eigen::VectorXd lambda(panel_dim);
  for (int i = 0; i < panel_dim; ++i) lambda[i] = unif(rng);
  const Eigen::MatrixXd V = detail::haar_orthogonal(panel_dim, rng);
  const Eigen::MatrixXd A = V * lambda.asDiagonal() * V.transpose();

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(panel_dim);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(panel_dim);
  Eigen::VectorXd u(panel_dim);
  Eigen::MatrixXd panel(T, panel_dim);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < panel_dim; ++i) u[i] = gauss(rng);
    x = A * x + u;
    z += x;
    panel.row(t) = z;
  }
  return detail::smooth_panel(panel, n_basis, grid);
}

struct DfmSample {
  FunctionalSeries observed;  // common part plus standard Gaussian noise
  FunctionalSeries common;    // noiseless lambda * F panel, same smoothing
};

// Dynamic factor model with static representation: z_t = lambda F_t + eps_t,
// F_t = D F_{t-1} + K u_t; lambda and K entrywise U(-1,1); D is a U(-1,1)
// matrix scaled to unit spectral norm and multiplied by s ~ U(-1,1).
inline DfmSample gen_dfm(int panel_dim, Eigen::Index T, int r, int q, const Grid& grid,
                         int n_basis, std::uint64_t seed) {
  if (q < 1 || r < q) throw InvalidArgumentError("gen_dfm: need r >= q >= 1");
  if (panel_dim < r) {
    throw InvalidArgumentError("gen_dfm: panel dimension must be >= r, got " +
                               std::to_string(panel_dim) + " < " + std::to_string(r));
  }
  if (T < 2) throw InvalidArgumentError("gen_dfm: T must be >= 2");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd loadings(panel_dim, r);
  for (int i = 0; i < panel_dim; ++i) {
    for (int h = 0; h < r; ++h) loadings(i, h) = unif(rng);
  }
  Eigen::MatrixXd Kmat(r, q);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < q; ++j) Kmat(i, j) = unif(rng);
  }
  Eigen::MatrixXd U(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) U(i, j) = unif(rng);
  }
  const Eigen::MatrixXd D = (unif(rng) / detail::spectral_norm(U)) * U;

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd u(q);
  Eigen::MatrixXd common(T, panel_dim), noisy(T, panel_dim);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < q; ++j) u[j] = gauss(rng);
    F = D * F + Kmat * u;
    common.row(t) = (loadings * F).transpose();
    for (int i = 0; i < panel_dim; ++i) noisy(t, i) = common(t, i) + gauss(rng);
  }

  DfmSample out;
  out.observed = detail::smooth_panel(noisy, n_basis, grid);
  out.common = detail::smooth_panel(common, n_basis, grid);
  return out;
}

}  // namespace gdfpca
