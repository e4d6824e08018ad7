#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"

// Generalized dynamic principal component estimation on score matrices.
//
// One component reconstructs chi_{t,j} as alpha_j + sum_{h=0..K} f_{t-h}
// beta_{h,j}. The factor f has length n+K and is stored so that position i
// (1-based) holds the value with time index i-K; the lagged values needed by
// row t therefore sit in stored positions t..t+K. The two block updates are
// exact least-squares solves, so the objective is non-increasing across
// sweeps.
namespace gdfpca {

enum class FactorInit { first_pc, supplied, random };

struct FitConfig {
  int lags = 0;            // K
  double epsilon = 1e-6;   // relative-improvement stopping threshold
  int max_iter = 500;
  FactorInit init = FactorInit::first_pc;
  std::optional<Eigen::VectorXd> initial;  // used when init == supplied
  std::uint64_t seed = 0;                  // used when init == random

  void validate() const {
    if (lags < 0) throw InvalidArgumentError("FitConfig: lags must be >= 0");
    if (!(epsilon > 0)) throw InvalidArgumentError("FitConfig: epsilon must be > 0");
    if (max_iter < 1) throw InvalidArgumentError("FitConfig: max_iter must be >= 1");
    if (init == FactorInit::supplied && !initial) {
      throw InvalidArgumentError("FitConfig: supplied init requires an initial factor");
    }
  }
};

// One fitted component. loadings(h, j) = beta_{h,j} with h the lag index.
struct GdpcFit {
  Eigen::VectorXd factor;     // length n + K
  Eigen::MatrixXd loadings;   // (K+1) x m
  Eigen::VectorXd intercept;  // m
  std::vector<double> mse_trace;
  int iterations = 0;
  bool converged = false;

  int lags() const { return static_cast<int>(loadings.rows()) - 1; }
  Eigen::Index length() const { return factor.size() - lags(); }
  Eigen::Index dim() const { return loadings.cols(); }
};

struct Loadings {
  Eigen::MatrixXd beta;      // (K+1) x m, lag order
  Eigen::VectorXd alpha;     // m
};

// Design matrix with t-th row (f_t, f_{t+1}, ..., f_{t+K}, 1) in stored
// indexing; column q (1-based) pairs with loading row K+1-q.
inline Eigen::MatrixXd build_factor_design(const Eigen::VectorXd& f, Eigen::Index n, int lags) {
  if (f.size() != n + lags) {
    throw DimensionError("build_factor_design: factor length " + std::to_string(f.size()) +
                         " != n + K = " + std::to_string(n + lags));
  }
  Eigen::MatrixXd design(n, lags + 2);
  for (int q = 0; q <= lags; ++q) {
    design.col(q) = f.segment(q, n);
  }
  design.col(lags + 1).setOnes();
  return design;
}

namespace detail {

// Stack the loadings in design-column order (reversed lags) with the
// intercept last, so that design * coefficients reconstructs the scores.
inline Eigen::MatrixXd design_coefficients(const Eigen::MatrixXd& beta,
                                           const Eigen::VectorXd& alpha) {
  const Eigen::Index K1 = beta.rows();
  Eigen::MatrixXd coef(K1 + 1, beta.cols());
  for (Eigen::Index q = 0; q < K1; ++q) {
    coef.row(q) = beta.row(K1 - 1 - q);
  }
  coef.row(K1) = alpha.transpose();
  return coef;
}

}  // namespace detail

// Fitted scores F(f) (beta'; alpha) for given parameters.
inline Eigen::MatrixXd reconstruct_scores(const Eigen::VectorXd& f, const Eigen::MatrixXd& beta,
                                          const Eigen::VectorXd& alpha, Eigen::Index n) {
  const int K = static_cast<int>(beta.rows()) - 1;
  return build_factor_design(f, n, K) * detail::design_coefficients(beta, alpha);
}

inline Eigen::MatrixXd reconstruct_scores(const GdpcFit& fit) {
  return reconstruct_scores(fit.factor, fit.loadings, fit.intercept, fit.length());
}

// Canonical objective: 1/(nm) sum_t ||chi_t - chi_t^R||^2.
inline double gdpc_objective(const ScoreMatrix& scores, const Eigen::VectorXd& f,
                             const Eigen::MatrixXd& beta, const Eigen::VectorXd& alpha) {
  const Eigen::Index n = scores.length();
  const Eigen::Index m = scores.dim();
  const Eigen::MatrixXd recon = reconstruct_scores(f, beta, alpha, n);
  return (scores.entries - recon).squaredNorm() / static_cast<double>(n * m);
}

// Exact least-squares update of (beta, alpha) given the factor: one shared
// factorization of F'F solves all m coordinate regressions.
inline Loadings update_loadings(const Eigen::VectorXd& f, const ScoreMatrix& scores, int lags) {
  const Eigen::Index n = scores.length();
  const Eigen::MatrixXd design = build_factor_design(f, n, lags);
  const Eigen::MatrixXd gram = design.transpose() * design;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 0) || lmax / lmin > 1e12) {
    throw SingularDesignError("update_loadings: design F(f)'F(f) is numerically singular "
                              "(constant factor?)");
  }

  const Eigen::MatrixXd coef =
      gram.ldlt().solve(design.transpose() * scores.entries);  // (K+2) x m
  Loadings out;
  out.alpha = coef.row(lags + 1).transpose();
  out.beta.resize(lags + 1, scores.dim());
  for (int h = 0; h <= lags; ++h) {
    out.beta.row(h) = coef.row(lags - h);  // design column q pairs with lag K-q
  }
  return out;
}

// The m matrices C_j(alpha_j) of the factor normal equations: entry (t, q)
// equals chi_{t-q+1, j} - alpha_j when 1 v (t-n+1) <= q <= (K+1) ^ t, zero
// otherwise (1-based indices).
inline std::vector<Eigen::MatrixXd> build_C(const ScoreMatrix& scores,
                                            const Eigen::VectorXd& alpha, int lags) {
  const Eigen::Index n = scores.length();
  const Eigen::Index m = scores.dim();
  if (alpha.size() != m) {
    throw DimensionError("build_C: alpha length != number of score columns");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + lags, lags + 1);
    for (Eigen::Index t = 1; t <= n + lags; ++t) {
      const Eigen::Index q_lo = std::max<Eigen::Index>(1, t - n + 1);
      const Eigen::Index q_hi = std::min<Eigen::Index>(lags + 1, t);
      for (Eigen::Index q = q_lo; q <= q_hi; ++q) {
        C(t - 1, q - 1) = scores.entries(t - q, j) - alpha[j];
      }
    }
    out.push_back(std::move(C));
  }
  return out;
}

namespace detail {

// Lower band of D(beta): band(d, i) = D(i+d, i), d = 0..K. D is the normal
// matrix of the factor subproblem, symmetric p.s.d. with bandwidth K.
inline Eigen::MatrixXd factor_band(const Eigen::MatrixXd& beta, Eigen::Index n) {
  const int K = static_cast<int>(beta.rows()) - 1;
  const Eigen::Index N = n + K;
  const Eigen::MatrixXd P = beta * beta.transpose();  // (K+1) x (K+1) loading gram
  Eigen::MatrixXd band = Eigen::MatrixXd::Zero(K + 1, N);
  for (int d = 0; d <= K; ++d) {
    for (Eigen::Index c = 0; c + d < N; ++c) {
      const Eigen::Index tau = c + 1 + d;  // 1-based row index
      const Eigen::Index l_lo = std::max<Eigen::Index>(0, K + 1 - tau);
      const Eigen::Index l_hi = std::min<Eigen::Index>(K - d, n + K - tau);
      double sum = 0.0;
      for (Eigen::Index l = l_lo; l <= l_hi; ++l) {
        sum += P(l, l + d);
      }
      band(d, c) = sum;
    }
  }
  return band;
}

// In-place banded Cholesky A = L L' on lower band storage. Returns false on
// a non-positive pivot or a pivot ratio implying condition above the guard.
inline bool band_cholesky(Eigen::MatrixXd& band) {
  const Eigen::Index N = band.cols();
  const Eigen::Index K = band.rows() - 1;
  double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < N; ++j) {
    double ajj = band(0, j);
    for (Eigen::Index c = std::max<Eigen::Index>(0, j - K); c < j; ++c) {
      ajj -= band(j - c, c) * band(j - c, c);
    }
    if (!(ajj > 0)) return false;
    const double ljj = std::sqrt(ajj);
    band(0, j) = ljj;
    max_pivot = std::max(max_pivot, ljj);
    min_pivot = std::min(min_pivot, ljj);
    for (Eigen::Index i = j + 1; i <= std::min(j + K, N - 1); ++i) {
      double v = band(i - j, j);
      for (Eigen::Index c = std::max<Eigen::Index>(0, i - K); c < j; ++c) {
        v -= band(i - c, c) * band(j - c, c);
      }
      band(i - j, j) = v / ljj;
    }
  }
  // pivot-ratio proxy for the 1e12 condition guard
  return min_pivot > 0 && (max_pivot / min_pivot) * (max_pivot / min_pivot) <= 1e12;
}

inline Eigen::VectorXd band_solve(const Eigen::MatrixXd& chol, Eigen::VectorXd b) {
  const Eigen::Index N = chol.cols();
  const Eigen::Index K = chol.rows() - 1;
  for (Eigen::Index i = 0; i < N; ++i) {  // L y = b
    for (Eigen::Index c = std::max<Eigen::Index>(0, i - K); c < i; ++c) {
      b[i] -= chol(i - c, c) * b[c];
    }
    b[i] /= chol(0, i);
  }
  for (Eigen::Index i = N - 1; i >= 0; --i) {  // L' x = y
    for (Eigen::Index r = i + 1; r <= std::min(i + K, N - 1); ++r) {
      b[i] -= chol(r - i, i) * b[r];
    }
    b[i] /= chol(0, i);
  }
  return b;
}

// Right-hand side sum_j C_j(alpha_j) beta_j accumulated without forming the
// C matrices: position tau (1-based) collects beta_{l,:} . (chi_{tau+l-K} -
// alpha) over admissible lags l.
inline Eigen::VectorXd factor_rhs(const ScoreMatrix& scores, const Eigen::MatrixXd& beta,
                                  const Eigen::VectorXd& alpha) {
  const Eigen::Index n = scores.length();
  const int K = static_cast<int>(beta.rows()) - 1;
  const Eigen::MatrixXd centered = scores.entries.rowwise() - alpha.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + K);
  for (int l = 0; l <= K; ++l) {
    rhs.segment(K - l, n) += centered * beta.row(l).transpose();
  }
  return rhs;
}

inline Eigen::VectorXd normalize_factor(Eigen::VectorXd f, const char* who) {
  const Eigen::Index N = f.size();
  f.array() -= f.mean();
  const double nrm = f.norm();
  if (nrm < 1e-14) {
    throw DegenerateFactorError(std::string(who) + ": factor is numerically constant");
  }
  return std::sqrt(static_cast<double>(N - 1)) * f / nrm;
}

}  // namespace detail

// Dense D(beta) as an (n+K) x (n+K) matrix; exact zeros outside bandwidth K.
inline Eigen::MatrixXd build_D(const Eigen::MatrixXd& beta, Eigen::Index n) {
  const int K = static_cast<int>(beta.rows()) - 1;
  const Eigen::Index N = n + K;
  const Eigen::MatrixXd band = detail::factor_band(beta, n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  for (int d = 0; d <= K; ++d) {
    for (Eigen::Index c = 0; c + d < N; ++c) {
      D(c + d, c) = band(d, c);
      D(c, c + d) = band(d, c);
    }
  }
  return D;
}

// Exact minimizer f* of the objective over f with (beta, alpha) fixed,
// before normalization. Banded Cholesky with a dense fallback.
inline Eigen::VectorXd factor_minimizer(const ScoreMatrix& scores, const Eigen::MatrixXd& beta,
                                        const Eigen::VectorXd& alpha) {
  const Eigen::Index n = scores.length();
  const int K = static_cast<int>(beta.rows()) - 1;
  if (alpha.size() != scores.dim() || beta.cols() != scores.dim()) {
    throw DimensionError("factor_minimizer: loading shape does not match scores");
  }
  if (beta.norm() == 0.0) {
    throw DegenerateLoadingsError("factor_minimizer: beta is identically zero, D is singular");
  }
  const Eigen::VectorXd rhs = detail::factor_rhs(scores, beta, alpha);

  Eigen::MatrixXd chol = detail::factor_band(beta, n);
  if (detail::band_cholesky(chol)) {
    return detail::band_solve(chol, rhs);
  }

  // fall back to a dense eigendecomposition with the same condition guard
  const Eigen::MatrixXd D = build_D(beta, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 0) || lmax / lmin > 1e12) {
    throw DegenerateLoadingsError("factor_minimizer: D(beta) is numerically singular");
  }
  return eig.eigenvectors() *
         (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * rhs));
}

// Factor update: exact minimizer followed by the zero-mean, norm
// sqrt(n+K-1) normalization.
inline Eigen::VectorXd update_factor(const ScoreMatrix& scores, const Eigen::MatrixXd& beta,
                                     const Eigen::VectorXd& alpha) {
  return detail::normalize_factor(factor_minimizer(scores, beta, alpha), "update_factor");
}

// Initial factor: first principal-component score sequence of the centered
// score matrix, front-padded with its first value K times, then normalized.
inline Eigen::VectorXd initial_factor(const ScoreMatrix& scores, int lags) {
  const Eigen::Index n = scores.length();
  if (n < lags + 2) {
    throw DimensionError("initial_factor: need n >= K + 2");
  }
  const Eigen::MatrixXd centered = scores.entries.rowwise() - scores.entries.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  if (svd.singularValues()[0] < 1e-12) {
    throw DegenerateInputError("initial_factor: score matrix has zero variance");
  }
  Eigen::VectorXd v = svd.matrixV().col(0);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0) v = -v;  // deterministic sign
  const Eigen::VectorXd pc = centered * v;

  Eigen::VectorXd f(n + lags);
  f.head(lags).setConstant(pc[0]);
  f.tail(n) = pc;
  return detail::normalize_factor(std::move(f), "initial_factor");
}

// Alternate the two exact block updates until the relative objective
// improvement drops below epsilon or max_iter sweeps elapse.
inline GdpcFit fit_gdpc(const ScoreMatrix& scores, const FitConfig& config) {
  config.validate();
  const Eigen::Index n = scores.length();
  const Eigen::Index m = scores.dim();
  const int K = config.lags;
  if (m < 1) throw DimensionError("fit_gdpc: scores have no columns");
  if (n <= K + 2) {
    throw DimensionError("fit_gdpc: need n > K + 2, got n = " + std::to_string(n) +
                         ", K = " + std::to_string(K));
  }
  if (!scores.entries.allFinite()) {
    throw InvalidArgumentError("fit_gdpc: scores contain non-finite entries");
  }

  Eigen::VectorXd f;
  switch (config.init) {
    case FactorInit::first_pc:
      f = initial_factor(scores, K);
      break;
    case FactorInit::supplied: {
      if (config.initial->size() != n + K) {
        throw DimensionError("fit_gdpc: supplied initial factor has wrong length");
      }
      f = detail::normalize_factor(*config.initial, "fit_gdpc(supplied init)");
      break;
    }
    case FactorInit::random: {
      std::mt19937_64 rng(config.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      f.resize(n + K);
      for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = gauss(rng);
      f = detail::normalize_factor(std::move(f), "fit_gdpc(random init)");
      break;
    }
  }
  const Eigen::VectorXd f_init = f;

  GdpcFit fit;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1;; ++it) {
    try {
      const Loadings loadings = update_loadings(f, scores, K);
      const double cur = gdpc_objective(scores, f, loadings.beta, loadings.alpha);
      fit.mse_trace.push_back(cur);
      fit.loadings = loadings.beta;
      fit.intercept = loadings.alpha;
      fit.iterations = it;
      if (it > 1 && (prev - cur) / prev < config.epsilon) {
        fit.converged = true;
        break;
      }
      if (it == config.max_iter) {
        fit.converged = false;
        break;
      }
      prev = cur;
      f = update_factor(scores, loadings.beta, loadings.alpha);
    } catch (const SingularDesignError& e) {
      throw SingularDesignError("fit_gdpc sweep " + std::to_string(it) + ": " + e.what());
    } catch (const DegenerateLoadingsError& e) {
      throw DegenerateLoadingsError("fit_gdpc sweep " + std::to_string(it) + ": " + e.what());
    } catch (const DegenerateFactorError& e) {
      throw DegenerateFactorError("fit_gdpc sweep " + std::to_string(it) + ": " + e.what());
    }
  }

  // reproducible sign: positive correlation with the initialization
  if (f.dot(f_init) < 0) {
    f = -f;
    fit.loadings = -fit.loadings;
  }
  fit.factor = std::move(f);
  return fit;
}

// Residuals chi - (alpha + sum_h f_{t-h} beta_h); fitting on these yields
// the next component.
inline ScoreMatrix residual_scores(const ScoreMatrix& scores, const GdpcFit& fit) {
  if (fit.dim() != scores.dim() || fit.length() != scores.length()) {
    throw DimensionError("residual_scores: fit dimensions do not match scores");
  }
  ScoreMatrix out;
  out.entries = scores.entries - reconstruct_scores(fit);
  return out;
}

}  // namespace gdfpca
