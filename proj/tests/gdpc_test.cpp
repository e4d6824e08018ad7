#include "gdfpca/gdpc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gdfpca/errors.hpp"
#include "gdfpca/fpca.hpp"

using namespace gdfpca;

namespace {

std::mt19937 make_rng(unsigned seed) { return std::mt19937(seed); }

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = gauss(rng);
  return M;
}

Eigen::VectorXd random_vector(Eigen::Index size, std::mt19937& rng) {
  return random_matrix(size, 1, rng);
}

ScoreMatrix random_scores(Eigen::Index n, Eigen::Index m, std::mt19937& rng) {
  ScoreMatrix s;
  s.entries = random_matrix(n, m, rng);
  return s;
}

// brute-force lag-expansion oracle: chi_{t,j} = alpha_j + sum_h f_{t-h}
// beta_{h,j}, with stored f index t-h+K (1-based)
Eigen::MatrixXd reconstruct_oracle(const Eigen::VectorXd& f, const Eigen::MatrixXd& beta,
                                   const Eigen::VectorXd& alpha, Eigen::Index n) {
  const int K = static_cast<int>(beta.rows()) - 1;
  Eigen::MatrixXd R(n, beta.cols());
  for (Eigen::Index t = 1; t <= n; ++t) {
    for (Eigen::Index j = 0; j < beta.cols(); ++j) {
      double v = alpha[j];
      for (int h = 0; h <= K; ++h) v += f[t - h + K - 1] * beta(h, j);
      R(t - 1, j) = v;
    }
  }
  return R;
}

// reversed-lag coefficient vector b_j used by the index formulas: b_j[q]
// pairs design column q with lag K+1-q
Eigen::VectorXd design_order(const Eigen::MatrixXd& beta, Eigen::Index j) {
  const Eigen::Index K1 = beta.rows();
  Eigen::VectorXd b(K1);
  for (Eigen::Index q = 0; q < K1; ++q) b[q] = beta(K1 - 1 - q, j);
  return b;
}

// literal triple-loop oracle for C_j
Eigen::MatrixXd build_C_oracle(const Eigen::MatrixXd& chi, double alpha_j, Eigen::Index j,
                               int K) {
  const Eigen::Index n = chi.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + K, K + 1);
  for (Eigen::Index t = 1; t <= n + K; ++t) {
    for (Eigen::Index q = 1; q <= K + 1; ++q) {
      if (std::max<Eigen::Index>(1, t - n + 1) <= q && q <= std::min<Eigen::Index>(K + 1, t)) {
        C(t - 1, q - 1) = chi(t - q, j) - alpha_j;
      }
    }
  }
  return C;
}

// literal quadruple-loop oracle for D = sum_j D_j with the paper's index
// formula, b in design order and out-of-range coefficients read as zero
Eigen::MatrixXd build_D_oracle(const Eigen::MatrixXd& beta, Eigen::Index n) {
  const int K = static_cast<int>(beta.rows()) - 1;
  const Eigen::Index N = n + K;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index j = 0; j < beta.cols(); ++j) {
    const Eigen::VectorXd b = design_order(beta, j);
    for (Eigen::Index t = 1; t <= N; ++t) {
      for (Eigen::Index q = 1; q <= N; ++q) {
        if (!(std::max<Eigen::Index>(1, t - K) <= q && q <= std::min<Eigen::Index>(t + K, N))) {
          continue;
        }
        double sum = 0.0;
        for (Eigen::Index v = std::max<Eigen::Index>(1, t - K);
             v <= std::min<Eigen::Index>(t, n); ++v) {
          const Eigen::Index l1 = q - v + 1, l2 = t - v + 1;
          if (l1 >= 1 && l1 <= K + 1 && l2 >= 1 && l2 <= K + 1) sum += b[l1 - 1] * b[l2 - 1];
        }
        D(t - 1, q - 1) += sum;
      }
    }
  }
  return D;
}

// generic dense least-squares oracle for the factor subproblem: rows are
// (t, j) pairs, unknowns the n+K stored factor values
Eigen::VectorXd factor_ls_oracle(const Eigen::MatrixXd& chi, const Eigen::MatrixXd& beta,
                                 const Eigen::VectorXd& alpha) {
  const Eigen::Index n = chi.rows();
  const Eigen::Index m = chi.cols();
  const int K = static_cast<int>(beta.rows()) - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * m, n + K);
  Eigen::VectorXd y(n * m);
  Eigen::Index row = 0;
  for (Eigen::Index t = 1; t <= n; ++t) {
    for (Eigen::Index j = 0; j < m; ++j, ++row) {
      y[row] = chi(t - 1, j) - alpha[j];
      for (Eigen::Index i = t; i <= t + K; ++i) {
        A(row, i - 1) = beta(t + K - i, j);
      }
    }
  }
  return A.colPivHouseholderQr().solve(y);
}

}  // namespace

TEST(BuildFactorDesign, SmallExample) {
  Eigen::VectorXd f(4);
  f << 1.0, 2.0, 3.0, 4.0;
  const Eigen::MatrixXd F = build_factor_design(f, 3, 1);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 2, 1, 2, 3, 1, 3, 4, 1;
  EXPECT_EQ(F, expected);
}

TEST(BuildFactorDesign, NoLags) {
  Eigen::VectorXd f(5);
  f << 5, 6, 7, 8, 9;
  const Eigen::MatrixXd F = build_factor_design(f, 5, 0);
  EXPECT_EQ(F.col(0), f);
  EXPECT_EQ(F.col(1), Eigen::VectorXd::Ones(5));
}

TEST(BuildFactorDesign, MatchesLagExpansionOracle) {
  auto rng = make_rng(1);
  const Eigen::Index n = 4;
  const int K = 2;
  const Eigen::VectorXd f = random_vector(n + K, rng);
  const Eigen::MatrixXd beta = random_matrix(K + 1, 3, rng);
  const Eigen::VectorXd alpha = random_vector(3, rng);
  const Eigen::MatrixXd via_design =
      build_factor_design(f, n, K) * detail::design_coefficients(beta, alpha);
  EXPECT_LT((via_design - reconstruct_oracle(f, beta, alpha, n)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildFactorDesign, RejectsWrongLength) {
  EXPECT_THROW(build_factor_design(Eigen::VectorXd::Zero(5), 3, 1), DimensionError);
}

TEST(UpdateLoadings, SimpleRegressionOracle) {
  ScoreMatrix scores;
  scores.entries.resize(3, 1);
  scores.entries << 1, 2, 3;
  Eigen::VectorXd f(3);
  f << -1, 0, 1;
  const Loadings out = update_loadings(f, scores, 0);
  // K=0 closed form: beta = sum f chi / sum f^2, alpha = mean (f has mean 0)
  EXPECT_NEAR(out.beta(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(out.alpha[0], 2.0, 1e-12);
}

TEST(UpdateLoadings, RecoversExactModel) {
  auto rng = make_rng(2);
  const Eigen::Index n = 20, m = 3;
  const int K = 2;
  const Eigen::VectorXd f = random_vector(n + K, rng);
  const Eigen::MatrixXd beta = random_matrix(K + 1, m, rng);
  const Eigen::VectorXd alpha = random_vector(m, rng);
  ScoreMatrix scores;
  scores.entries = reconstruct_oracle(f, beta, alpha, n);
  const Loadings out = update_loadings(f, scores, K);
  EXPECT_LT((out.beta - beta).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((out.alpha - alpha).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(UpdateLoadings, MatchesDenseLeastSquaresOracle) {
  auto rng = make_rng(3);
  const Eigen::Index n = 12, m = 4;
  const int K = 2;
  const ScoreMatrix scores = random_scores(n, m, rng);
  const Eigen::VectorXd f = random_vector(n + K, rng);
  const Loadings out = update_loadings(f, scores, K);

  const Eigen::MatrixXd design = build_factor_design(f, n, K);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(scores.entries.col(j));
    for (int h = 0; h <= K; ++h) {
      EXPECT_NEAR(out.beta(h, j), coef[K - h], 1e-9);
    }
    EXPECT_NEAR(out.alpha[j], coef[K + 1], 1e-9);
  }
}

TEST(UpdateLoadings, RejectsConstantFactor) {
  auto rng = make_rng(4);
  const ScoreMatrix scores = random_scores(10, 2, rng);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(11);
  EXPECT_THROW(update_loadings(f, scores, 1), SingularDesignError);
}

TEST(BuildC, HandExpandedExample) {
  ScoreMatrix scores;
  scores.entries.resize(2, 1);
  scores.entries << 5.0, 7.0;
  const auto C = build_C(scores, Eigen::VectorXd::Zero(1), 1);
  ASSERT_EQ(C.size(), 1u);
  Eigen::MatrixXd expected(3, 2);
  expected << 5, 0, 7, 5, 0, 7;
  EXPECT_EQ(C[0], expected);
}

TEST(BuildC, InterceptSubtractsFromInBandEntries) {
  ScoreMatrix scores;
  scores.entries.resize(2, 1);
  scores.entries << 5.0, 7.0;
  Eigen::VectorXd alpha(1);
  alpha << 6.0;  // the column mean
  const auto C = build_C(scores, alpha, 1);
  Eigen::MatrixXd expected(3, 2);
  expected << -1, 0, 1, -1, 0, 1;
  EXPECT_EQ(C[0], expected);
}

TEST(BuildC, MatchesBruteForceOracle) {
  auto rng = make_rng(5);
  const Eigen::Index n = 6, m = 3;
  const int K = 2;
  const ScoreMatrix scores = random_scores(n, m, rng);
  const Eigen::VectorXd alpha = random_vector(m, rng);
  const auto C = build_C(scores, alpha, K);
  ASSERT_EQ(C.size(), static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    EXPECT_LT((C[j] - build_C_oracle(scores.entries, alpha[j], j, K)).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
  }
}

TEST(BuildD, NoLagsIsScaledIdentity) {
  auto rng = make_rng(6);
  const Eigen::MatrixXd beta = random_matrix(1, 4, rng);
  const Eigen::MatrixXd D = build_D(beta, 6);
  EXPECT_LT((D - beta.squaredNorm() * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(BuildD, SymmetricWithExactBandZeros) {
  auto rng = make_rng(7);
  const int K = 2;
  const Eigen::Index n = 9;
  const Eigen::MatrixXd beta = random_matrix(K + 1, 3, rng);
  const Eigen::MatrixXd D = build_D(beta, n);
  EXPECT_EQ(D, D.transpose().eval());
  for (Eigen::Index t = 0; t < D.rows(); ++t) {
    for (Eigen::Index q = 0; q < D.cols(); ++q) {
      if (std::abs(static_cast<long>(t - q)) > K) EXPECT_EQ(D(t, q), 0.0);
    }
  }
  // p.s.d.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(BuildD, MatchesBruteForceOracle) {
  auto rng = make_rng(8);
  const int K = 2;
  const Eigen::Index n = 8;
  const Eigen::MatrixXd beta = random_matrix(K + 1, 3, rng);
  EXPECT_LT((build_D(beta, n) - build_D_oracle(beta, n)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(FactorMinimizer, MatchesDenseLeastSquaresOracle) {
  auto rng = make_rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 6 + trial % 12;
    const int K = trial % 4;
    const Eigen::Index m = 2 + trial % 3;
    const ScoreMatrix scores = random_scores(n, m, rng);
    const Eigen::MatrixXd beta = random_matrix(K + 1, m, rng);
    const Eigen::VectorXd alpha = random_vector(m, rng);
    const Eigen::VectorXd fstar = factor_minimizer(scores, beta, alpha);
    const Eigen::VectorXd oracle = factor_ls_oracle(scores.entries, beta, alpha);
    const double scale = std::max(1.0, oracle.cwiseAbs().maxCoeff());
    EXPECT_LT((fstar - oracle).cwiseAbs().maxCoeff() / scale, 1e-8) << "trial " << trial;
  }
}

TEST(UpdateFactor, NormalizationArithmetic) {
  Eigen::VectorXd f(3);
  f << 1, 2, 3;
  const Eigen::VectorXd out = detail::normalize_factor(f, "test");
  Eigen::VectorXd expected(3);
  expected << -1, 0, 1;
  EXPECT_LT((out - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(out.mean(), 0.0, 1e-12);
  EXPECT_NEAR(out.squaredNorm(), 2.0, 1e-12);
}

TEST(UpdateFactor, EmitsNormalizedFactor) {
  auto rng = make_rng(10);
  const ScoreMatrix scores = random_scores(15, 3, rng);
  const Eigen::MatrixXd beta = random_matrix(3, 3, rng);
  const Eigen::VectorXd alpha = random_vector(3, rng);
  const Eigen::VectorXd f = update_factor(scores, beta, alpha);
  EXPECT_NEAR(f.mean(), 0.0, 1e-8);
  EXPECT_NEAR(f.squaredNorm(), static_cast<double>(f.size() - 1), 1e-6);
}

TEST(UpdateFactor, ObjectiveNeverIncreasesAcrossUpdates) {
  auto rng = make_rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 25, m = 4;
    const int K = trial % 3;
    const ScoreMatrix scores = random_scores(n, m, rng);
    Eigen::VectorXd f = detail::normalize_factor(random_vector(n + K, rng), "test");
    double prev = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < 10; ++sweep) {
      const Loadings L = update_loadings(f, scores, K);
      const double cur = gdpc_objective(scores, f, L.beta, L.alpha);
      EXPECT_LE(cur, prev + 1e-10);
      prev = cur;
      f = update_factor(scores, L.beta, L.alpha);
    }
  }
}

TEST(UpdateFactor, RejectsZeroLoadings) {
  auto rng = make_rng(12);
  const ScoreMatrix scores = random_scores(10, 2, rng);
  EXPECT_THROW(update_factor(scores, Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)),
               DegenerateLoadingsError);
}

TEST(InitialFactor, RecoversRankOneFactor) {
  auto rng = make_rng(13);
  const Eigen::Index n = 40;
  Eigen::VectorXd f_true = random_vector(n, rng);
  f_true.array() -= f_true.mean();
  const Eigen::VectorXd beta = random_vector(5, rng);
  ScoreMatrix scores;
  scores.entries = f_true * beta.transpose();
  const Eigen::VectorXd f0 = initial_factor(scores, 0);
  const double corr = f0.dot(f_true) / (f0.norm() * f_true.norm());
  EXPECT_GT(std::abs(corr), 1.0 - 1e-10);
}

TEST(InitialFactor, AlwaysNormalized) {
  auto rng = make_rng(14);
  const Eigen::Index n = 17;
  const int K = 2;
  const ScoreMatrix scores = random_scores(n, 4, rng);
  const Eigen::VectorXd f0 = initial_factor(scores, K);
  ASSERT_EQ(f0.size(), n + K);
  EXPECT_NEAR(f0.mean(), 0.0, 1e-10);
  EXPECT_NEAR(f0.squaredNorm(), static_cast<double>(n + K - 1), 1e-8);
}

TEST(InitialFactor, RejectsConstantScores) {
  ScoreMatrix scores;
  scores.entries = Eigen::MatrixXd::Constant(10, 3, 2.5);
  EXPECT_THROW(initial_factor(scores, 1), DegenerateInputError);
}

TEST(FitGdpc, NoiseFreeRecovery) {
  auto rng = make_rng(15);
  const Eigen::Index n = 200, m = 10;
  const int K = 2;
  const Eigen::VectorXd f_true = random_vector(n + K, rng);
  const Eigen::MatrixXd beta_true = random_matrix(K + 1, m, rng);
  const Eigen::VectorXd alpha_true = random_vector(m, rng);
  ScoreMatrix scores;
  scores.entries = reconstruct_oracle(f_true, beta_true, alpha_true, n);

  FitConfig cfg;
  cfg.lags = K;
  cfg.epsilon = 1e-12;
  cfg.max_iter = 2000;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  EXPECT_LT(fit.mse_trace.back(), 1e-10);
  // f itself is identified only up to affine transformations: compare
  // reconstructions
  EXPECT_LT((reconstruct_scores(fit) - scores.entries).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitGdpc, NoLagsMatchesRankOnePlusMeanOptimum) {
  auto rng = make_rng(16);
  int hits = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 60, m = 5;
    const ScoreMatrix scores = random_scores(n, m, rng);
    FitConfig cfg;
    cfg.lags = 0;
    const GdpcFit fit = fit_gdpc(scores, cfg);
    const double mse_gdpc = gdpc_objective(scores, fit.factor, fit.loadings, fit.intercept);

    const FpcaFit pca = fit_fpca(scores, 1);
    const double mse_pca = (scores.entries - reconstruct_fpca(pca, 1).entries).squaredNorm() /
                           static_cast<double>(n * m);
    if (std::abs(mse_gdpc - mse_pca) <= 1e-6 * mse_pca) ++hits;
    EXPECT_GE(mse_pca, mse_gdpc - 1e-12);  // PCA cannot beat the converged fit
  }
  EXPECT_GE(hits, 9);
}

TEST(FitGdpc, HugeThresholdStopsImmediately) {
  auto rng = make_rng(17);
  const ScoreMatrix scores = random_scores(50, 4, rng);
  FitConfig cfg;
  cfg.lags = 1;
  cfg.epsilon = 0.5;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.mse_trace.size(), 2u);
  EXPECT_GE(fit.mse_trace.size(), 1u);
}

TEST(FitGdpc, NonConvergenceIsReportedNotRaised) {
  auto rng = make_rng(18);
  const ScoreMatrix scores = random_scores(50, 4, rng);
  FitConfig cfg;
  cfg.lags = 1;
  cfg.epsilon = 1e-16;
  cfg.max_iter = 3;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.iterations, 3);
  EXPECT_EQ(fit.mse_trace.size(), 3u);
}

TEST(FitGdpc, FitInvariantsHold) {
  auto rng = make_rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const ScoreMatrix scores = random_scores(40, 5, rng);
    FitConfig cfg;
    cfg.lags = trial % 3;
    const GdpcFit fit = fit_gdpc(scores, cfg);
    EXPECT_NEAR(fit.factor.mean(), 0.0, 1e-8);
    EXPECT_NEAR(fit.factor.squaredNorm(), static_cast<double>(fit.factor.size() - 1), 1e-6);
    for (std::size_t i = 1; i < fit.mse_trace.size(); ++i) {
      EXPECT_LE(fit.mse_trace[i], fit.mse_trace[i - 1] + 1e-10);
    }
  }
}

TEST(FitGdpc, ScaleEquivariantReconstruction) {
  auto rng = make_rng(20);
  const ScoreMatrix scores = random_scores(60, 5, rng);
  FitConfig cfg;
  cfg.lags = 1;
  cfg.epsilon = 1e-10;
  const GdpcFit fit = fit_gdpc(scores, cfg);

  const double c = -3.5;
  ScoreMatrix scaled;
  scaled.entries = c * scores.entries;
  const GdpcFit fit2 = fit_gdpc(scaled, cfg);
  const Eigen::MatrixXd r1 = reconstruct_scores(fit);
  const Eigen::MatrixXd r2 = reconstruct_scores(fit2);
  const double rel =
      (r2 - c * r1).cwiseAbs().maxCoeff() / std::max(1.0, (c * r1).cwiseAbs().maxCoeff());
  EXPECT_LT(rel, 1e-6);
}

TEST(FitGdpc, RejectsTooShortSeries) {
  auto rng = make_rng(21);
  const ScoreMatrix scores = random_scores(5, 3, rng);
  FitConfig cfg;
  cfg.lags = 3;
  EXPECT_THROW(fit_gdpc(scores, cfg), DimensionError);
}

TEST(ResidualScores, NoiseFreeResidualsVanish) {
  auto rng = make_rng(22);
  const Eigen::Index n = 100, m = 6;
  const int K = 1;
  ScoreMatrix scores;
  scores.entries = reconstruct_oracle(random_vector(n + K, rng), random_matrix(K + 1, m, rng),
                                      random_vector(m, rng), n);
  FitConfig cfg;
  cfg.lags = K;
  cfg.epsilon = 1e-12;
  cfg.max_iter = 2000;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  const ScoreMatrix resid = residual_scores(scores, fit);
  EXPECT_LT(resid.entries.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ResidualScores, ObjectiveMatchesFinalTraceValue) {
  auto rng = make_rng(23);
  const ScoreMatrix scores = random_scores(40, 4, rng);
  FitConfig cfg;
  cfg.lags = 2;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  const ScoreMatrix resid = residual_scores(scores, fit);
  const double recomputed =
      resid.entries.squaredNorm() / static_cast<double>(scores.length() * scores.dim());
  EXPECT_NEAR(recomputed, fit.mse_trace.back(), 1e-12 * std::max(1.0, recomputed));
}

TEST(ResidualScores, SecondComponentReducesTotalError) {
  auto rng = make_rng(24);
  const Eigen::Index n = 120, m = 6;
  const int K = 1;
  // two-factor synthetic data
  ScoreMatrix scores;
  scores.entries = reconstruct_oracle(random_vector(n + K, rng), random_matrix(K + 1, m, rng),
                                      random_vector(m, rng), n) +
                   reconstruct_oracle(random_vector(n + K, rng), random_matrix(K + 1, m, rng),
                                      Eigen::VectorXd::Zero(m), n);
  FitConfig cfg;
  cfg.lags = K;
  const GdpcFit first = fit_gdpc(scores, cfg);
  const ScoreMatrix resid = residual_scores(scores, first);
  const GdpcFit second = fit_gdpc(resid, cfg);

  const double mse1 = (scores.entries - reconstruct_scores(first)).squaredNorm();
  const double mse2 =
      (scores.entries - reconstruct_scores(first) - reconstruct_scores(second)).squaredNorm();
  EXPECT_LT(mse2, mse1);
}

TEST(ResidualScores, RejectsShapeMismatch) {
  auto rng = make_rng(25);
  const ScoreMatrix scores = random_scores(30, 4, rng);
  FitConfig cfg;
  cfg.lags = 1;
  const GdpcFit fit = fit_gdpc(scores, cfg);
  const ScoreMatrix other = random_scores(30, 5, rng);
  EXPECT_THROW(residual_scores(other, fit), DimensionError);
}
