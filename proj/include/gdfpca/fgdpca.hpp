#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"
#include "gdfpca/gdpc.hpp"

// Functional layer: truncate curves to scores, fit components greedily on
// residuals, and map score-level results back to curves and functional
// metrics.
namespace gdfpca {

struct FgdpcaModel {
  BasisSystem basis;
  std::vector<GdpcFit> components;  // component k fitted on residuals of 1..k-1
  int lags = 0;

  int count() const { return static_cast<int>(components.size()); }
  Eigen::Index truncation() const { return basis.size(); }
  Eigen::Index length() const { return components.empty() ? 0 : components.front().length(); }
};

// Grid-sampled loading curves of one component: alpha(u) and the K+1 lag
// curves beta_h(u).
struct LoadingCurves {
  Eigen::VectorXd alpha_curve;  // G
  Eigen::MatrixXd beta_curves;  // (K+1) x G
};

inline FgdpcaModel fit_fgdpca(const FunctionalSeries& series, const BasisSystem& basis, int p,
                              const FitConfig& config) {
  if (p < 1) throw InvalidArgumentError("fit_fgdpca: p must be >= 1");
  if (series.length() < 2 || series.grid.size() < 2) {
    throw DimensionError("fit_fgdpca: series must hold at least 2 curves on 2 grid points");
  }
  if (!series.values.allFinite()) {
    throw InvalidArgumentError("fit_fgdpca: series contains non-finite values");
  }

  FgdpcaModel model;
  model.basis = basis;
  model.lags = config.lags;
  ScoreMatrix scores = project_scores(series, basis);
  for (int k = 0; k < p; ++k) {
    model.components.push_back(fit_gdpc(scores, config));
    scores = residual_scores(scores, model.components.back());
  }
  return model;
}

// Sum of the first p_used per-component score reconstructions.
inline Eigen::MatrixXd reconstruct_model_scores(const FgdpcaModel& model, int p_used) {
  if (p_used < 1 || p_used > model.count()) {
    throw InvalidArgumentError("reconstruct: p_used must lie in [1, " +
                               std::to_string(model.count()) + "], got " + std::to_string(p_used));
  }
  Eigen::MatrixXd total = reconstruct_scores(model.components[0]);
  for (int k = 1; k < p_used; ++k) {
    total += reconstruct_scores(model.components[k]);
  }
  return total;
}

inline FunctionalSeries reconstruct_functional(const FgdpcaModel& model, int p_used) {
  ScoreMatrix scores;
  scores.entries = reconstruct_model_scores(model, p_used);
  return synthesize_curves(scores, model.basis);
}

inline LoadingCurves loading_curves(const FgdpcaModel& model, int component) {
  if (component < 0 || component >= model.count()) {
    throw InvalidArgumentError("loading_curves: component index out of range");
  }
  const GdpcFit& fit = model.components[component];
  LoadingCurves out;
  out.alpha_curve = fit.intercept.transpose() * model.basis.values;
  out.beta_curves = fit.loadings * model.basis.values;
  return out;
}

// Functional MSE: 1/n sum_t ||X_t - X_t^R||^2 under quadrature.
inline double functional_mse(const FunctionalSeries& series, const FunctionalSeries& recon) {
  if (series.length() != recon.length() || !series.grid.same_as(recon.grid)) {
    throw DimensionError("functional_mse: mismatched series");
  }
  const Eigen::MatrixXd diff = series.values - recon.values;
  double total = 0.0;
  for (Eigen::Index t = 0; t < diff.rows(); ++t) {
    total += series.grid.squared_norm(diff.row(t));
  }
  return total / static_cast<double>(series.length());
}

// 1 - sum ||X_t - X_t^R||^2 / sum ||X_t - Xbar||^2 with Xbar the pointwise
// time-mean curve. Deliberately not clamped: values below 0 expose bad fits.
inline double explained_variance(const FunctionalSeries& series, const FunctionalSeries& recon) {
  if (series.length() != recon.length() || !series.grid.same_as(recon.grid)) {
    throw DimensionError("explained_variance: mismatched series");
  }
  const Eigen::RowVectorXd mean_curve = series.values.colwise().mean();
  double total = 0.0;
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    total += series.grid.squared_norm(series.values.row(t) - mean_curve);
  }
  if (total < 1e-300) {
    throw DegenerateInputError("explained_variance: series has zero total variance");
  }
  double resid = 0.0;
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    resid += series.grid.squared_norm(series.values.row(t) - recon.values.row(t));
  }
  return 1.0 - resid / total;
}

}  // namespace gdfpca
