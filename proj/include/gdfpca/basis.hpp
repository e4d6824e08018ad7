#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "gdfpca/errors.hpp"
#include "gdfpca/grid.hpp"

namespace gdfpca {

enum class BasisKind { fourier, bspline };

inline const char* to_string(BasisKind kind) {
  return kind == BasisKind::fourier ? "fourier" : "bspline";
}

// Orthonormal basis system sampled on a grid. values(j, g) = phi_j(u_g); the
// functions are orthonormal with respect to the grid's quadrature inner
// product (B-splines after an explicit Gram-Schmidt pass).
struct BasisSystem {
  BasisKind kind = BasisKind::fourier;
  Eigen::MatrixXd values;  // m x G
  Grid grid;

  Eigen::Index size() const { return values.rows(); }
};

// n observed curves sampled on a shared grid; values(t, g) = X_t(u_g).
struct FunctionalSeries {
  Eigen::MatrixXd values;  // n x G
  Grid grid;

  Eigen::Index length() const { return values.rows(); }
};

// Basis coefficients of a functional series: entries(t, j) = <X_t, phi_j>.
struct ScoreMatrix {
  Eigen::MatrixXd entries;  // n x m

  Eigen::Index length() const { return entries.rows(); }
  Eigen::Index dim() const { return entries.cols(); }
};

namespace detail {

// Fourier functions orthonormal on [a, b]: the constant, then sin/cos pairs
// of increasing frequency, all rescaled by 1/sqrt(b - a).
inline Eigen::MatrixXd fourier_values(Eigen::Index m, const Eigen::VectorXd& points,
                                      double a, double b) {
  const double len = b - a;
  const double scale = 1.0 / std::sqrt(len);
  Eigen::MatrixXd values(m, points.size());
  for (Eigen::Index g = 0; g < points.size(); ++g) {
    const double w = (points[g] - a) / len;
    values(0, g) = scale;
    for (Eigen::Index k = 1; 2 * k < m + 1; ++k) {
      if (2 * k - 1 < m) values(2 * k - 1, g) = scale * std::sqrt(2.0) * std::sin(2.0 * M_PI * k * w);
      if (2 * k < m) values(2 * k, g) = scale * std::sqrt(2.0) * std::cos(2.0 * M_PI * k * w);
    }
  }
  return values;
}

// Cox-de Boor evaluation of all m B-spline basis functions of the given
// order on an open knot vector with equispaced interior knots.
inline Eigen::MatrixXd bspline_values(Eigen::Index m, const Eigen::VectorXd& points,
                                      double a, double b, int order) {
  const Eigen::Index n_interior = m - order;
  Eigen::VectorXd knots(m + order);
  for (int i = 0; i < order; ++i) {
    knots[i] = a;
    knots[m + order - 1 - i] = b;
  }
  for (Eigen::Index i = 0; i < n_interior; ++i) {
    knots[order + i] = a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(n_interior + 1);
  }

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(m, points.size());
  Eigen::MatrixXd N(m + order - 1, order);
  for (Eigen::Index g = 0; g < points.size(); ++g) {
    const double x = points[g];
    N.setZero();
    for (Eigen::Index i = 0; i + 1 < m + order; ++i) {
      const bool rightmost = x == b && knots[i] < b && knots[i + 1] == b;
      N(i, 0) = (knots[i] <= x && x < knots[i + 1]) || rightmost ? 1.0 : 0.0;
    }
    for (int k = 2; k <= order; ++k) {
      for (Eigen::Index i = 0; i + k < m + order; ++i) {
        double left = 0.0, right = 0.0;
        if (knots[i + k - 1] > knots[i]) {
          left = (x - knots[i]) / (knots[i + k - 1] - knots[i]) * N(i, k - 2);
        }
        if (knots[i + k] > knots[i + 1]) {
          right = (knots[i + k] - x) / (knots[i + k] - knots[i + 1]) * N(i + 1, k - 2);
        }
        N(i, k - 1) = left + right;
      }
    }
    values.col(g) = N.col(order - 1).head(m);
  }
  return values;
}

// Modified Gram-Schmidt against the quadrature inner product; two sweeps.
inline void orthonormalize(Eigen::MatrixXd& values, const Grid& grid) {
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      for (Eigen::Index k = 0; k < i; ++k) {
        const double proj = grid.inner(values.row(i), values.row(k));
        values.row(i) -= proj * values.row(k);
      }
      const double nrm = std::sqrt(grid.squared_norm(values.row(i)));
      if (nrm < 1e-12) {
        throw DegenerateInputError("orthonormalize: basis function " + std::to_string(i) +
                                   " is numerically dependent on its predecessors");
      }
      values.row(i) /= nrm;
    }
  }
}

}  // namespace detail

// Construct an orthonormal basis of m functions on the grid's interval.
// Fourier requires odd m; B-splines take the spline order (default cubic,
// order 4) and use m - order equispaced interior knots.
inline BasisSystem make_basis(BasisKind kind, Eigen::Index m, const Grid& grid, int order = 4) {
  if (m < 1) {
    throw InvalidArgumentError("make_basis: m must be >= 1, got " + std::to_string(m));
  }
  if (m > grid.size()) {
    throw InvalidArgumentError("make_basis: m = " + std::to_string(m) + " exceeds grid size " +
                               std::to_string(grid.size()) + "; quadrature is underdetermined");
  }
  BasisSystem basis;
  basis.kind = kind;
  basis.grid = grid;
  if (kind == BasisKind::fourier) {
    if (m % 2 == 0) {
      throw InvalidArgumentError("make_basis: fourier basis needs odd m, got " + std::to_string(m));
    }
    basis.values = detail::fourier_values(m, grid.points, grid.a(), grid.b());
  } else {
    if (order < 1 || order > m) {
      throw InvalidArgumentError("make_basis: bspline order must satisfy 1 <= order <= m");
    }
    basis.values = detail::bspline_values(m, grid.points, grid.a(), grid.b(), order);
    detail::orthonormalize(basis.values, grid);
  }
  return basis;
}

// Quadrature projection: entries(t, j) = sum_g w_g X_t(u_g) phi_j(u_g).
inline ScoreMatrix project_scores(const FunctionalSeries& series, const BasisSystem& basis) {
  if (!series.grid.same_as(basis.grid)) {
    throw DimensionError("project_scores: series and basis grids differ");
  }
  ScoreMatrix scores;
  scores.entries = series.values * basis.grid.weights.asDiagonal() * basis.values.transpose();
  return scores;
}

// Evaluate score rows as curves: X_t(u_g) = sum_j chi_{t,j} phi_j(u_g).
inline FunctionalSeries synthesize_curves(const ScoreMatrix& scores, const BasisSystem& basis) {
  if (scores.dim() != basis.size()) {
    throw DimensionError("synthesize_curves: scores have " + std::to_string(scores.dim()) +
                         " columns but basis has " + std::to_string(basis.size()) + " functions");
  }
  FunctionalSeries series;
  series.grid = basis.grid;
  series.values = scores.entries * basis.values;
  return series;
}

}  // namespace gdfpca
