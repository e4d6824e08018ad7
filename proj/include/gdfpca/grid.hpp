#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "gdfpca/errors.hpp"

namespace gdfpca {

// Discretization of a compact interval [a, b]: strictly increasing abscissae
// together with trapezoidal quadrature weights, so that a function sampled on
// `points` integrates as weights.dot(samples).
struct Grid {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  Grid() = default;

  explicit Grid(Eigen::VectorXd pts) : points(std::move(pts)) {
    if (points.size() < 2) {
      throw InvalidArgumentError("Grid: need at least 2 points, got " +
                                 std::to_string(points.size()));
    }
    for (Eigen::Index g = 1; g < points.size(); ++g) {
      if (!(points[g] > points[g - 1])) {
        throw InvalidArgumentError("Grid: points must be strictly increasing at index " +
                                   std::to_string(g));
      }
    }
    const Eigen::Index G = points.size();
    weights.resize(G);
    weights[0] = (points[1] - points[0]) / 2.0;
    weights[G - 1] = (points[G - 1] - points[G - 2]) / 2.0;
    for (Eigen::Index g = 1; g + 1 < G; ++g) {
      weights[g] = (points[g + 1] - points[g - 1]) / 2.0;
    }
  }

  static Grid uniform(double a, double b, Eigen::Index count) {
    if (!(a < b)) {
      throw InvalidArgumentError("Grid::uniform: requires a < b");
    }
    if (count < 2) {
      throw InvalidArgumentError("Grid::uniform: need at least 2 points");
    }
    return Grid(Eigen::VectorXd::LinSpaced(count, a, b));
  }

  Eigen::Index size() const { return points.size(); }
  double a() const { return points[0]; }
  double b() const { return points[points.size() - 1]; }

  bool same_as(const Grid& other, double tol = 1e-12) const {
    return points.size() == other.points.size() &&
           (points - other.points).cwiseAbs().maxCoeff() <= tol;
  }

  // Quadrature inner product of two sampled functions.
  double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    return (weights.array() * f.array() * g.array()).sum();
  }

  double squared_norm(const Eigen::VectorXd& f) const { return inner(f, f); }
};

}  // namespace gdfpca
