#pragma once

#include <Eigen/Dense>

#include <utility>

namespace mtfr {

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n);

/// Nodes/weights of an n-point Gauss-Legendre rule mapped to [a, b].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b);

/// A quadrature grid on [0,1]: evaluation points and weights.
struct Grid {
  Eigen::VectorXd t;
  Eigen::VectorXd w;

  Eigen::Index size() const { return t.size(); }

  /// n equispaced points including both endpoints, trapezoid weights.
  static Grid uniform(int n);
  /// n cell midpoints, equal weights 1/n.
  static Grid midpoint(int n);
};

/// Least-squares fit y = a + slope * x. Returns slope and its standard error.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Slope of log(y) against log(x); every entry must be positive.
LineFit fit_loglog(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace mtfr
