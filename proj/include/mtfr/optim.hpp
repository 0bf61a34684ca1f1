#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mtfr {

/// f(x, grad) -> value; grad is written when non-null.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

struct LbfgsOptions {
  double grad_tol = 1e-8;
  int max_iter = 500;
  int memory = 10;
};

/// Limited-memory BFGS with Armijo backtracking. Updates with
/// non-positive curvature are skipped, so the trace is non-increasing.
MinimizeResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts = {});

}  // namespace mtfr
