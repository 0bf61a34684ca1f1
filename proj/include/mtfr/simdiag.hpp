#pragma once

#include "mtfr/processes.hpp"
#include "mtfr/quadrature.hpp"
#include "mtfr/spline_basis.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace mtfr {

/// Working spline basis phi = Q phi_raw in which the roughness form is
/// diag(gamma) and the population covariance of int x phi is I_{K-p} (+) 0_p.
struct DiagonalizedSystem {
  SplineBasis basis;            ///< raw basis with Q installed
  Eigen::VectorXd gamma;        ///< nondecreasing, >= 0
  int pbar = 0;                 ///< detected null multiplicity of the X-norm
  Eigen::MatrixXd sigma_pattern;
  int deriv_order = 0;
  Grid grid;                    ///< kernel grid used for the covariance step
  Eigen::VectorXd f_eigs;       ///< eigenvalues of F, decreasing
  Eigen::VectorXd w1_eigs;      ///< eigenvalues of the step-one matrix, increasing
  double cond_q = 0.0;

  int dof() const { return basis.dof(); }
  const Eigen::MatrixXd& transform() const { return basis.transform(); }
  Eigen::MatrixXd roughness() const { return gamma.asDiagonal(); }
  /// Raw B-spline coefficients of the function with working coefficients b.
  Eigen::VectorXd to_raw(const Eigen::VectorXd& b) const;
  Eigen::VectorXd from_raw(const Eigen::VectorXd& braw) const;
};

struct SimdiagOptions {
  /// Relative threshold below which eigenvalues of F count as null.
  double null_tol = 1e-10;
  /// Grid for the covariance integral. Default: 512-point uniform.
  int grid_points = 512;
};

/// Two-step construction: whiten the Gram matrix and diagonalize the
/// roughness form, then whiten the covariate covariance F (null eigenvalues
/// replaced by K^{-2q}) and diagonalize the remaining roughness form.
DiagonalizedSystem diagonalize(const SplineBasis& basis, const CovKernel& kernel, int d,
                               const SimdiagOptions& opts = {});

/// Population covariance of int x phi under `kernel`, computed with the
/// system's own grid quadrature.
Eigen::MatrixXd population_covariance(const DiagonalizedSystem& sys, const CovKernel& kernel);

/// Least-squares slope of log gamma_k on log k over k in [2d+2, K]
/// (1-based). Throws when K < 2d+8 or a gamma in the window is not positive.
double gamma_growth_check(const DiagonalizedSystem& sys);

/// Relative change of gamma (k > 2d) between successive grid sizes.
struct RefinementStep {
  int grid_points;
  double max_rel_change;
};
std::vector<RefinementStep> grid_refinement_report(const SplineBasis& basis, const CovKernel& kernel,
                                                   int d, const std::vector<int>& grids);

/// CSV dump: metadata lines with pbar and cond(Q), then k,gamma rows.
void write_gamma_csv(std::ostream& os, const DiagonalizedSystem& sys);

}  // namespace mtfr
