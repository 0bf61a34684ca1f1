#pragma once

#include "mtfr/estimators.hpp"
#include "mtfr/processes.hpp"
#include "mtfr/quadrature.hpp"
#include "mtfr/simdiag.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace mtfr {

/// (b^T (I_{K-p} (+) 0_p) b)^{1/2}: the X-norm in diagonalized coordinates.
double x_norm(const DiagonalizedSystem& sys, const Eigen::VectorXd& b);

/// (b^T Sigma b)^{1/2} with Sigma the population covariance under `kernel`.
double x_norm(const DiagonalizedSystem& sys, const CovKernel& kernel, const Eigen::VectorXd& b);

/// X-norm of an arbitrary function sampled on a grid,
/// ||f||_X^2 = sum_ij w_i w_j C(t_i, t_j) f(t_i) f(t_j).
class XNorm {
 public:
  XNorm(const CovKernel& kernel, const Grid& grid);
  double squared(const Eigen::VectorXd& f) const;
  double operator()(const Eigen::VectorXd& f) const;
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  Eigen::MatrixXd form_;
};

/// ((1/N) sum_n (x_nm^T b)^2)^{1/2}
double empirical_norm(const TaskDataset& data, int task, const Eigen::VectorXd& b);

/// sup over random b of |b^T(S - Sigma)b| / (b^T Sigma b + eta1 b^T Gamma b),
/// with S = X^T X / N. Coordinate k of b is Gaussian with variance
/// 1 / (Sigma_kk + eta1 gamma_k).
double empirical_norm_deviation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma,
                                const Eigen::VectorXd& gamma, double eta1, int n_dirs, std::uint64_t seed);

/// (sum_k 1 / (1 + eta1 gamma_k))^{1/2}
double ellipsoid_complexity(const Eigen::VectorXd& gamma, double eta1);

enum class RadiusModel { reduced, graph };

struct RadiusInput {
  RadiusModel model = RadiusModel::reduced;
  int rank = 1;
  int k = 0;
  int m = 1;
  int n = 1;
  int d = 2;
  int q = 1;
  double mu = 2.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  /// Laplacian eigenvalues; when non-empty the graph factor uses them.
  Eigen::VectorXd omega_eigs;
};

/// reduced: sqrt(R) (min(sqrt K, eta1^{-1/(4d+4q)}) + sqrt(M-R)) / sqrt(N)
/// graph:   min(sqrt M, eta2^{-mu/4}) min(sqrt K, eta1^{-1/(4d+4q)}) / sqrt(N)
double critical_radius(const RadiusInput& in);

/// Graph factor from Laplacian eigenvalues, (sum_m 1/(1+eta2 lambda_m))^{1/2}.
double graph_complexity(const Eigen::VectorXd& omega_eigs, double eta2);

/// Least-squares slope of log err on log n. Needs >= 4 positive points.
LineFit rate_slope(const std::vector<double>& ns, const std::vector<double>& errs);

struct ErrorReport {
  Eigen::VectorXd x_norm_errs;
  double penalty_val = 0.0;
  double combined = 0.0;
  double spline_bias = 0.0;
  double manifold_bias = 0.0;
};

/// combined = (1/M) (sum_m x_err_m + penalty_val^{1/2})
ErrorReport make_error_report(Eigen::VectorXd x_errs, double penalty_val, double spline_bias = 0.0,
                              double manifold_bias = 0.0);

/// Sum of squared trailing singular values beyond rank R.
double rank_truncation_error(const Eigen::MatrixXd& b, int rank);

void write_error_csv_header(std::ostream& os);
void write_error_csv_row(std::ostream& os, const ErrorReport& r);

}  // namespace mtfr
