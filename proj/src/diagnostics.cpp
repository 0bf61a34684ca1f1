#include "mtfr/diagnostics.hpp"

#include "mtfr/errors.hpp"
#include "mtfr/random.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace mtfr {

double x_norm(const DiagonalizedSystem& sys, const Eigen::VectorXd& b) {
  check_dims(b.size() == sys.dof(), "x_norm: coefficient length differs from K");
  const Eigen::Index live = sys.dof() - sys.pbar;
  return b.head(live).norm();
}

double x_norm(const DiagonalizedSystem& sys, const CovKernel& kernel, const Eigen::VectorXd& b) {
  check_dims(b.size() == sys.dof(), "x_norm: coefficient length differs from K");
  const Eigen::MatrixXd s = population_covariance(sys, kernel);
  return std::sqrt(std::max(0.0, b.dot(s * b)));
}

XNorm::XNorm(const CovKernel& kernel, const Grid& grid) : grid_(grid) {
  form_ = grid.w.asDiagonal() * kernel.gram(grid.t) * grid.w.asDiagonal();
}

double XNorm::squared(const Eigen::VectorXd& f) const {
  check_dims(f.size() == grid_.size(), "XNorm: sample length differs from grid");
  return std::max(0.0, f.dot(form_ * f));
}

double XNorm::operator()(const Eigen::VectorXd& f) const { return std::sqrt(squared(f)); }

double empirical_norm(const TaskDataset& data, int task, const Eigen::VectorXd& b) {
  require(task >= 0 && task < data.m(), "empirical_norm: task index out of range");
  check_dims(b.size() == data.k(), "empirical_norm: coefficient length differs from K");
  return std::sqrt((data.x[task] * b).squaredNorm() / double(data.n()));
}

double empirical_norm_deviation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma,
                                const Eigen::VectorXd& gamma, double eta1, int n_dirs, std::uint64_t seed) {
  const Eigen::Index k = x.cols();
  check_dims(sigma.rows() == k && gamma.size() == k, "empirical_norm_deviation: dimension mismatch");
  require(n_dirs >= 1, "empirical_norm_deviation: need at least one direction");
  const Eigen::MatrixXd s = x.transpose() * x / double(x.rows());
  Rng rng(seed);
  // Gaussian coordinates scaled to the ellipsoid b^T Sigma b + eta1 b^T Gamma b <= 1.
  const Eigen::VectorXd scale =
      (sigma.diagonal().array() + eta1 * gamma.array()).max(1e-300).rsqrt().matrix();
  const Eigen::MatrixXd dirs = scale.asDiagonal() * standard_normal(k, n_dirs, rng);
  double best = 0.0;
  for (int j = 0; j < n_dirs; ++j) {
    const Eigen::VectorXd b = dirs.col(j);
    const double pop = b.dot(sigma * b);
    const double den = pop + eta1 * b.dot(gamma.cwiseProduct(b));
    if (den <= 0.0) continue;
    best = std::max(best, std::abs(b.dot(s * b) - pop) / den);
  }
  return best;
}

double ellipsoid_complexity(const Eigen::VectorXd& gamma, double eta1) {
  require((gamma.array() >= 0.0).all(), "ellipsoid_complexity: gamma must be nonnegative");
  require(eta1 >= 0.0, "ellipsoid_complexity: eta1 must be nonnegative");
  return std::sqrt((1.0 / (1.0 + eta1 * gamma.array())).sum());
}

double graph_complexity(const Eigen::VectorXd& omega_eigs, double eta2) {
  return std::sqrt((1.0 / (1.0 + eta2 * omega_eigs.array().max(0.0))).sum());
}

double critical_radius(const RadiusInput& in) {
  require(in.k >= 1 && in.m >= 1 && in.n >= 1, "critical_radius: dimensions must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  const double spline_cap = in.eta1 > 0.0 ? std::pow(in.eta1, -1.0 / (4.0 * in.d + 4.0 * in.q)) : inf;
  const double spline = std::min(std::sqrt(double(in.k)), spline_cap);
  if (in.model == RadiusModel::reduced) {
    require(in.rank >= 1 && in.rank <= in.m, "critical_radius: rank out of range");
    return std::sqrt(double(in.rank)) * (spline + std::sqrt(double(in.m - in.rank))) / std::sqrt(double(in.n));
  }
  double graph;
  if (in.omega_eigs.size() > 0) {
    check_dims(in.omega_eigs.size() == in.m, "critical_radius: need M Laplacian eigenvalues");
    graph = graph_complexity(in.omega_eigs, in.eta2);
  } else {
    const double cap = in.eta2 > 0.0 ? std::pow(in.eta2, -in.mu / 4.0) : inf;
    graph = std::min(std::sqrt(double(in.m)), cap);
  }
  return graph * spline / std::sqrt(double(in.n));
}

LineFit rate_slope(const std::vector<double>& ns, const std::vector<double>& errs) {
  check_dims(ns.size() == errs.size(), "rate_slope: lengths differ");
  require(ns.size() >= 4, "rate_slope: need at least 4 points");
  const Eigen::Map<const Eigen::VectorXd> x(ns.data(), Eigen::Index(ns.size()));
  const Eigen::Map<const Eigen::VectorXd> y(errs.data(), Eigen::Index(errs.size()));
  return fit_loglog(x, y);
}

ErrorReport make_error_report(Eigen::VectorXd x_errs, double penalty_val, double spline_bias,
                              double manifold_bias) {
  require(x_errs.size() >= 1, "error report: no tasks");
  require(x_errs.allFinite() && (x_errs.array() >= 0.0).all(), "error report: invalid X-norm errors");
  require(std::isfinite(penalty_val) && penalty_val >= -1e-12, "error report: invalid penalty value");
  ErrorReport r;
  r.penalty_val = std::max(0.0, penalty_val);
  r.combined = (x_errs.sum() + std::sqrt(r.penalty_val)) / double(x_errs.size());
  r.x_norm_errs = std::move(x_errs);
  r.spline_bias = spline_bias;
  r.manifold_bias = manifold_bias;
  return r;
}

double rank_truncation_error(const Eigen::MatrixXd& b, int rank) {
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(b).singularValues();
  if (rank >= s.size()) return 0.0;
  return s.tail(s.size() - rank).squaredNorm();
}

void write_error_csv_header(std::ostream& os) {
  os << "mean_x_err,max_x_err,penalty,combined,spline_bias,manifold_bias\n";
}

void write_error_csv_row(std::ostream& os, const ErrorReport& r) {
  os << r.x_norm_errs.mean() << "," << r.x_norm_errs.maxCoeff() << "," << r.penalty_val << "," << r.combined
     << "," << r.spline_bias << "," << r.manifold_bias << "\n";
}

}  // namespace mtfr
