#pragma once

#include "mtfr/graph.hpp"
#include "mtfr/penalty.hpp"
#include "mtfr/simdiag.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace mtfr {

enum class InterceptMode { none, fitted };

struct LossKind {
  enum Kind { squared, logistic, quantile };
  Kind kind = squared;
  double w = 0.5;           ///< quantile level
  double smooth_eps = 0.0;  ///< Huber corner width; <= 0 picks 1e-3 * IQR(y) at fit time

  static LossKind make_squared() { return {squared, 0.5, 0.0}; }
  static LossKind make_logistic() { return {logistic, 0.5, 0.0}; }
  static LossKind make_quantile(double w, double eps = 0.0);
  std::string name() const;
};

LossKind parse_loss(const std::string& name, double w = 0.5, double eps = 0.0);

/// Mean loss over the sample and its gradient with respect to u (already
/// divided by N). For the quantile loss `value` is the smoothed objective
/// and `exact` the plain pinball loss; otherwise the two agree.
struct LossEval {
  double value = 0.0;
  double exact = 0.0;
  Eigen::VectorXd grad;
};

LossEval loss_value_grad(const LossKind& loss, const Eigen::VectorXd& y, const Eigen::VectorXd& u);

/// Per-sample second derivative of the mean loss (divided by N).
Eigen::VectorXd loss_curvature(const LossKind& loss, const Eigen::VectorXd& y, const Eigen::VectorXd& u);

/// Replaces a non-positive quantile smoothing width by 1e-3 * IQR of all
/// responses (floored at 1e-8).
LossKind resolve_smoothing(const LossKind& loss, const std::vector<Eigen::VectorXd>& y);

struct TaskDataset {
  std::vector<Eigen::MatrixXd> x;  ///< M designs, N x K
  std::vector<Eigen::VectorXd> y;  ///< M responses, length N
  InterceptMode intercept_mode = InterceptMode::fitted;
  LossKind loss;

  int m() const { return int(x.size()); }
  int n() const { return x.empty() ? 0 : int(x.front().rows()); }
  int k() const { return x.empty() ? 0 : int(x.front().cols()); }
  /// Throws on inconsistent shapes, non-finite entries or bad labels.
  void validate() const;
  /// (1/(NM)) sum_{n,m} x_nm x_nm^T
  Eigen::MatrixXd pooled_covariance() const;
};

struct FitResult {
  Eigen::MatrixXd b;  ///< K x M
  Eigen::VectorXd alpha;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
};

/// L(alpha, B) + P(B) with the 1/(NM) loss scaling. Gradients are written when
/// the pointers are non-null.
double objective(const TaskDataset& data, const PenaltySpec<double>& spec, const Eigen::VectorXd& alpha,
                 const Eigen::MatrixXd& b, Eigen::MatrixXd* grad_b = nullptr,
                 Eigen::VectorXd* grad_alpha = nullptr);

/// Exact (unsmoothed) pinball objective for quantile data; objective() otherwise.
double exact_objective(const TaskDataset& data, const PenaltySpec<double>& spec, const Eigen::VectorXd& alpha,
                       const Eigen::MatrixXd& b);

struct FitOptions {
  double grad_tol = 1e-8;
  int max_iter = 500;
  /// Reduced model.
  double als_tol = 1e-10;
  int max_sweeps = 500;
  double riemannian_tol = 1e-7;
  int riemannian_max_iter = 5000;
  /// Graph model.
  double cg_tol = 1e-10;
};

/// Per-task penalized spline fits. Squared loss solves
/// (X_m^T X_m / N + M eta1 Gamma) b_m = X_m^T y_m / N (on centred data when
/// intercepts are fitted), which is the stationarity condition of the pooled
/// (1/(NM))-scaled objective. Logistic uses damped Newton, quantile L-BFGS.
FitResult fit_pooled(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1,
                     const FitOptions& opts = {});
inline FitResult fit_pooled(const TaskDataset& data, const DiagonalizedSystem& sys, double eta1,
                            const FitOptions& opts = {}) {
  return fit_pooled(data, sys.gamma, eta1, opts);
}

/// Intercepts alone with B fixed at zero.
Eigen::VectorXd fit_intercepts(const TaskDataset& data, const FitOptions& opts = {});

enum class ReducedInit { svd_of_pooled, random };
enum class ReducedMethod { als, riemannian };

struct ReducedOptions {
  ReducedInit init = ReducedInit::svd_of_pooled;
  std::uint64_t seed = 0;
  ReducedMethod method = ReducedMethod::als;
};

/// Rank-R fit B = D A^T. ALS (squared loss only) alternates the exact task
/// solves for A and the KR x KR solve for D; the Riemannian path runs
/// conjugate gradients on the fixed-rank manifold with retraction.
FitResult fit_reduced(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, int rank,
                      const ReducedOptions& ropts = {}, const FitOptions& opts = {});
inline FitResult fit_reduced(const TaskDataset& data, const DiagonalizedSystem& sys, double eta1, int rank,
                             const ReducedOptions& ropts = {}, const FitOptions& opts = {}) {
  return fit_reduced(data, sys.gamma, eta1, rank, ropts, opts);
}

/// Graph-regularized fit. Squared loss: preconditioned CG on the coupled
/// normal equations with a structured mat-vec; other losses: L-BFGS.
FitResult fit_graph(const TaskDataset& data, const Eigen::VectorXd& gamma, const Eigen::MatrixXd& omega,
                    double eta1, double eta2, const FitOptions& opts = {});
inline FitResult fit_graph(const TaskDataset& data, const DiagonalizedSystem& sys, const Laplacian& lap,
                           double eta1, double eta2, const FitOptions& opts = {}) {
  return fit_graph(data, sys.gamma, lap.omega, eta1, eta2, opts);
}

/// The penalty each fitter minimizes, for objective evaluation.
PenaltySpec<double> pooled_penalty(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1);
PenaltySpec<double> graph_penalty(const TaskDataset& data, const Eigen::VectorXd& gamma,
                                  const Eigen::MatrixXd& omega, double eta1, double eta2);

/// Dense KM x KM system of the squared-loss graph fit (small problems only),
/// returning vec(B). Used as an oracle for the CG path.
Eigen::VectorXd graph_dense_solve(const TaskDataset& data, const Eigen::VectorXd& gamma,
                                  const Eigen::MatrixXd& omega, double eta1, double eta2);

/// Riemannian gradient norm of a rank-R fit (tangent projection of the
/// Euclidean B-gradient together with the intercept gradient).
double reduced_grad_norm(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, int rank,
                         const FitResult& fit);

}  // namespace mtfr
