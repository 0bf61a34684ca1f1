#pragma once

#include "mtfr/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>

namespace mtfr {

/// Clamped B-spline system on [0,1] with uniform interior knots, optionally
/// composed with an invertible K x K transform Q (phi = Q * phi_raw).
///
/// Immutable: installing a transform returns a new basis.
class SplineBasis {
 public:
  /// order = polynomial degree + 1; dof = K. Throws if dof < order.
  static SplineBasis uniform(int dof, int order);

  int order() const { return order_; }
  int degree() const { return order_ - 1; }
  int dof() const { return dof_; }
  const Eigen::VectorXd& knots() const { return knots_; }
  /// Distinct knots 0 = x_0 < ... < x_J = 1.
  const Eigen::VectorXd& breakpoints() const { return breaks_; }
  const Eigen::MatrixXd& transform() const { return transform_; }
  bool has_transform() const { return has_transform_; }

  /// New basis sharing knots with `q` installed. Throws NumericalError when q
  /// is not numerically invertible.
  SplineBasis with_transform(const Eigen::MatrixXd& q) const;
  SplineBasis raw() const;

  struct Values {
    Eigen::VectorXd values;
    /// deriv >= order: the derivative is identically zero.
    bool identically_zero = false;
  };

  /// transform * (raw B-spline derivative values of order `deriv`) at t.
  Values evaluate(double t, int deriv = 0) const;
  Eigen::VectorXd eval(double t, int deriv = 0) const { return evaluate(t, deriv).values; }

  /// Raw (untransformed) values; all K entries, mostly zero.
  Eigen::VectorXd eval_raw(double t, int deriv = 0) const;

  /// K x n matrix of basis values at the given points.
  Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& t, int deriv = 0) const;

  /// Function value sum_k b_k phi_k^{(deriv)}(t).
  double function_value(const Eigen::VectorXd& b, double t, int deriv = 0) const;

 private:
  SplineBasis() = default;
  int span_index(double t) const;

  int order_ = 0;
  int dof_ = 0;
  Eigen::VectorXd knots_;
  Eigen::VectorXd breaks_;
  Eigen::MatrixXd transform_;
  bool has_transform_ = false;
};

/// Gram matrix int phi phi^T and roughness matrix int phi^(d) phi^(d)^T in
/// the basis' current coordinates.
struct GramPair {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd rough;
  int deriv_order = 0;
};

/// Exact Gram/roughness matrices by Gauss-Legendre quadrature per knot
/// interval. `nodes_per_interval` defaults to the spline order, which
/// integrates products of two splines of that order exactly.
GramPair gram_matrices(const SplineBasis& basis, int d, int nodes_per_interval = 0);

/// Gauss-Legendre nodes/weights over all knot intervals.
Grid knot_quadrature(const SplineBasis& basis, int nodes_per_interval);

/// int x(t) phi(t) dt for a function handle, Gauss-Legendre per knot interval.
Eigen::VectorXd integrate_covariate(const SplineBasis& basis,
                                    const std::function<double(double)>& x);

/// K x n weight matrix W with x_vec = W * samples for curves sampled on
/// `grid` (quadrature weights of the grid are folded in). Throws when the
/// grid has fewer than 4K points.
Eigen::MatrixXd covariate_integrator(const SplineBasis& basis, const Grid& grid);

/// int x(t) phi(t) dt for a curve sampled on `grid`.
Eigen::VectorXd integrate_covariate(const SplineBasis& basis, const Grid& grid,
                                    const Eigen::VectorXd& samples);

/// Coefficients of the L2 projection of f onto the spline space.
Eigen::VectorXd l2_projection(const SplineBasis& basis, const std::function<double(double)>& f);

}  // namespace mtfr
