#include "mtfr/spline_basis.hpp"

#include "mtfr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mtfr {

SplineBasis SplineBasis::uniform(int dof, int order) {
  require(order >= 1, "SplineBasis: order must be >= 1");
  require(dof >= order, "SplineBasis: dof K=" + std::to_string(dof) +
                            " is smaller than the order " + std::to_string(order));
  SplineBasis b;
  b.order_ = order;
  b.dof_ = dof;
  const int n_interior = dof - order;
  b.knots_.resize(dof + order);
  for (int i = 0; i < order; ++i) {
    b.knots_(i) = 0.0;
    b.knots_(dof + order - 1 - i) = 1.0;
  }
  for (int j = 1; j <= n_interior; ++j) b.knots_(order - 1 + j) = double(j) / (n_interior + 1);
  b.breaks_ = Eigen::VectorXd::LinSpaced(n_interior + 2, 0.0, 1.0);
  b.transform_ = Eigen::MatrixXd::Identity(dof, dof);
  return b;
}

SplineBasis SplineBasis::with_transform(const Eigen::MatrixXd& q) const {
  check_dims(q.rows() == dof_ && q.cols() == dof_, "with_transform: transform must be K x K");
  require(q.allFinite(), "with_transform: transform has non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
  if (!std::isfinite(cond) || cond > 1e14)
    throw NumericalError("with_transform: transform is not invertible (cond=" +
                         std::to_string(cond) + ")");
  SplineBasis b = *this;
  b.transform_ = q;
  b.has_transform_ = true;
  return b;
}

SplineBasis SplineBasis::raw() const {
  SplineBasis b = *this;
  b.transform_ = Eigen::MatrixXd::Identity(dof_, dof_);
  b.has_transform_ = false;
  return b;
}

int SplineBasis::span_index(double t) const {
  const int p = degree();
  if (t >= 1.0) return dof_ - 1;
  // Largest i in [p, K-1] with knots(i) <= t.
  const double* first = knots_.data() + p;
  const double* last = knots_.data() + dof_;
  const double* it = std::upper_bound(first, last, t);
  return int(it - knots_.data()) - 1;
}

Eigen::VectorXd SplineBasis::eval_raw(double t, int deriv) const {
  require(t >= 0.0 && t <= 1.0, "SplineBasis::eval: t=" + std::to_string(t) + " outside [0,1]");
  require(deriv >= 0, "SplineBasis::eval: negative derivative order");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dof_);
  const int p = degree();
  if (deriv > p) return out;

  // Nonzero basis functions and their derivatives (de Boor / Cox recursion
  // with the triangular table of knot differences).
  const int span = span_index(t);
  std::vector<double> left(p + 1), right(p + 1);
  Eigen::MatrixXd ndu(p + 1, p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_(span + 1 - j);
    right[j] = knots_(span + j) - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::VectorXd ders(p + 1);
  if (deriv == 0) {
    for (int j = 0; j <= p; ++j) ders(j) = ndu(j, p);
  } else {
    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
      int s1 = 0, s2 = 1;
      a(0, 0) = 1.0;
      double d = 0.0;
      for (int k = 1; k <= deriv; ++k) {
        d = 0.0;
        const int rk = r - k;
        const int pk = p - k;
        if (r >= k) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          d = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = (rk >= -1) ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          d += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
          d += a(s2, k) * ndu(r, pk);
        }
        std::swap(s1, s2);
      }
      ders(r) = d;
    }
    double factor = p;
    for (int k = 1; k < deriv; ++k) factor *= (p - k);
    ders *= factor;
  }
  for (int j = 0; j <= p; ++j) out(span - p + j) = ders(j);
  return out;
}

SplineBasis::Values SplineBasis::evaluate(double t, int deriv) const {
  Values v;
  v.identically_zero = deriv >= order_;
  const Eigen::VectorXd r = eval_raw(t, deriv);
  v.values = has_transform_ ? Eigen::VectorXd(transform_ * r) : r;
  return v;
}

Eigen::MatrixXd SplineBasis::eval_matrix(const Eigen::VectorXd& t, int deriv) const {
  Eigen::MatrixXd raw_vals(dof_, t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) raw_vals.col(i) = eval_raw(t(i), deriv);
  if (!has_transform_) return raw_vals;
  return transform_ * raw_vals;
}

double SplineBasis::function_value(const Eigen::VectorXd& b, double t, int deriv) const {
  check_dims(b.size() == dof_, "function_value: coefficient length differs from K");
  return b.dot(eval(t, deriv));
}

Grid knot_quadrature(const SplineBasis& basis, int nodes_per_interval) {
  const auto& br = basis.breakpoints();
  const Eigen::Index n_int = br.size() - 1;
  Grid g;
  g.t.resize(n_int * nodes_per_interval);
  g.w.resize(n_int * nodes_per_interval);
  for (Eigen::Index j = 0; j < n_int; ++j) {
    auto [x, w] = gauss_legendre(nodes_per_interval, br(j), br(j + 1));
    g.t.segment(j * nodes_per_interval, nodes_per_interval) = x;
    g.w.segment(j * nodes_per_interval, nodes_per_interval) = w;
  }
  return g;
}

GramPair gram_matrices(const SplineBasis& basis, int d, int nodes_per_interval) {
  require(d >= 0, "gram_matrices: negative derivative order");
  require(d < basis.order(), "gram_matrices: derivative order d=" + std::to_string(d) +
                                 " must be below the spline order");
  const int nq = nodes_per_interval > 0 ? nodes_per_interval : basis.order();
  const Grid q = knot_quadrature(basis, nq);
  const Eigen::MatrixXd v0 = basis.eval_matrix(q.t, 0);
  const Eigen::MatrixXd vd = basis.eval_matrix(q.t, d);
  GramPair gp;
  gp.deriv_order = d;
  gp.gram = v0 * q.w.asDiagonal() * v0.transpose();
  gp.rough = vd * q.w.asDiagonal() * vd.transpose();
  gp.gram = (0.5 * (gp.gram + gp.gram.transpose())).eval();
  gp.rough = (0.5 * (gp.rough + gp.rough.transpose())).eval();
  return gp;
}

Eigen::VectorXd integrate_covariate(const SplineBasis& basis,
                                    const std::function<double(double)>& x) {
  const Grid q = knot_quadrature(basis, basis.order() + 4);
  Eigen::VectorXd fx(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) fx(i) = x(q.t(i)) * q.w(i);
  return basis.eval_matrix(q.t, 0) * fx;
}

Eigen::MatrixXd covariate_integrator(const SplineBasis& basis, const Grid& grid) {
  require(grid.size() >= 4 * basis.dof(),
          "integrate_covariate: grid of " + std::to_string(grid.size()) +
              " points is too coarse for K=" + std::to_string(basis.dof()) + " (need >= 4K)");
  return basis.eval_matrix(grid.t, 0) * grid.w.asDiagonal();
}

Eigen::VectorXd integrate_covariate(const SplineBasis& basis, const Grid& grid,
                                    const Eigen::VectorXd& samples) {
  check_dims(samples.size() == grid.size(), "integrate_covariate: samples differ from grid size");
  return covariate_integrator(basis, grid) * samples;
}

Eigen::VectorXd l2_projection(const SplineBasis& basis, const std::function<double(double)>& f) {
  const GramPair gp = gram_matrices(basis, 0);
  return gp.gram.ldlt().solve(integrate_covariate(basis, f));
}

}  // namespace mtfr
