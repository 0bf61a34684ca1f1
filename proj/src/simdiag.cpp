#include "mtfr/simdiag.hpp"

#include "mtfr/errors.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace mtfr {

namespace {

struct SymEig {
  Eigen::VectorXd values;  // increasing
  Eigen::MatrixXd vectors;
};

SymEig sym_eig(const Eigen::MatrixXd& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

Eigen::VectorXd DiagonalizedSystem::to_raw(const Eigen::VectorXd& b) const {
  return basis.transform().transpose() * b;
}

Eigen::VectorXd DiagonalizedSystem::from_raw(const Eigen::VectorXd& braw) const {
  return basis.transform().transpose().partialPivLu().solve(braw);
}

DiagonalizedSystem diagonalize(const SplineBasis& basis, const CovKernel& kernel, int d,
                               const SimdiagOptions& opts) {
  require(d >= 0 && d < basis.order(), "diagonalize: need 0 <= d < order");
  const SplineBasis raw = basis.raw();
  const int k = raw.dof();

  // Step one: N^{-1/2} Gamma N^{-1/2} = V1 W1 V1^T.
  const GramPair gp = gram_matrices(raw, d);
  const SymEig ne = sym_eig(gp.gram, "diagonalize(gram)");
  if (ne.values(0) <= 0.0) throw NumericalError("diagonalize: Gram matrix is not positive definite");
  const Eigen::MatrixXd n_inv_half =
      ne.vectors * ne.values.array().rsqrt().matrix().asDiagonal() * ne.vectors.transpose();
  const SymEig s1 = sym_eig(n_inv_half * gp.rough * n_inv_half, "diagonalize(step one)");
  const double w1_tol = 1e-10 * std::max(1.0, s1.values.cwiseAbs().maxCoeff());
  const int w1_null = int((s1.values.array() < w1_tol).count());
  if (w1_null > d)
    throw NumericalError("diagonalize: roughness form has " + std::to_string(w1_null) +
                         " null directions, expected " + std::to_string(d) + " (knot degeneracy)");
  const Eigen::VectorXd w1 = s1.values.cwiseMax(0.0);
  const Eigen::MatrixXd step1 = s1.vectors.transpose() * n_inv_half;

  // Step two: F = int int C(s,t) phi_hat(s) phi_hat(t)^T on the kernel grid.
  DiagonalizedSystem sys{raw, {}, 0, {}, d, Grid::uniform(opts.grid_points), {}, {}, 0.0};
  const Eigen::MatrixXd wmat = step1 * raw.eval_matrix(sys.grid.t, 0) * sys.grid.w.asDiagonal();
  const Eigen::MatrixXd f = wmat * kernel.gram(sys.grid.t) * wmat.transpose();
  const SymEig fe = sym_eig(f, "diagonalize(F)");
  const double fmax = fe.values.maxCoeff();
  Eigen::VectorXd fvals = fe.values;
  int pbar = 0;
  const double fill = std::pow(double(k), -2.0 * kernel.eigen_decay_q());
  for (Eigen::Index i = 0; i < fvals.size(); ++i) {
    if (fvals(i) < opts.null_tol * fmax) {
      fvals(i) = fill;
      ++pbar;
    }
  }
  if (fvals.minCoeff() <= 0.0) throw NumericalError("diagonalize: F is singular after the null fix");
  const Eigen::MatrixXd ff = fe.vectors * fvals.asDiagonal() * fe.vectors.transpose();

  // Generalized problem W1 v = gamma F v. The leading w1_null coordinates span
  // the exact roughness null space, so its eigenvectors are (F_zz^{-1/2}, 0);
  // the rest come from the Schur complement of F_zz. Deflating keeps the null
  // gammas at exactly zero instead of O(eps * gamma_max).
  const int nz = w1_null, ny = k - nz;
  auto inv_half = [](const Eigen::MatrixXd& a, const char* what) {
    const SymEig e = sym_eig(a, what);
    if (e.values(0) <= 0.0) throw NumericalError(std::string(what) + ": matrix is not positive definite");
    return Eigen::MatrixXd(e.vectors * e.values.array().rsqrt().matrix().asDiagonal() * e.vectors.transpose());
  };
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd schur = ff.bottomRightCorner(ny, ny);
  Eigen::MatrixXd coupling;  // F_zz^{-1} F_zy
  if (nz > 0) {
    const Eigen::LLT<Eigen::MatrixXd> fzz(ff.topLeftCorner(nz, nz));
    if (fzz.info() != Eigen::Success) throw NumericalError("diagonalize: F is not positive definite on the null block");
    coupling = fzz.solve(ff.topRightCorner(nz, ny));
    schur -= ff.bottomLeftCorner(ny, nz) * coupling;
    v.topLeftCorner(nz, nz) = inv_half(ff.topLeftCorner(nz, nz), "diagonalize(null block)");
  }
  const Eigen::MatrixXd s_inv_half = inv_half(schur, "diagonalize(Schur block)");
  const SymEig s2 = sym_eig(s_inv_half * w1.tail(ny).asDiagonal() * s_inv_half, "diagonalize(step two)");
  const Eigen::MatrixXd y = s_inv_half * s2.vectors;
  v.bottomRightCorner(ny, ny) = y;
  if (nz > 0) v.topRightCorner(nz, ny) = -coupling * y;
  gamma.tail(ny) = s2.values.cwiseMax(0.0);

  const Eigen::MatrixXd q = v.transpose() * step1;
  sys.basis = raw.with_transform(q);
  sys.gamma = gamma;
  sys.pbar = pbar;
  sys.sigma_pattern = Eigen::MatrixXd::Identity(k, k);
  for (int i = k - pbar; i < k; ++i) sys.sigma_pattern(i, i) = 0.0;
  sys.f_eigs = fe.values.reverse();
  sys.w1_eigs = w1;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
  sys.cond_q = svd.singularValues()(0) / svd.singularValues()(k - 1);
  return sys;
}

Eigen::MatrixXd population_covariance(const DiagonalizedSystem& sys, const CovKernel& kernel) {
  const Eigen::MatrixXd wmat = covariate_integrator(sys.basis, sys.grid);
  Eigen::MatrixXd c = wmat * kernel.gram(sys.grid.t) * wmat.transpose();
  return 0.5 * (c + c.transpose());
}

double gamma_growth_check(const DiagonalizedSystem& sys) {
  const int k = sys.dof();
  const int d = sys.deriv_order;
  require(k >= 2 * d + 8, "gamma_growth_check: need K >= 2d+8");
  const int lo = 2 * d + 2;
  const int n = k - lo + 1;
  Eigen::VectorXd idx(n), g(n);
  for (int i = 0; i < n; ++i) {
    idx(i) = lo + i;
    g(i) = sys.gamma(lo + i - 1);
    if (!(g(i) > 0.0))
      throw NumericalError("gamma_growth_check: gamma_" + std::to_string(lo + i) + " is not positive");
  }
  return fit_loglog(idx, g).slope;
}

std::vector<RefinementStep> grid_refinement_report(const SplineBasis& basis, const CovKernel& kernel,
                                                   int d, const std::vector<int>& grids) {
  std::vector<RefinementStep> out;
  Eigen::VectorXd prev;
  for (int n : grids) {
    SimdiagOptions o;
    o.grid_points = n;
    const DiagonalizedSystem s = diagonalize(basis, kernel, d, o);
    const Eigen::VectorXd g = s.gamma.tail(s.gamma.size() - 2 * d);
    double change = NAN;
    if (prev.size() == g.size()) change = ((g - prev).array().abs() / g.array()).maxCoeff();
    out.push_back({n, change});
    prev = g;
  }
  return out;
}

void write_gamma_csv(std::ostream& os, const DiagonalizedSystem& sys) {
  os << "# K=" << sys.dof() << " order=" << sys.basis.order() << " d=" << sys.deriv_order << "\n";
  os << "# pbar=" << sys.pbar << "\n";
  os << "# cond_Q=" << sys.cond_q << "\n";
  os << "k,gamma\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < sys.gamma.size(); ++i) os << (i + 1) << "," << sys.gamma(i) << "\n";
}

}  // namespace mtfr
