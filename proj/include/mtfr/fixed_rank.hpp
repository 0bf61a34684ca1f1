#pragma once

#include "mtfr/errors.hpp"
#include "mtfr/penalty.hpp"
#include "mtfr/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace mtfr {

/// Point on the manifold of K x M matrices of rank exactly R, held as a
/// compact SVD U diag(d) V^T with d strictly positive and decreasing.
template <typename Scalar>
struct FixedRankPoint {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix u;
  Vector d;
  Matrix v;

  Eigen::Index rows() const { return u.rows(); }
  Eigen::Index cols() const { return v.rows(); }
  Eigen::Index rank() const { return d.size(); }

  /// Truncated SVD of b. Throws RankDegeneracy when sigma_R <= 1e-12.
  template <typename Derived>
  static FixedRankPoint from_dense(const Eigen::MatrixBase<Derived>& b, Eigen::Index r) {
    require(r >= 1 && r <= std::min(b.rows(), b.cols()), "FixedRankPoint: rank out of range");
    Eigen::BDCSVD<Matrix> svd(Matrix(b), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    if (!(s(r - 1) > Scalar(1e-12)))
      throw RankDegeneracy("fixed-rank point: singular value " + std::to_string(double(s(r - 1))) +
                           " at rank " + std::to_string(r) + " is not bounded away from zero");
    return {svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
  }

  Matrix dense() const { return u * d.asDiagonal() * v.transpose(); }
  /// Moore-Penrose inverse V D^{-1} U^T (M x K).
  Matrix pinv() const { return v * d.cwiseInverse().asDiagonal() * u.transpose(); }
  Scalar sigma_min() const { return d(d.size() - 1); }
};

/// Tangent vector U m V^T + U_p V^T + U V_p^T with U^T U_p = 0 and V^T V_p = 0.
template <typename Scalar>
struct TangentVector {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix m_core;  ///< R x R
  Matrix u_p;     ///< K x R
  Matrix v_p;     ///< M x R

  TangentVector operator*(Scalar a) const { return {a * m_core, a * u_p, a * v_p}; }
  TangentVector operator+(const TangentVector& o) const {
    return {m_core + o.m_core, u_p + o.u_p, v_p + o.v_p};
  }
  TangentVector operator-(const TangentVector& o) const {
    return {m_core - o.m_core, u_p - o.u_p, v_p - o.v_p};
  }
};

template <typename Scalar>
typename FixedRankPoint<Scalar>::Matrix to_dense(const FixedRankPoint<Scalar>& p,
                                                 const TangentVector<Scalar>& t) {
  return (p.u * t.m_core + t.u_p) * p.v.transpose() + p.u * t.v_p.transpose();
}

template <typename Scalar, typename Derived>
TangentVector<Scalar> project_tangent(const FixedRankPoint<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  check_dims(x.rows() == p.rows() && x.cols() == p.cols(), "project_tangent: dimension mismatch");
  const Matrix xe = x;
  const Matrix xv = xe * p.v;
  const Matrix xtu = xe.transpose() * p.u;
  Matrix m = p.u.transpose() * xv;
  Matrix up = xv - p.u * m;
  Matrix vp = xtu - p.v * m.transpose();
  return {std::move(m), std::move(up), std::move(vp)};
}

/// Re-imposes the orthogonality constraints of a tangent triple.
template <typename Scalar>
TangentVector<Scalar> clean_tangent(const FixedRankPoint<Scalar>& p, const TangentVector<Scalar>& t) {
  return {t.m_core, t.u_p - p.u * (p.u.transpose() * t.u_p), t.v_p - p.v * (p.v.transpose() * t.v_p)};
}

/// (I - UU^T) X (I - VV^T)
template <typename Scalar, typename Derived>
typename FixedRankPoint<Scalar>::Matrix normal_project(const FixedRankPoint<Scalar>& p,
                                                       const Eigen::MatrixBase<Derived>& x) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  const Matrix xe = x;
  Matrix y = xe - p.u * (p.u.transpose() * xe);
  return y - (y * p.v) * p.v.transpose();
}

template <typename Scalar>
Scalar tangent_norm(const TangentVector<Scalar>& t) {
  using std::sqrt;
  return sqrt(t.m_core.squaredNorm() + t.u_p.squaredNorm() + t.v_p.squaredNorm());
}

/// Rank-R truncated SVD of B + Delta, computed through thin QR factors of
/// [U U_p] and [V V_p] so the cost is linear in K and M.
template <typename Scalar>
FixedRankPoint<Scalar> retract(const FixedRankPoint<Scalar>& p, const TangentVector<Scalar>& t) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  const Eigen::Index k = p.rows(), m = p.cols(), r = p.rank();
  Matrix left(k, 2 * r), right(m, 2 * r);
  left << p.u, t.u_p;
  right << p.v, t.v_p;
  Eigen::HouseholderQR<Matrix> ql(left), qr(right);
  const Eigen::Index kl = std::min(k, 2 * r), kr = std::min(m, 2 * r);
  const Matrix qu = ql.householderQ() * Matrix::Identity(k, kl);
  const Matrix qv = qr.householderQ() * Matrix::Identity(m, kr);
  const Matrix ru = ql.matrixQR().topRows(kl).template triangularView<Eigen::Upper>();
  const Matrix rv = qr.matrixQR().topRows(kr).template triangularView<Eigen::Upper>();
  Matrix core = Matrix::Zero(2 * r, 2 * r);
  core.topLeftCorner(r, r) = Matrix(p.d.asDiagonal()) + t.m_core;
  core.topRightCorner(r, r).setIdentity();
  core.bottomLeftCorner(r, r).setIdentity();
  const Matrix small = ru * core * rv.transpose();
  FixedRankPoint<Scalar> inner = FixedRankPoint<Scalar>::from_dense(small, r);
  return {qu * inner.u, inner.d, qv * inner.v};
}

/// II(D1, D2) = P_perp(D1 B^+ D2 + D2 B^+ D1), returned densely.
template <typename Scalar>
typename FixedRankPoint<Scalar>::Matrix second_fundamental_form(const FixedRankPoint<Scalar>& p,
                                                                const TangentVector<Scalar>& a,
                                                                const TangentVector<Scalar>& b) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  const Matrix bp = p.pinv();
  const Matrix da = to_dense(p, a), db = to_dense(p, b);
  return normal_project(p, Matrix(da * bp * db + db * bp * da));
}

/// W_N(D) = N D^T (B^+)^T + (B^+)^T D^T N for a normal vector N.
template <typename Scalar, typename Derived>
typename FixedRankPoint<Scalar>::Matrix weingarten(const FixedRankPoint<Scalar>& p,
                                                   const Eigen::MatrixBase<Derived>& normal,
                                                   const TangentVector<Scalar>& t) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  const Matrix bpt = p.pinv().transpose();
  const Matrix dt = to_dense(p, t).transpose();
  return normal * dt * bpt + bpt * dt * normal;
}

/// Gaussian entries in (m, U_p, V_p), projected onto the constraints.
template <typename Scalar>
TangentVector<Scalar> random_tangent(const FixedRankPoint<Scalar>& p, Rng& rng) {
  const Eigen::Index r = p.rank();
  TangentVector<Scalar> t{standard_normal(r, r, rng).template cast<Scalar>(),
                          standard_normal(p.rows(), r, rng).template cast<Scalar>(),
                          standard_normal(p.cols(), r, rng).template cast<Scalar>()};
  return clean_tangent(p, t);
}

/// Random point with prescribed singular values.
template <typename Scalar>
FixedRankPoint<Scalar> random_point(Eigen::Index k, Eigen::Index m,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& d, Rng& rng) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  const Eigen::Index r = d.size();
  require(r >= 1 && r <= std::min(k, m), "random_point: rank out of range");
  Eigen::HouseholderQR<Matrix> a(standard_normal(k, r, rng).template cast<Scalar>());
  Eigen::HouseholderQR<Matrix> b(standard_normal(m, r, rng).template cast<Scalar>());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ds = d;
  std::sort(ds.data(), ds.data() + r, std::greater<Scalar>());
  return {a.householderQ() * Matrix::Identity(k, r), ds, b.householderQ() * Matrix::Identity(m, r)};
}

/// Integrates gamma'' = II_gamma(gamma', gamma') with classical RK4 in the
/// ambient space. After each step the position is truncated back to rank R
/// and the velocity re-projected onto the new tangent space.
template <typename Scalar>
FixedRankPoint<Scalar> geodesic_integrate(const FixedRankPoint<Scalar>& p, const TangentVector<Scalar>& t,
                                          Scalar t_end, int n_steps,
                                          std::vector<Scalar>* speeds = nullptr) {
  using Matrix = typename FixedRankPoint<Scalar>::Matrix;
  require(n_steps >= 1, "geodesic_integrate: need at least one step");
  const Eigen::Index r = p.rank();
  FixedRankPoint<Scalar> pt = p;
  Matrix vel = to_dense(p, t);
  if (speeds) speeds->assign(1, vel.norm());
  if (t_end == Scalar(0)) return p;
  const Scalar h = t_end / Scalar(n_steps);
  auto accel = [r](const Matrix& x, const Matrix& v) {
    const FixedRankPoint<Scalar> q = FixedRankPoint<Scalar>::from_dense(x, r);
    const TangentVector<Scalar> vt = project_tangent(q, v);
    return second_fundamental_form(q, vt, vt);
  };
  for (int s = 0; s < n_steps; ++s) {
    const Matrix x0 = pt.dense();
    const Matrix k1x = vel, k1v = accel(x0, vel);
    const Matrix k2x = vel + Scalar(0.5) * h * k1v;
    const Matrix k2v = accel(x0 + Scalar(0.5) * h * k1x, k2x);
    const Matrix k3x = vel + Scalar(0.5) * h * k2v;
    const Matrix k3v = accel(x0 + Scalar(0.5) * h * k2x, k3x);
    const Matrix k4x = vel + h * k3v;
    const Matrix k4v = accel(x0 + h * k3x, k4x);
    const Matrix x1 = x0 + h / Scalar(6) * (k1x + Scalar(2) * k2x + Scalar(2) * k3x + k4x);
    const Matrix v1 = vel + h / Scalar(6) * (k1v + Scalar(2) * k2v + Scalar(2) * k3v + k4v);
    pt = FixedRankPoint<Scalar>::from_dense(x1, r);
    vel = to_dense(pt, project_tangent(pt, v1));
    if (speeds) speeds->push_back(vel.norm());
  }
  return pt;
}

template <typename Scalar>
Scalar curvature_ratio(const FixedRankPoint<Scalar>& p, const PenaltySpec<Scalar>& spec,
                       const TangentVector<Scalar>& t) {
  const Scalar qd = q_norm(spec, to_dense(p, t));
  if (qd == Scalar(0)) return Scalar(0);
  return q_norm(spec, second_fundamental_form(p, t, t)) / (qd * qd);
}

/// Largest ratio Q(II(D,D)) / Q(D)^2 over random tangent directions.
template <typename Scalar>
Scalar curvature_bound_probe(const FixedRankPoint<Scalar>& p, const PenaltySpec<Scalar>& spec, int n_samples,
                             Rng& rng) {
  require(n_samples >= 1, "curvature_bound_probe: need at least one sample");
  Scalar best(0);
  for (int i = 0; i < n_samples; ++i) {
    const TangentVector<Scalar> t = random_tangent(p, rng);
    best = std::max(best, curvature_ratio(p, spec, t));
  }
  return best;
}

}  // namespace mtfr
