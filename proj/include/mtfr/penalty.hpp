#pragma once

#include "mtfr/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace mtfr {

/// One summand eta * tr(B^T Pi1 B Pi2) of a composite quadratic penalty.
template <typename Scalar>
struct PenaltyTerm {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar eta;
  Matrix pi1;  ///< K x K, symmetric PSD
  Matrix pi2;  ///< M x M, symmetric PSD
  bool pi2_identity = false;
};

namespace detail {

template <typename Scalar>
void check_psd(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a, const char* what) {
  using std::abs;
  const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
  if (!((a - a.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-10) * scale))
    throw std::invalid_argument(std::string(what) + " is not symmetric");
  // Diagonal matrices (the common roughness case) skip the eigensolve.
  const bool diagonal = (a.rows() == 1) || (a - Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(
                                                    a.diagonal().asDiagonal()))
                                                       .cwiseAbs()
                                                       .maxCoeff() == Scalar(0);
  Scalar min_eig;
  Scalar max_abs;
  if (diagonal) {
    min_eig = a.diagonal().minCoeff();
    max_abs = a.diagonal().cwiseAbs().maxCoeff();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(
        a, Eigen::EigenvaluesOnly);
    min_eig = es.eigenvalues().minCoeff();
    max_abs = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (min_eig < -Scalar(1e-8) * std::max(Scalar(1), max_abs))
    throw std::invalid_argument(std::string(what) + " is not positive semi-definite");
}

}  // namespace detail

/// P(B) = sum_j eta_j tr(B^T Pi_j1 B Pi_j2). Term order is preserved; by
/// convention term 0 is the roughness term (eta1, Gamma, I).
template <typename Scalar>
class PenaltySpec {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Term = PenaltyTerm<Scalar>;

  PenaltySpec(Eigen::Index k, Eigen::Index m) : k_(k), m_(m) {}

  PenaltySpec& add(Scalar eta, Matrix pi1, Matrix pi2) {
    require(eta >= Scalar(0), "PenaltySpec: eta must be nonnegative");
    check_dims(pi1.rows() == k_ && pi1.cols() == k_, "PenaltySpec: Pi1 must be K x K");
    check_dims(pi2.rows() == m_ && pi2.cols() == m_, "PenaltySpec: Pi2 must be M x M");
    detail::check_psd<Scalar>(pi1, "PenaltySpec: Pi1");
    detail::check_psd<Scalar>(pi2, "PenaltySpec: Pi2");
    const bool ident = pi2.isIdentity(Scalar(0));
    terms_.push_back({eta, std::move(pi1), std::move(pi2), ident});
    return *this;
  }

  Eigen::Index rows() const { return k_; }
  Eigen::Index cols() const { return m_; }
  const std::vector<Term>& terms() const { return terms_; }

  /// Sum_j eta_j Pi_j1 B Pi_j2. Identity Pi2 blocks are detected and skipped.
  template <typename Derived>
  Matrix apply(const Eigen::MatrixBase<Derived>& b) const {
    check(b);
    Matrix out = Matrix::Zero(k_, m_);
    for (const auto& t : terms_) {
      if (t.eta == Scalar(0)) continue;
      Matrix left = t.pi1 * b;
      if (t.pi2_identity)
        out += t.eta * left;
      else
        out.noalias() += t.eta * left * t.pi2;
    }
    return out;
  }

  template <typename Derived>
  void check(const Eigen::MatrixBase<Derived>& b) const {
    check_dims(b.rows() == k_ && b.cols() == m_,
               "penalty: coefficient matrix is " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + ", expected " + std::to_string(k_) + "x" +
                   std::to_string(m_));
  }

 private:
  Eigen::Index k_;
  Eigen::Index m_;
  std::vector<Term> terms_;
};

template <typename Scalar, typename Derived>
Scalar penalty_value(const PenaltySpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& b) {
  spec.check(b);
  Scalar acc(0);
  for (const auto& t : spec.terms()) {
    if (t.eta == Scalar(0)) continue;
    // tr(B^T Pi1 B Pi2) = <Pi1 B, B Pi2>_F
    const auto left = (t.pi1 * b).eval();
    if (t.pi2_identity)
      acc += t.eta * left.cwiseProduct(b).sum();
    else
      acc += t.eta * left.cwiseProduct(b * t.pi2).sum();
  }
  return acc;
}

template <typename Scalar, typename Derived>
typename PenaltySpec<Scalar>::Matrix penalty_gradient(const PenaltySpec<Scalar>& spec,
                                                      const Eigen::MatrixBase<Derived>& b) {
  return Scalar(2) * spec.apply(b);
}

/// (||B||_F^2 + P(B))^{1/2}
template <typename Scalar, typename Derived>
Scalar q_norm(const PenaltySpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& b) {
  using std::sqrt;
  const Scalar p = penalty_value(spec, b);
  return sqrt(b.squaredNorm() + std::max(p, Scalar(0)));
}

/// I + sum_j eta_j Pi_j2 (x) Pi_j1, acting on vec(B). Only for small problems.
template <typename Scalar>
typename PenaltySpec<Scalar>::Matrix q_norm_matrix(const PenaltySpec<Scalar>& spec) {
  using Matrix = typename PenaltySpec<Scalar>::Matrix;
  const Eigen::Index k = spec.rows(), m = spec.cols();
  require(k * m <= 256, "q_norm_matrix: Kronecker form is limited to K*M <= 256");
  Matrix out = Matrix::Identity(k * m, k * m);
  for (const auto& t : spec.terms())
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) out.block(i * k, j * k, k, k) += t.eta * t.pi2(i, j) * t.pi1;
  return out;
}

/// Single roughness term (eta1, diag(gamma), I_M).
template <typename Scalar>
PenaltySpec<Scalar> roughness_spec(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gamma, Scalar eta1,
                                   Eigen::Index m) {
  using Matrix = typename PenaltySpec<Scalar>::Matrix;
  PenaltySpec<Scalar> spec(gamma.size(), m);
  spec.add(eta1, Matrix(gamma.asDiagonal()), Matrix::Identity(m, m));
  return spec;
}

/// Checks Omega is symmetric, PSD and has vanishing row sums.
template <typename Scalar>
void validate_laplacian(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& omega) {
  require(omega.rows() == omega.cols(), "Laplacian must be square");
  const Scalar scale = std::max(Scalar(1), omega.cwiseAbs().maxCoeff());
  require((omega.rowwise().sum().cwiseAbs().array() <= Scalar(1e-10) * scale).all(),
          "Laplacian rows must sum to zero");
  detail::check_psd<Scalar>(omega, "Laplacian");
}

/// Graph-regularized penalty: (eta1, Gamma, I), (eta2, Sigma_hat, Omega),
/// (eta1 eta2, Gamma, Omega).
template <typename Scalar>
PenaltySpec<Scalar> graph_penalty_spec(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gamma,
                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& omega,
                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& sigma_hat,
                                       Scalar eta1, Scalar eta2) {
  using Matrix = typename PenaltySpec<Scalar>::Matrix;
  validate_laplacian<Scalar>(omega);
  const Eigen::Index m = omega.rows();
  const Matrix g = gamma.asDiagonal();
  PenaltySpec<Scalar> spec(gamma.size(), m);
  spec.add(eta1, g, Matrix::Identity(m, m));
  spec.add(eta2, sigma_hat, omega);
  spec.add(eta1 * eta2, g, omega);
  return spec;
}

}  // namespace mtfr
