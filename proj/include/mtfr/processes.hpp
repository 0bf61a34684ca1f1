#pragma once

#include "mtfr/quadrature.hpp"
#include "mtfr/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace mtfr {

enum class KernelKind {
  brownian,
  brownian_shifted,
  ornstein_uhlenbeck,
  brownian_bridge,
  iterated_brownian,
  sobolev,
};

/// Covariance function of a functional covariate on [0,1].
///
/// Each kind carries a declared eigen-decay exponent q (Nystrom eigenvalues
/// decay like j^{-2q}) and a declared null-space dimension p.
struct CovKernel {
  KernelKind kind = KernelKind::brownian;
  /// brownian_shifted: (a, b); ornstein_uhlenbeck: (c1, c2);
  /// sobolev: (c_0, ..., c_q). Unused otherwise.
  std::vector<double> params;
  int order_q = 1;

  static CovKernel brownian();
  static CovKernel brownian_shifted(double a, double b);
  static CovKernel ornstein_uhlenbeck(double c1, double c2);
  static CovKernel brownian_bridge();
  static CovKernel iterated_brownian(int q);
  /// Sobolev reproducing kernel of order q; all constants default to 1.
  static CovKernel sobolev(int q, std::vector<double> c = {});

  double operator()(double s, double t) const;

  int eigen_decay_q() const;
  int null_dim_p() const;
  std::string name() const;

  /// Grid covariance C(t_i, t_j).
  Eigen::MatrixXd gram(const Eigen::VectorXd& t) const;
};

/// Parse "brownian", "bridge", "ou", "iterated:2", "sobolev:1", ...
CovKernel parse_kernel(const std::string& spec);

/// Nystrom eigenvalues of the integral operator on a midpoint grid,
/// decreasing. Throws when n_grid < 32 or n_eigs > n_grid.
Eigen::VectorXd kernel_eigs(const CovKernel& kernel, int n_grid, int n_eigs);

/// Zero-mean Gaussian paths with a kernel's covariance on a fixed grid.
///
/// Grid points with exactly zero variance (e.g. t=0 for Brownian motion) are
/// pinned to zero; the remaining block is factored by Cholesky with a jitter
/// ladder from 0 up to 1e-8 * trace / n.
class GPSampler {
 public:
  GPSampler(CovKernel kernel, Grid grid, std::uint64_t seed);
  /// Default 512-point uniform grid with trapezoid weights.
  GPSampler(CovKernel kernel, std::uint64_t seed) : GPSampler(std::move(kernel), Grid::uniform(512), seed) {}

  const CovKernel& kernel() const { return kernel_; }
  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// Lower-triangular factor L with L L^T ~= covariance().
  const Eigen::MatrixXd& factor() const { return factor_; }
  double jitter() const { return jitter_; }
  std::uint64_t seed() const { return seed_; }

  /// n x G matrix of paths drawn from the sampler's own generator.
  Eigen::MatrixXd sample_paths(int n);
  /// Same, from an external generator.
  Eigen::MatrixXd sample_paths(int n, Rng& rng) const;

 private:
  CovKernel kernel_;
  Grid grid_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
  std::uint64_t seed_;
  Rng rng_;
};

}  // namespace mtfr
