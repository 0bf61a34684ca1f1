#pragma once

#include "mtfr/quadrature.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace mtfr {

enum class ManifoldKind { sphere, torus, euclidean_cube };

/// Intrinsic dimension mu and embedding: sphere S^mu in R^{mu+1}; flat torus
/// (S^1)^mu in R^{2 mu}; cube [0,1]^mu.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::sphere;
  int mu = 2;
  int ambient_dim() const;
  std::string name() const;
};

ManifoldSpec parse_manifold(const std::string& kind, int mu);

struct AuxiliarySample {
  Eigen::MatrixXd points;  ///< M x s, one task covariate per row
  ManifoldSpec manifold;
  int intrinsic_dim() const { return manifold.mu; }
};

/// Uniform draws on the manifold; deterministic given seed. Throws when M < 2.
AuxiliarySample sample_manifold(const ManifoldSpec& manifold, int m, std::uint64_t seed);

enum class GraphKernel { exp_trunc, quartic };

GraphKernel parse_graph_kernel(const std::string& name);

/// Unnormalised profile g(u) on [0,1] (zero outside).
double graph_kernel_profile(GraphKernel kind, double u);

/// Normalisation constant c with int_{R^s} c g(|x|) dx = 1, and
/// sigma_G = int_{R^s} x_1^2 c g(|x|) dx, both by quadrature in dimension s.
struct KernelConstants {
  double normaliser = 0.0;
  double sigma_g = 0.0;
};
KernelConstants graph_kernel_constants(GraphKernel kind, int ambient_dim);

struct Laplacian {
  Eigen::MatrixXd weights;  ///< W, symmetric nonnegative, self-weights kept
  Eigen::VectorXd degree;
  Eigen::MatrixXd omega;    ///< D - W
  double bandwidth = 0.0;   ///< NaN when built from an external W
  double sigma_g = 0.0;
  GraphKernel kernel = GraphKernel::exp_trunc;
  int components = 1;

  Eigen::Index size() const { return omega.rows(); }
};

/// Laplacian from a symmetric nonnegative weight matrix.
Laplacian laplacian_from_weights(Eigen::MatrixXd weights);

/// w_{vv'} = 2 / (sigma_G h^{mu+2} M) * G(|s_v - s_v'| / h), Omega = D - W.
/// Throws for h <= 0; warns on stderr when the graph falls apart into more
/// than M/2 connected components.
Laplacian build_laplacian(const AuxiliarySample& sample, double h, GraphKernel kernel = GraphKernel::exp_trunc);

/// h = scale * (log M)^{zeta_mu + 0.1} / M^{1/mu}; zeta_2 = 3/4, zeta_mu = 1/mu for mu >= 3.
double default_bandwidth(int m, int mu, double scale = 1.0);

struct SpectralGrowth {
  Eigen::VectorXd eigenvalues;  ///< ascending, all of them
  double slope = 0.0;           ///< log lambda_m vs log m over [m_lo, m_hi], 1-based
  double slope_stderr = 0.0;
};

SpectralGrowth spectral_growth(const Laplacian& lap, int m_lo, int m_hi);

/// Discrete Dirichlet form f^T Omega f / M.
double dirichlet_form(const Laplacian& lap, const Eigen::VectorXd& f);

/// Count of connected components of the graph with edges w > 0.
int connected_components(const Eigen::MatrixXd& weights);

/// CSV of an M x M weight matrix (no header). Throws on asymmetric input.
Eigen::MatrixXd read_weights_csv(const std::string& path);
void write_eigen_csv(std::ostream& os, const SpectralGrowth& sg, int m_lo, int m_hi);

}  // namespace mtfr
