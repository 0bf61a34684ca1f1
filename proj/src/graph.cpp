#include "mtfr/graph.hpp"

#include "mtfr/errors.hpp"
#include "mtfr/random.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

namespace mtfr {

int ManifoldSpec::ambient_dim() const {
  switch (kind) {
    case ManifoldKind::sphere:
      return mu + 1;
    case ManifoldKind::torus:
      return 2 * mu;
    case ManifoldKind::euclidean_cube:
      return mu;
  }
  return mu;
}

std::string ManifoldSpec::name() const {
  switch (kind) {
    case ManifoldKind::sphere:
      return "sphere";
    case ManifoldKind::torus:
      return "torus";
    case ManifoldKind::euclidean_cube:
      return "euclidean_cube";
  }
  return "unknown";
}

ManifoldSpec parse_manifold(const std::string& kind, int mu) {
  require(mu >= 1, "manifold: intrinsic dimension must be >= 1");
  if (kind == "sphere") return {ManifoldKind::sphere, mu};
  if (kind == "torus") return {ManifoldKind::torus, mu};
  if (kind == "euclidean_cube" || kind == "cube") return {ManifoldKind::euclidean_cube, mu};
  throw std::invalid_argument("unknown manifold '" + kind + "'");
}

AuxiliarySample sample_manifold(const ManifoldSpec& manifold, int m, std::uint64_t seed) {
  require(m >= 2, "sample_manifold: need M >= 2");
  Rng rng(seed);
  AuxiliarySample out;
  out.manifold = manifold;
  const int s = manifold.ambient_dim();
  switch (manifold.kind) {
    case ManifoldKind::sphere: {
      out.points = standard_normal(m, s, rng);
      out.points.rowwise().normalize();
      break;
    }
    case ManifoldKind::torus: {
      std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
      out.points.resize(m, s);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < manifold.mu; ++j) {
          const double th = u(rng);
          out.points(i, 2 * j) = std::cos(th);
          out.points(i, 2 * j + 1) = std::sin(th);
        }
      break;
    }
    case ManifoldKind::euclidean_cube: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      out.points.resize(m, s);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < s; ++j) out.points(i, j) = u(rng);
      break;
    }
  }
  return out;
}

GraphKernel parse_graph_kernel(const std::string& name) {
  if (name == "exp_trunc") return GraphKernel::exp_trunc;
  if (name == "quartic") return GraphKernel::quartic;
  throw std::invalid_argument("unknown graph kernel '" + name + "'");
}

double graph_kernel_profile(GraphKernel kind, double u) {
  if (u < 0.0 || u >= 1.0) return 0.0;
  switch (kind) {
    case GraphKernel::exp_trunc:
      return std::exp(-u);
    case GraphKernel::quartic: {
      const double a = 1.0 - u * u;
      return a * a;
    }
  }
  return 0.0;
}

KernelConstants graph_kernel_constants(GraphKernel kind, int ambient_dim) {
  require(ambient_dim >= 1, "graph_kernel_constants: dimension must be >= 1");
  const double s = ambient_dim;
  const double sphere_area = 2.0 * std::pow(std::numbers::pi, s / 2.0) / std::tgamma(s / 2.0);
  auto [r, w] = gauss_legendre(64, 0.0, 1.0);
  double mass = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double g = graph_kernel_profile(kind, r(i));
    mass += w(i) * g * std::pow(r(i), s - 1.0);
    second += w(i) * g * std::pow(r(i), s + 1.0);
  }
  KernelConstants kc;
  kc.normaliser = 1.0 / (sphere_area * mass);
  kc.sigma_g = kc.normaliser * sphere_area * second / s;
  return kc;
}

int connected_components(const Eigen::MatrixXd& weights) {
  const Eigen::Index m = weights.rows();
  std::vector<int> label(m, -1);
  int comps = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index start = 0; start < m; ++start) {
    if (label[start] >= 0) continue;
    label[start] = comps;
    stack.push_back(start);
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index u = 0; u < m; ++u)
        if (label[u] < 0 && weights(v, u) > 0.0) {
          label[u] = comps;
          stack.push_back(u);
        }
    }
    ++comps;
  }
  return comps;
}

Laplacian laplacian_from_weights(Eigen::MatrixXd weights) {
  require(weights.rows() == weights.cols(), "Laplacian: weight matrix must be square");
  const double scale = std::max(1.0, weights.cwiseAbs().maxCoeff());
  require((weights - weights.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "Laplacian: weight matrix must be symmetric");
  require((weights.array() >= 0.0).all(), "Laplacian: weights must be nonnegative");
  Laplacian lap;
  lap.weights = std::move(weights);
  lap.degree = lap.weights.rowwise().sum();
  lap.omega = -lap.weights;
  lap.omega.diagonal() += lap.degree;
  lap.bandwidth = NAN;
  lap.components = connected_components(lap.weights);
  return lap;
}

Laplacian build_laplacian(const AuxiliarySample& sample, double h, GraphKernel kernel) {
  require(h > 0.0, "build_laplacian: bandwidth must be positive");
  const Eigen::Index m = sample.points.rows();
  const int mu = sample.intrinsic_dim();
  const KernelConstants kc = graph_kernel_constants(kernel, int(sample.points.cols()));
  const double scale = 2.0 / (kc.sigma_g * std::pow(h, mu + 2.0) * double(m));
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j; i < m; ++i) {
      const double dist = (sample.points.row(i) - sample.points.row(j)).norm();
      w(i, j) = w(j, i) = scale * kc.normaliser * graph_kernel_profile(kernel, dist / h);
    }
  }
  Laplacian lap = laplacian_from_weights(std::move(w));
  lap.bandwidth = h;
  lap.sigma_g = kc.sigma_g;
  lap.kernel = kernel;
  if (lap.components > m / 2)
    std::cerr << "warning: build_laplacian: bandwidth " << h << " leaves " << lap.components
              << " connected components among " << m << " vertices\n";
  return lap;
}

double default_bandwidth(int m, int mu, double scale) {
  require(m >= 2 && mu >= 1, "default_bandwidth: need M >= 2 and mu >= 1");
  const double zeta = mu == 2 ? 0.75 : 1.0 / mu;
  return scale * std::pow(std::log(double(m)), zeta + 0.1) / std::pow(double(m), 1.0 / mu);
}

SpectralGrowth spectral_growth(const Laplacian& lap, int m_lo, int m_hi) {
  const Eigen::Index m = lap.size();
  require(m_lo >= 5, "spectral_growth: m_lo must be >= 5 (the four smallest are excluded)");
  require(m_hi <= m && m_hi > m_lo, "spectral_growth: need m_lo < m_hi <= M");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.omega, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_growth: eigensolver failed");
  SpectralGrowth sg;
  sg.eigenvalues = es.eigenvalues();
  const int n = m_hi - m_lo + 1;
  Eigen::VectorXd idx(n);
  for (int i = 0; i < n; ++i) idx(i) = m_lo + i;
  const Eigen::VectorXd lam = sg.eigenvalues.segment(m_lo - 1, n);
  const LineFit fit = fit_loglog(idx, lam);
  sg.slope = fit.slope;
  sg.slope_stderr = fit.slope_stderr;
  return sg;
}

double dirichlet_form(const Laplacian& lap, const Eigen::VectorXd& f) {
  check_dims(f.size() == lap.size(), "dirichlet_form: vector length differs from M");
  return f.dot(lap.omega * f) / double(lap.size());
}

Eigen::MatrixXd read_weights_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const Eigen::Index m = Eigen::Index(rows.size());
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    require(Eigen::Index(rows[i].size()) == m, "weight file '" + path + "' is not square");
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = rows[i][j];
  }
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  require((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "weight file '" + path + "' is not symmetric");
  return w;
}

void write_eigen_csv(std::ostream& os, const SpectralGrowth& sg, int m_lo, int m_hi) {
  os << "# slope=" << sg.slope << " stderr=" << sg.slope_stderr << " window=[" << m_lo << ","
     << m_hi << "]\n";
  os << "m,lambda\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < sg.eigenvalues.size(); ++i)
    os << (i + 1) << "," << sg.eigenvalues(i) << "\n";
}

}  // namespace mtfr
