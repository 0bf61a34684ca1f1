#include "mtfr/processes.hpp"

#include "mtfr/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mtfr {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// int_0^1 (s-u)_+^{q-1} (t-u)_+^{q-1} du / ((q-1)!)^2
double iterated_kernel(int q, double s, double t) {
  const double m = std::min(s, t);
  const int a = q - 1;
  double acc = 0.0;
  for (int i = 0; i <= a; ++i) {
    for (int j = 0; j <= a; ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      acc += binomial(a, i) * binomial(a, j) * std::pow(s, a - i) * std::pow(t, a - j) * sign *
             std::pow(m, i + j + 1) / (i + j + 1);
    }
  }
  const double f = factorial(a);
  return acc / (f * f);
}

}  // namespace

CovKernel CovKernel::brownian() { return {KernelKind::brownian, {}, 1}; }

CovKernel CovKernel::brownian_shifted(double a, double b) {
  require(a > 0.0 && b > 0.0, "brownian_shifted: a and b must be positive");
  return {KernelKind::brownian_shifted, {a, b}, 1};
}

CovKernel CovKernel::ornstein_uhlenbeck(double c1, double c2) {
  require(c1 > 0.0 && c2 > 0.0, "ornstein_uhlenbeck: c1 and c2 must be positive");
  return {KernelKind::ornstein_uhlenbeck, {c1, c2}, 1};
}

CovKernel CovKernel::brownian_bridge() { return {KernelKind::brownian_bridge, {}, 1}; }

CovKernel CovKernel::iterated_brownian(int q) {
  require(q >= 1, "iterated_brownian: q must be >= 1");
  return {KernelKind::iterated_brownian, {}, q};
}

CovKernel CovKernel::sobolev(int q, std::vector<double> c) {
  require(q >= 1, "sobolev: q must be >= 1");
  if (c.empty()) c.assign(q + 1, 1.0);
  require(int(c.size()) == q + 1, "sobolev: need q+1 constants c_0..c_q");
  for (double ci : c) require(ci > 0.0, "sobolev: constants must be positive");
  return {KernelKind::sobolev, std::move(c), q};
}

double CovKernel::operator()(double s, double t) const {
  switch (kind) {
    case KernelKind::brownian:
      return std::min(s, t);
    case KernelKind::brownian_shifted:
      return params[0] + params[1] * std::min(s, t);
    case KernelKind::ornstein_uhlenbeck:
      return params[0] * std::exp(-params[1] * std::abs(s - t));
    case KernelKind::brownian_bridge:
      return std::min(s, t) - s * t;
    case KernelKind::iterated_brownian:
      return iterated_kernel(order_q, s, t);
    case KernelKind::sobolev: {
      double acc = 0.0;
      for (int l = 0; l < order_q; ++l) {
        const double f = factorial(l);
        acc += params[l] * std::pow(s, l) * std::pow(t, l) / (f * f);
      }
      return acc + params[order_q] * iterated_kernel(order_q, s, t);
    }
  }
  return 0.0;
}

int CovKernel::eigen_decay_q() const { return order_q; }

int CovKernel::null_dim_p() const {
  switch (kind) {
    case KernelKind::brownian:
      return 1;
    case KernelKind::brownian_bridge:
      return 2;
    case KernelKind::iterated_brownian:
      return order_q;
    default:
      return 0;
  }
}

std::string CovKernel::name() const {
  switch (kind) {
    case KernelKind::brownian:
      return "brownian";
    case KernelKind::brownian_shifted:
      return "brownian_shifted";
    case KernelKind::ornstein_uhlenbeck:
      return "ornstein_uhlenbeck";
    case KernelKind::brownian_bridge:
      return "brownian_bridge";
    case KernelKind::iterated_brownian:
      return "iterated_brownian:" + std::to_string(order_q);
    case KernelKind::sobolev:
      return "sobolev:" + std::to_string(order_q);
  }
  return "unknown";
}

Eigen::MatrixXd CovKernel::gram(const Eigen::VectorXd& t) const {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) c(i, j) = c(j, i) = (*this)(t(i), t(j));
  return c;
}

CovKernel parse_kernel(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const int q = colon == std::string::npos ? 1 : std::stoi(spec.substr(colon + 1));
  if (head == "brownian") return CovKernel::brownian();
  if (head == "brownian_shifted") return CovKernel::brownian_shifted(1.0, 1.0);
  if (head == "ou" || head == "ornstein_uhlenbeck") return CovKernel::ornstein_uhlenbeck(1.0, 1.0);
  if (head == "bridge" || head == "brownian_bridge") return CovKernel::brownian_bridge();
  if (head == "iterated" || head == "iterated_brownian") return CovKernel::iterated_brownian(q);
  if (head == "sobolev") return CovKernel::sobolev(q);
  throw std::invalid_argument("unknown kernel '" + spec + "'");
}

Eigen::VectorXd kernel_eigs(const CovKernel& kernel, int n_grid, int n_eigs) {
  require(n_grid >= 32, "kernel_eigs: n_grid must be >= 32");
  require(n_eigs >= 1 && n_eigs <= n_grid, "kernel_eigs: n_eigs must lie in [1, n_grid]");
  const Grid g = Grid::midpoint(n_grid);
  const Eigen::MatrixXd op = kernel.gram(g.t) / double(n_grid);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("kernel_eigs: eigensolver failed");
  return es.eigenvalues().reverse().head(n_eigs);
}

GPSampler::GPSampler(CovKernel kernel, Grid grid, std::uint64_t seed)
    : kernel_(std::move(kernel)), grid_(std::move(grid)), seed_(seed), rng_(seed) {
  cov_ = kernel_.gram(grid_.t);
  const Eigen::Index n = cov_.rows();
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < n; ++i)
    if (cov_(i, i) > 0.0) live.push_back(i);
  const Eigen::Index m = Eigen::Index(live.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) sub(i, j) = cov_(live[i], live[j]);

  const double scale = m > 0 ? sub.trace() / double(m) : 1.0;
  const double ladder[] = {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  bool ok = false;
  Eigen::MatrixXd lsub;
  for (double rel : ladder) {
    Eigen::MatrixXd a = sub;
    a.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      lsub = llt.matrixL();
      jitter_ = rel * scale;
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalError("GPSampler: Cholesky failed for kernel " + kernel_.name() +
                                " even with maximal jitter");
  factor_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j; i < m; ++i) factor_(live[i], live[j]) = lsub(i, j);
}

Eigen::MatrixXd GPSampler::sample_paths(int n) { return sample_paths(n, rng_); }

Eigen::MatrixXd GPSampler::sample_paths(int n, Rng& rng) const {
  require(n >= 1, "sample_paths: n must be >= 1");
  const Eigen::MatrixXd z = standard_normal(n, factor_.rows(), rng);
  return z * factor_.transpose();
}

}  // namespace mtfr
