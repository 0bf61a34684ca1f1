#include "mtfr/quadrature.hpp"

#include "mtfr/errors.hpp"

#include <cmath>
#include <numbers>

namespace mtfr {

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need at least one node");
  Eigen::VectorXd x(n), w(n);
  if (n == 1) {
    x(0) = 0.0;
    w(0) = 2.0;
    return {x, w};
  }
  // Newton iteration on P_n; roots are symmetric so only half are computed.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = 2.0 / ((1.0 - z * z) * dp * dp);
    w(n - 1 - i) = w(i);
  }
  return {x, w};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b) {
  auto [x, w] = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  return {(x.array() * half + mid).matrix(), (w * half).eval()};
}

Grid Grid::uniform(int n) {
  require(n >= 2, "Grid::uniform: need at least two points");
  Grid g;
  g.t = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  g.w = Eigen::VectorXd::Constant(n, 1.0 / (n - 1));
  g.w(0) *= 0.5;
  g.w(n - 1) *= 0.5;
  return g;
}

Grid Grid::midpoint(int n) {
  require(n >= 1, "Grid::midpoint: need at least one point");
  Grid g;
  g.t.resize(n);
  for (int i = 0; i < n; ++i) g.t(i) = (i + 0.5) / n;
  g.w = Eigen::VectorXd::Constant(n, 1.0 / n);
  return g;
}

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_dims(x.size() == y.size(), "fit_line: x and y differ in length");
  const Eigen::Index n = x.size();
  require(n >= 2, "fit_line: need at least two points");
  const double mx = x.mean();
  const double my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const Eigen::ArrayXd dy = y.array() - my;
  const double sxx = (dx * dx).sum();
  require(sxx > 0.0, "fit_line: x values are all equal");
  LineFit f;
  f.slope = (dx * dy).sum() / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    const double rss = ((dy - f.slope * dx).square()).sum();
    f.slope_stderr = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

LineFit fit_loglog(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require((x.array() > 0.0).all() && (y.array() > 0.0).all(),
          "fit_loglog: inputs must be positive");
  return fit_line(x.array().log().matrix(), y.array().log().matrix());
}

}  // namespace mtfr
