#include "mtfr/selftest.hpp"

#include "mtfr/estimators.hpp"
#include "mtfr/fixed_rank.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/penalty.hpp"
#include "mtfr/simdiag.hpp"
#include "mtfr/simgen.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

namespace mtfr {

namespace {

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

int run_selftest(std::ostream& os) {
  std::vector<Check> checks;

  checks.push_back({"spline partition of unity", [](std::string& why) {
                      const SplineBasis b = SplineBasis::uniform(12, 4);
                      double worst = 0.0;
                      for (double t = 0.0; t <= 1.0; t += 0.01) worst = std::max(worst, std::abs(b.eval(t).sum() - 1.0));
                      why = "max |sum phi - 1| = " + fmt(worst);
                      return worst < 1e-12;
                    }});

  checks.push_back({"simultaneous diagonalization", [](std::string& why) {
                      const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(12, 4), CovKernel::brownian(), 2);
                      const Eigen::MatrixXd c = population_covariance(sys, CovKernel::brownian());
                      const GramPair gp = gram_matrices(sys.basis, 2);
                      const double dc = (c - sys.sigma_pattern).cwiseAbs().maxCoeff();
                      const double dr = (gp.rough - Eigen::MatrixXd(sys.gamma.asDiagonal())).cwiseAbs().maxCoeff() /
                                        std::max(1.0, sys.gamma.maxCoeff());
                      why = "covariance dev " + fmt(dc) + ", roughness dev " + fmt(dr);
                      return dc < 1e-6 && dr < 1e-8;
                    }});

  checks.push_back({"penalty Kronecker identity", [](std::string& why) {
                      Rng rng(3);
                      const int k = 5, m = 4;
                      Eigen::MatrixXd a = standard_normal(k, k, rng), c = standard_normal(m, m, rng);
                      PenaltySpec<double> spec(k, m);
                      spec.add(0.7, a * a.transpose(), c * c.transpose());
                      const Eigen::MatrixXd b = standard_normal(k, m, rng);
                      const Eigen::Map<const Eigen::VectorXd> v(b.data(), k * m);
                      const double lhs = q_norm(spec, b) * q_norm(spec, b);
                      const double rhs = v.dot(q_norm_matrix(spec) * v);
                      why = "relative gap " + fmt(rel(lhs, rhs));
                      return rel(lhs, rhs) < 1e-10;
                    }});

  checks.push_back({"fixed-rank Weingarten adjoint", [](std::string& why) {
                      Rng rng(5);
                      Eigen::VectorXd d(2);
                      d << 2.0, 0.5;
                      const auto p = random_point<double>(7, 6, d, rng);
                      const auto t1 = random_tangent(p, rng), t2 = random_tangent(p, rng);
                      const Eigen::MatrixXd nrm = normal_project(p, standard_normal(7, 6, rng));
                      const double lhs = weingarten(p, nrm, t1).cwiseProduct(to_dense(p, t2)).sum();
                      const double rhs = nrm.cwiseProduct(second_fundamental_form(p, t1, t2)).sum();
                      why = "relative gap " + fmt(rel(lhs, rhs));
                      return rel(lhs, rhs) < 1e-10;
                    }});

  checks.push_back({"graph Laplacian rows sum to zero", [](std::string& why) {
                      const AuxiliarySample s = sample_manifold({ManifoldKind::sphere, 2}, 200, 7);
                      const Laplacian lap = build_laplacian(s, 0.5);
                      const double worst = lap.omega.rowwise().sum().cwiseAbs().maxCoeff();
                      why = "max row sum " + fmt(worst);
                      return worst < 1e-10 * std::max(1.0, lap.omega.cwiseAbs().maxCoeff());
                    }});

  checks.push_back({"pooled fit stationarity", [](std::string& why) {
                      const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(10, 4), CovKernel::brownian(), 2);
                      Scenario scn = make_scenario(Preset::single_task_smooth, {{"m", 3}, {"n", 80}});
                      const Generated g = generate(scn, sys, 11);
                      const FitResult f = fit_pooled(g.data, sys, 1e-4);
                      why = "gradient norm " + fmt(f.grad_norm);
                      return f.grad_norm < 1e-8;
                    }});

  int failed = 0;
  for (const auto& c : checks) {
    std::string why;
    bool ok = false;
    try {
      ok = c.run(why);
    } catch (const std::exception& e) {
      why = std::string("threw: ") + e.what();
    }
    os << (ok ? "[PASS] " : "[FAIL] ") << c.name << " (" << why << ")\n";
    failed += ok ? 0 : 1;
  }
  return failed;
}

}  // namespace mtfr
