#include "mtfr/estimators.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/optim.hpp"
#include "mtfr/simgen.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace mtfr;
using testutil::rel;

namespace {

// Gaussian designs with a planted coefficient matrix.
TaskDataset planted_data(int k, int m, int n, std::uint64_t seed, LossKind loss, InterceptMode mode = InterceptMode::none) {
  Rng rng(seed);
  TaskDataset d;
  d.loss = loss;
  d.intercept_mode = mode;
  const Eigen::MatrixXd b = standard_normal(k, m, rng) * 0.5;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::student_t_distribution<double> t4(4.0);
  for (int j = 0; j < m; ++j) {
    const Eigen::MatrixXd x = standard_normal(n, k, rng);
    const Eigen::VectorXd u = x * b.col(j) + Eigen::VectorXd::Constant(n, mode == InterceptMode::fitted ? 0.3 : 0.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      switch (loss.kind) {
        case LossKind::squared:
          y(i) = u(i) + 0.3 * standard_normal(1, 1, rng)(0, 0);
          break;
        case LossKind::logistic:
          y(i) = unif(rng) < 1.0 / (1.0 + std::exp(-u(i))) ? 1.0 : 0.0;
          break;
        case LossKind::quantile:
          y(i) = u(i) + 0.3 * t4(rng);
          break;
      }
    }
    d.x.push_back(x);
    d.y.push_back(y);
  }
  return d;
}

Eigen::VectorXd ramp_gamma(int k) {
  Eigen::VectorXd g(k);
  for (int i = 0; i < k; ++i) g(i) = i < 2 ? 0.0 : std::pow(double(i - 1), 4);
  return g;
}

double grad_norm_at(const TaskDataset& d, const PenaltySpec<double>& spec, const FitResult& f) {
  Eigen::MatrixXd gb;
  Eigen::VectorXd ga;
  objective(d, spec, f.alpha, f.b, &gb, &ga);
  return std::sqrt(gb.squaredNorm() + (d.intercept_mode == InterceptMode::fitted ? ga.squaredNorm() : 0.0));
}

Eigen::MatrixXd path_laplacian(int m) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) w(i, i + 1) = w(i + 1, i) = 1.0 + 0.1 * i;
  return laplacian_from_weights(w).omega;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("loss values") {
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    const LossEval sq = loss_value_grad(LossKind::make_squared(), y, y);
    CHECK(sq.value == 0.0);
    CHECK(sq.grad.norm() == 0.0);
    Eigen::VectorXd lab(4);
    lab << 0, 1, 1, 0;
    CHECK(loss_value_grad(LossKind::make_logistic(), lab, Eigen::VectorXd::Zero(4)).value == doctest::Approx(std::log(2.0)));
    Eigen::VectorXd yq(2);
    yq << 1.0, -1.0;
    const LossEval q = loss_value_grad(LossKind::make_quantile(0.5, 1e-9), yq, Eigen::VectorXd::Zero(2));
    CHECK(q.value == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(q.exact == doctest::Approx(0.5));
    CHECK_THROWS(LossKind::make_quantile(1.0));
    CHECK_THROWS(parse_loss("hinge"));
  }

  TEST_CASE("loss gradients against central differences") {
    Rng rng(1);
    const Eigen::VectorXd u = standard_normal(30, 1, rng);
    Eigen::VectorXd y = standard_normal(30, 1, rng);
    Eigen::VectorXd lab(30);
    for (int i = 0; i < 30; ++i) lab(i) = y(i) > 0 ? 1.0 : 0.0;
    for (const auto& [loss, resp] : {std::pair{LossKind::make_squared(), y}, std::pair{LossKind::make_logistic(), lab},
                                     std::pair{LossKind::make_quantile(0.3, 0.5), y}}) {
      const LossEval e = loss_value_grad(loss, resp, u);
      Eigen::VectorXd fd(30);
      for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd up = u, um = u;
        up(i) += 1e-6;
        um(i) -= 1e-6;
        fd(i) = (loss_value_grad(loss, resp, up).value - loss_value_grad(loss, resp, um).value) / 2e-6;
      }
      CHECK(rel(e.grad, fd) < 1e-6);
    }
  }

  TEST_CASE("dataset validation") {
    TaskDataset d = planted_data(4, 2, 10, 2, LossKind::make_squared());
    CHECK_NOTHROW(d.validate());
    d.y[1](3) = std::nan("");
    CHECK_THROWS(d.validate());
    TaskDataset l = planted_data(4, 2, 10, 2, LossKind::make_logistic());
    l.y[0](0) = 0.5;
    CHECK_THROWS(l.validate());
    TaskDataset s = planted_data(4, 2, 10, 2, LossKind::make_squared());
    s.x[1] = Eigen::MatrixXd::Zero(9, 4);
    CHECK_THROWS(s.validate());
  }

  TEST_CASE("pooled OLS satisfies the normal equations") {
    const TaskDataset d = planted_data(6, 3, 50, 3, LossKind::make_squared());
    const FitResult f = fit_pooled(d, ramp_gamma(6), 0.0);
    for (int j = 0; j < 3; ++j) CHECK((d.x[j].transpose() * (d.y[j] - d.x[j] * f.b.col(j))).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS(fit_pooled(planted_data(6, 1, 4, 3, LossKind::make_squared()), ramp_gamma(6), 0.0));
  }

  TEST_CASE("large penalty tends to the null-space fit") {
    const TaskDataset d = planted_data(8, 2, 80, 4, LossKind::make_squared());
    const Eigen::VectorXd g = ramp_gamma(8);
    const FitResult f = fit_pooled(d, g, 1e10);
    for (int j = 0; j < 2; ++j) {
      const Eigen::MatrixXd x0 = d.x[j].leftCols(2);
      const Eigen::VectorXd b0 = (x0.transpose() * x0).ldlt().solve(x0.transpose() * d.y[j]);
      CHECK((f.b.col(j).head(2) - b0).norm() < 1e-4 * b0.norm());
      CHECK(f.b.col(j).tail(6).norm() < 1e-6);
    }
    CHECK(penalty_value(pooled_penalty(d, g, 1e10), f.b) < 1e-6);
  }

  TEST_CASE("first-order optimality of the pooled fit") {
    for (LossKind loss : {LossKind::make_squared(), LossKind::make_logistic(), LossKind::make_quantile(0.5, 0.05)}) {
      for (InterceptMode mode : {InterceptMode::none, InterceptMode::fitted}) {
        const TaskDataset d = planted_data(6, 3, 100, 5, loss, mode);
        const Eigen::VectorXd g = ramp_gamma(6);
        const FitResult f = fit_pooled(d, g, 1e-3);
        CHECK(f.converged);
        CHECK(grad_norm_at(d, pooled_penalty(d, g, 1e-3), f) < 1e-7);
        for (std::size_t i = 1; i < f.objective_trace.size(); ++i)
          CHECK(f.objective_trace[i] <= f.objective_trace[i - 1] + 1e-12 * std::abs(f.objective_trace[i - 1]));
      }
    }
  }

  TEST_CASE("intercepts with B fixed at zero") {
    const TaskDataset sq = planted_data(3, 2, 200, 6, LossKind::make_squared(), InterceptMode::fitted);
    const Eigen::VectorXd a = fit_intercepts(sq);
    for (int j = 0; j < 2; ++j) CHECK(a(j) == doctest::Approx(sq.y[j].mean()).epsilon(1e-10));

    const TaskDataset lg = planted_data(3, 2, 200, 7, LossKind::make_logistic(), InterceptMode::fitted);
    const Eigen::VectorXd al = fit_intercepts(lg);
    for (int j = 0; j < 2; ++j) {
      const double p = lg.y[j].mean();
      CHECK(std::abs(al(j) - std::log(p / (1.0 - p))) < 1e-6);
    }

    // Smoothed pinball: root of the mean derivative, located by bisection.
    const double eps = 0.05, w = 0.7;
    const TaskDataset qd = planted_data(3, 2, 300, 8, LossKind::make_quantile(w, eps), InterceptMode::fitted);
    const Eigen::VectorXd aq = fit_intercepts(qd);
    for (int j = 0; j < 2; ++j) {
      auto deriv = [&](double alpha) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < qd.y[j].size(); ++i)
          s += (w - 0.5) + 0.5 * std::clamp((qd.y[j](i) - alpha) / eps, -1.0, 1.0);
        return s;
      };
      double lo = qd.y[j].minCoeff(), hi = qd.y[j].maxCoeff();
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) > 0.0 ? lo : hi) = mid;
      }
      CHECK(std::abs(aq(j) - 0.5 * (lo + hi)) < 1e-6);
    }
  }

  TEST_CASE("quantile restarts agree") {
    const TaskDataset d = planted_data(5, 2, 150, 9, LossKind::make_quantile(0.5, 0.02));
    const Eigen::VectorXd g = ramp_gamma(5);
    const PenaltySpec<double> spec = pooled_penalty(d, g, 1e-3);
    const FitResult ref = fit_pooled(d, g, 1e-3);
    const double obj_ref = objective(d, spec, ref.alpha, ref.b);
    Rng rng(10);
    for (int r = 0; r < 5; ++r) {
      const Eigen::VectorXd b0 = 3.0 * standard_normal(5, 1, rng);
      Objective f = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad) {
        Eigen::MatrixXd full = ref.b;
        full.col(0) = b;
        Eigen::MatrixXd gb;
        const double v = objective(d, spec, ref.alpha, full, grad ? &gb : nullptr);
        if (grad) *grad = gb.col(0);
        return v;
      };
      LbfgsOptions lo;
      lo.grad_tol = 1e-10;
      lo.max_iter = 2000;
      const MinimizeResult mr = lbfgs_minimize(f, b0, lo);
      CHECK(std::abs(mr.value - obj_ref) < 1e-4);
    }
  }

  TEST_CASE("reduced fit with R = M equals the pooled fit") {
    const TaskDataset d = planted_data(6, 3, 60, 11, LossKind::make_squared());
    const Eigen::VectorXd g = ramp_gamma(6);
    const FitResult p = fit_pooled(d, g, 1e-3);
    for (ReducedMethod method : {ReducedMethod::als, ReducedMethod::riemannian}) {
      ReducedOptions ro;
      ro.method = method;
      const FitResult r = fit_reduced(d, g, 1e-3, 3, ro);
      const PenaltySpec<double> spec = pooled_penalty(d, g, 1e-3);
      CHECK(q_norm(spec, Eigen::MatrixXd(r.b - p.b)) < 1e-6);
    }
  }

  TEST_CASE("rank recovery") {
    Scenario s = make_scenario(Preset::reduced_rank, {{"m", 10}, {"n", 200}, {"noise_sd", 0.02}, {"seed", 3}});
    const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(12, 4), s.kernel, 2);
    const Generated gen = generate(s, sys, 14);
    const FitResult pooled = fit_pooled(gen.data, sys, 1e-7);
    const Eigen::JacobiSVD<Eigen::MatrixXd> ps(pooled.b);
    CHECK(ps.singularValues()(2) < 0.05 * ps.singularValues()(1));
    const FitResult red = fit_reduced(gen.data, sys, 1e-7, 2);
    const Eigen::JacobiSVD<Eigen::MatrixXd> rs(red.b);
    CHECK(rs.singularValues()(2) < 1e-10 * rs.singularValues()(1));
    CHECK(reduced_grad_norm(gen.data, sys.gamma, 1e-7, 2, red) < 1e-6 * (1.0 + red.b.norm()));
    CHECK_THROWS(fit_reduced(gen.data, sys, 1e-7, 11));
    CHECK_THROWS(fit_reduced(gen.data, sys, 1e-7, 0));
  }

  TEST_CASE("ALS descent and solver agreement") {
    const TaskDataset d = planted_data(7, 5, 60, 15, LossKind::make_squared());
    const Eigen::VectorXd g = ramp_gamma(7);
    ReducedOptions ro;
    ro.init = ReducedInit::random;
    ro.seed = 4;
    const FitResult als = fit_reduced(d, g, 1e-3, 2, ro);
    for (std::size_t i = 1; i < als.objective_trace.size(); ++i)
      CHECK(als.objective_trace[i] <= als.objective_trace[i - 1] + 1e-12 * std::abs(als.objective_trace[i - 1]));
    ReducedOptions rr;
    rr.method = ReducedMethod::riemannian;
    const FitResult rie = fit_reduced(d, g, 1e-3, 2, rr);
    const FitResult als2 = fit_reduced(d, g, 1e-3, 2);
    CHECK(std::abs(rie.objective - als2.objective) < 1e-5);
    CHECK(reduced_grad_norm(d, g, 1e-3, 2, rie) < 1e-6 * (1.0 + rie.b.norm()));
  }

  TEST_CASE("Riemannian path for non-squared losses") {
    const TaskDataset d = planted_data(5, 4, 120, 16, LossKind::make_logistic());
    const Eigen::VectorXd g = ramp_gamma(5);
    ReducedOptions rr;
    rr.method = ReducedMethod::riemannian;
    const FitResult f = fit_reduced(d, g, 1e-3, 2, rr);
    CHECK(reduced_grad_norm(d, g, 1e-3, 2, f) < 1e-6 * (1.0 + f.b.norm()));
    CHECK_THROWS(fit_reduced(d, g, 1e-3, 2));
  }

  TEST_CASE("graph fit limits and dense oracle") {
    const TaskDataset d = planted_data(6, 5, 40, 17, LossKind::make_squared());
    const Eigen::VectorXd g = ramp_gamma(6);
    const Eigen::MatrixXd omega = path_laplacian(5);
    const FitResult p = fit_pooled(d, g, 1e-3);
    const FitResult g0 = fit_graph(d, g, omega, 1e-3, 0.0);
    CHECK((g0.b - p.b).norm() < 1e-8 * std::max(1.0, p.b.norm()));

    const FitResult gc = fit_graph(d, g, omega, 1e-3, 0.5);
    const Eigen::VectorXd dense = graph_dense_solve(d, g, omega, 1e-3, 0.5);
    CHECK(rel(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(gc.b.data(), 30)), dense) < 1e-8);
    CHECK(grad_norm_at(d, graph_penalty(d, g, omega, 1e-3, 0.5), gc) < 1e-6 * (1.0 + gc.b.norm()));

    const FitResult big = fit_graph(d, g, omega, 1e-3, 1e8);
    double spread = 0.0;
    for (int j = 1; j < 5; ++j) spread = std::max(spread, (big.b.col(j) - big.b.col(0)).norm());
    CHECK(spread < 1e-4 * big.b.norm());
  }

  TEST_CASE("graph fit for other losses") {
    const TaskDataset d = planted_data(5, 4, 80, 18, LossKind::make_logistic(), InterceptMode::fitted);
    const Eigen::VectorXd g = ramp_gamma(5);
    const Eigen::MatrixXd omega = path_laplacian(4);
    const FitResult f = fit_graph(d, g, omega, 1e-3, 0.2);
    CHECK(grad_norm_at(d, graph_penalty(d, g, omega, 1e-3, 0.2), f) < 1e-6 * (1.0 + f.b.norm()));
  }

  TEST_CASE("objective dominance") {
    const TaskDataset d = planted_data(6, 4, 50, 19, LossKind::make_squared());
    const Eigen::VectorXd g = ramp_gamma(6);
    const double pooled = fit_pooled(d, g, 1e-3).objective;
    const double red = fit_reduced(d, g, 1e-3, 1).objective;
    const double free = fit_pooled(d, g, 0.0).objective;
    CHECK(red >= pooled - 1e-12);
    CHECK(pooled >= free - 1e-12);
  }
}
