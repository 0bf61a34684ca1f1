#include "mtfr/quadrature.hpp"
#include "mtfr/spline_basis.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mtfr;
using testutil::rel;

TEST_SUITE("spline_basis") {
  TEST_CASE("construction and knots") {
    const SplineBasis b4 = SplineBasis::uniform(4, 4);
    CHECK(b4.knots().size() == 8);
    CHECK(b4.breakpoints().size() == 2);

    const SplineBasis b10 = SplineBasis::uniform(10, 4);
    REQUIRE(b10.breakpoints().size() == 8);
    for (int j = 1; j <= 6; ++j) CHECK(b10.breakpoints()(j) == doctest::Approx(j / 7.0).epsilon(1e-14));
    CHECK_THROWS(SplineBasis::uniform(3, 4));
    CHECK_THROWS(SplineBasis::uniform(4, 0));
  }

  TEST_CASE("endpoint and Bernstein values") {
    const SplineBasis b = SplineBasis::uniform(10, 4);
    const Eigen::VectorXd v0 = b.eval(0.0);
    CHECK(v0(0) == doctest::Approx(1.0));
    CHECK(v0.tail(9).cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::VectorXd v1 = b.eval(1.0);
    CHECK(v1(9) == doctest::Approx(1.0));

    const Eigen::VectorXd mid = SplineBasis::uniform(4, 4).eval(0.5);
    CHECK(mid(0) == doctest::Approx(0.125));
    CHECK(mid(1) == doctest::Approx(0.375));
    CHECK(mid(2) == doctest::Approx(0.375));
    CHECK(mid(3) == doctest::Approx(0.125));
  }

  TEST_CASE("partition of unity and nonnegativity") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k : {4, 7, 13, 30}) {
      const SplineBasis b = SplineBasis::uniform(k, 4);
      for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = b.eval(u(rng));
        REQUIRE(std::abs(v.sum() - 1.0) < 1e-10);
        REQUIRE(v.minCoeff() >= -1e-15);
      }
    }
  }

  TEST_CASE("domain and derivative order errors") {
    const SplineBasis b = SplineBasis::uniform(8, 4);
    CHECK_THROWS(b.eval(-0.1));
    CHECK_THROWS(b.eval(1.1));
    const auto z = b.evaluate(0.3, 4);
    CHECK(z.identically_zero);
    CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("derivatives match finite differences") {
    const SplineBasis b = SplineBasis::uniform(12, 4);
    for (double t : {0.13, 0.37, 0.5, 0.71, 0.93}) {
      for (int d = 1; d <= 3; ++d) {
        const double h = 1e-6;
        const Eigen::VectorXd fd = (b.eval(t + h, d - 1) - b.eval(t - h, d - 1)) / (2 * h);
        const Eigen::VectorXd an = b.eval(t, d);
        CHECK((fd - an).norm() <= 1e-5 * std::max(1.0, an.norm()));
      }
    }
  }

  TEST_CASE("Gram and roughness matrices") {
    const SplineBasis b = SplineBasis::uniform(10, 4);
    const GramPair g2 = gram_matrices(b, 2);
    CHECK((g2.gram - g2.gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g2.rough - g2.rough.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(g2.gram);
    CHECK(eg.eigenvalues().minCoeff() > 0.0);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(g2.rough);
    const Eigen::VectorXd s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 * s(0) ? 1 : 0;
    CHECK(rank == 8);

    // Higher quadrature order gives the same matrices.
    const GramPair g2b = gram_matrices(b, 2, 6);
    CHECK((g2.gram - g2b.gram).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g2.rough - g2b.rough).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, g2.rough.cwiseAbs().maxCoeff()));
    CHECK_THROWS(gram_matrices(b, 4));
  }

  TEST_CASE("represented constant has zero derivative and zero roughness") {
    const SplineBasis b = SplineBasis::uniform(10, 4);
    const GramPair g1 = gram_matrices(b, 1);
    const Eigen::VectorXd ones_int = integrate_covariate(b, [](double) { return 1.0; });
    const Eigen::VectorXd c = g1.gram.ldlt().solve(ones_int);
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      CHECK(std::abs(b.function_value(c, t) - 1.0) < 1e-10);
      CHECK(std::abs(b.function_value(c, t, 1)) < 1e-9);
    }
    CHECK(std::abs(c.dot(g1.rough * c)) < 1e-12);
  }

  TEST_CASE("covariate integration") {
    const SplineBasis b = SplineBasis::uniform(10, 4);
    const GramPair g = gram_matrices(b, 2);
    CHECK(integrate_covariate(b, [](double) { return 0.0; }).norm() == 0.0);
    const Eigen::VectorXd ones = integrate_covariate(b, [](double) { return 1.0; });
    CHECK(ones.minCoeff() > 0.0);
    CHECK(ones.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::VectorXd first = integrate_covariate(b, [&](double t) { return b.eval(t)(0); });
    CHECK((first - g.gram.col(0)).cwiseAbs().maxCoeff() < 1e-12);

    // Sampled curves: trapezoid on a fine grid.
    const Grid grid = Grid::uniform(2001);
    Eigen::VectorXd samples(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) samples(i) = std::sin(3.0 * grid.t(i));
    const Eigen::VectorXd xs = integrate_covariate(b, grid, samples);
    const Eigen::VectorXd xf = integrate_covariate(b, [](double t) { return std::sin(3.0 * t); });
    CHECK((xs - xf).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS(covariate_integrator(b, Grid::uniform(39)));
  }

  TEST_CASE("spline approximation order") {
    std::vector<double> ks, errs;
    for (int k : {20, 28, 40, 56, 80}) {
      const SplineBasis b = SplineBasis::uniform(k, 4);
      auto f = [](double t) { return std::sin(2.0 * std::numbers::pi * t); };
      const Eigen::VectorXd c = l2_projection(b, f);
      auto [nodes, weights] = gauss_legendre(20);
      double e2 = 0.0;
      const Eigen::VectorXd& br = b.breakpoints();
      for (Eigen::Index j = 0; j + 1 < br.size(); ++j) {
        auto [t, w] = gauss_legendre(20, br(j), br(j + 1));
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          const double r = b.function_value(c, t(i)) - f(t(i));
          e2 += w(i) * r * r;
        }
      }
      (void)nodes;
      (void)weights;
      ks.push_back(k);
      errs.push_back(std::sqrt(e2));
    }
    const LineFit lf = fit_loglog(Eigen::Map<Eigen::VectorXd>(ks.data(), 5), Eigen::Map<Eigen::VectorXd>(errs.data(), 5));
    CHECK(lf.slope == doctest::Approx(-4.0).epsilon(0.1));
  }

  TEST_CASE("transform installation") {
    const SplineBasis b = SplineBasis::uniform(6, 4);
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(6, 6);
    q(0, 1) = 2.0;
    const SplineBasis bq = b.with_transform(q);
    CHECK(bq.has_transform());
    CHECK((bq.eval(0.4) - q * b.eval(0.4)).norm() < 1e-14);
    CHECK_THROWS(b.with_transform(Eigen::MatrixXd::Zero(6, 6)));
  }
}
