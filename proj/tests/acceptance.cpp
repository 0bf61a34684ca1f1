// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: mtfr_acceptance [criterion ids...]   (default: all)

#include "mtfr/diagnostics.hpp"
#include "mtfr/fixed_rank.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/harness.hpp"
#include "mtfr/penalty.hpp"
#include "mtfr/simdiag.hpp"
#include "mtfr/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mtfr;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)}); }

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max({1e-300, a.norm(), b.norm()});
}

Eigen::MatrixXd random_psd(int n, Rng& rng) {
  const Eigen::MatrixXd a = standard_normal(n, n, rng);
  return a * a.transpose() / double(n);
}

Eigen::MatrixXd random_weights(int m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) w(i, j) = w(j, i) = u(rng) < 0.6 ? u(rng) : 0.0;
  return w;
}

Eigen::VectorXd random_gamma(int k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 20.0);
  Eigen::VectorXd g(k);
  for (int i = 0; i < k; ++i) g(i) = i < 2 ? 0.0 : u(rng);
  std::sort(g.data(), g.data() + k);
  return g;
}

// ---------------------------------------------------------------------------

Outcome c1_laplacian_growth() {
  Outcome o;
  o.pass = true;
  std::ostringstream d;
  for (int mu : {2, 3}) {
    const AuxiliarySample s = sample_manifold({ManifoldKind::sphere, mu}, 2000, 2024 + mu);
    const Laplacian lap = build_laplacian(s, default_bandwidth(2000, mu, 2.0), GraphKernel::exp_trunc);
    const SpectralGrowth sg = spectral_growth(lap, 5, 100);
    const double expect = 2.0 / mu;
    const bool ok = std::abs(sg.slope - expect) <= 0.4;
    o.pass = o.pass && ok;
    d << "mu=" << mu << " slope " << fmt("%.3f", sg.slope) << " (target " << fmt("%.3f", expect) << " +- 0.4) ";
  }
  o.detail = d.str();
  return o;
}

Outcome c2_simdiag() {
  const CovKernel k = CovKernel::brownian();
  const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(20, 4), k, 2);
  const Eigen::MatrixXd cov = population_covariance(sys, k);
  Eigen::MatrixXd target = Eigen::MatrixXd::Identity(20, 20);
  target(19, 19) = 0.0;
  const double dev_target = (cov - target).cwiseAbs().maxCoeff();
  const double dev_own = (cov - sys.sigma_pattern).cwiseAbs().maxCoeff();
  const GramPair gp = gram_matrices(sys.basis, 2);
  Eigen::MatrixXd off = gp.rough;
  off.diagonal().setZero();
  const double rough_dev = off.cwiseAbs().maxCoeff() / sys.gamma.maxCoeff();
  Outcome o;
  o.pass = sys.pbar == 1 && dev_target < 1e-6 && rough_dev < 1e-8;
  o.detail = "pbar=" + std::to_string(sys.pbar) + " (expected 1), cov dev vs I19+0 " + fmt("%.2e", dev_target) +
             ", cov dev vs own pattern " + fmt("%.2e", dev_own) + ", roughness off-diag " + fmt("%.2e", rough_dev) +
             ", min/max F eig " + fmt("%.2e", sys.f_eigs.minCoeff() / sys.f_eigs.maxCoeff());
  return o;
}

Outcome c3_gamma_growth() {
  const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(40, 4), CovKernel::brownian(), 2);
  const double slope = gamma_growth_check(sys);
  bool mono = true;
  for (Eigen::Index i = 1; i < sys.gamma.size(); ++i) mono = mono && sys.gamma(i) >= sys.gamma(i - 1);
  return {slope >= 5.0 && mono, "slope over k in [6,40] " + fmt("%.3f", slope) + " (>= 5)"};
}

Outcome c4_single_task_rate() {
  const json j = {{"scenario", {{"preset", "single_task_smooth"}, {"noise_sd", 0.5}}},
                  {"sweep",
                   {{"n_grid", {128, 256, 512, 1024, 2048, 4096}},
                    {"reps", 30},
                    {"tuning_rule", "table1.ii"},
                    {"consts", {{"c_k", 8.0}, {"c_eta1", 1e-5}}}}},
                  {"master_seed", 4242}};
  const RateTable t = run_rate_sweep(ExperimentConfig::from_json(j));
  const double target = -3.0 / 7.0;
  std::ostringstream d;
  d << "slope " << fmt("%.4f", t.slope.slope) << " +- " << fmt("%.4f", t.slope.slope_stderr) << " (target "
    << fmt("%.4f", target) << " +- 0.12); medians";
  for (const RatePoint& p : t.points) d << " " << fmt("%.4f", p.median);
  return {std::abs(t.slope.slope - target) <= 0.12, d.str()};
}

Outcome c5_reduced_gain() {
  const json j = {{"scenario", {{"preset", "reduced_rank"}, {"m", 20}, {"rank_true", 2}, {"noise_sd", 0.25}, {"n", 100}}},
                  {"sweep", {{"tuning_rule", "table1.ii"}, {"consts", {{"fixed_k", 15}, {"c_eta1", 1e-5}}}}},
                  {"master_seed", 505}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  ModelSpec pooled, reduced;
  reduced.kind = ModelKind::reduced;
  reduced.rank = 2;
  SystemCache cache(CovKernel::brownian(), 2, 4);
  std::vector<double> ep, er;
  for (int rep = 0; rep < 20; ++rep) {
    const ReplicateOutcome out = run_replicate(cfg, 100, 20, rep, {pooled, reduced}, cache);
    ep.push_back(out.reports[0].combined);
    er.push_back(out.reports[1].combined);
  }
  const double ratio = median_of(er) / median_of(ep);
  return {ratio <= 0.8, "median reduced " + fmt("%.4f", median_of(er)) + " / pooled " + fmt("%.4f", median_of(ep)) +
                            " = " + fmt("%.3f", ratio) + " (<= 0.8)"};
}

Outcome c6_graph_gain() {
  const json j = {{"scenario", {{"preset", "graph_sphere"}, {"mu", 2}, {"n", 64}}},
                  {"sweep", {{"tuning_rule", "table2.iii"}, {"consts", {{"c_k", 8.0}, {"c_eta1", 1e-5}, {"c_eta2", 0.1}}}}},
                  {"master_seed", 606}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  ModelSpec graph;
  graph.kind = ModelKind::graph;
  ModelSpec indep = graph;
  indep.force_eta2_zero = true;
  SystemCache cache(CovKernel::brownian(), 2, 4);
  std::vector<double> med_g, med_i;
  std::ostringstream d;
  for (int m : {50, 100, 200, 400}) {
    std::vector<double> eg, ei;
    for (int rep = 0; rep < 20; ++rep) {
      const ReplicateOutcome out = run_replicate(cfg, 64, m, rep, {graph, indep}, cache);
      eg.push_back(out.reports[0].combined);
      ei.push_back(out.reports[1].combined);
    }
    med_g.push_back(median_of(eg));
    med_i.push_back(median_of(ei));
    d << "M=" << m << " graph " << fmt("%.4f", med_g.back()) << " indep " << fmt("%.4f", med_i.back()) << "; ";
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < med_g.size(); ++i) decreasing = decreasing && med_g[i] < med_g[i - 1];
  const double ratio = med_g.back() / med_i.back();
  d << "strictly decreasing " << (decreasing ? "yes" : "no") << ", ratio at M=400 " << fmt("%.3f", ratio) << " (<= 0.7)";
  return {decreasing && ratio <= 0.7, d.str()};
}

Outcome c7_penalty_identities() {
  Rng rng(707);
  std::uniform_int_distribution<int> dim(2, 15);
  double worst_kron = 0.0, worst_p1 = 0.0, worst_p2 = 0.0, worst_dir = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int k = dim(rng), m = dim(rng);
    const Eigen::MatrixXd w = random_weights(m, rng);
    const Laplacian lap = laplacian_from_weights(w);
    const Eigen::MatrixXd sig = random_psd(k, rng);
    const Eigen::VectorXd gam = random_gamma(k, rng);
    std::uniform_real_distribution<double> ue(0.01, 2.0);
    const double eta1 = ue(rng), eta2 = ue(rng);
    const PenaltySpec<double> spec = graph_penalty_spec<double>(gam, lap.omega, sig, eta1, eta2);
    const Eigen::MatrixXd b = standard_normal(k, m, rng);
    const Eigen::Map<const Eigen::VectorXd> vb(b.data(), k * m);
    const double kron = vb.dot(q_norm_matrix(spec) * vb) - vb.squaredNorm();
    worst_kron = std::max(worst_kron, rel(penalty_value(spec, b), kron));

    // Term 2 and term 3 as weighted sums over unordered task pairs.
    const Eigen::MatrixXd g = gam.asDiagonal();
    double s2 = 0.0, s3 = 0.0;
    for (int v = 0; v < m; ++v)
      for (int vp = v + 1; vp < m; ++vp) {
        const Eigen::VectorXd diff = b.col(v) - b.col(vp);
        s2 += w(v, vp) * diff.dot(sig * diff);
        s3 += w(v, vp) * diff.dot(g * diff);
      }
    PenaltySpec<double> t2(k, m), t3(k, m);
    t2.add(1.0, sig, lap.omega);
    t3.add(1.0, g, lap.omega);
    if (s2 > 0.0) worst_p1 = std::max(worst_p1, rel(penalty_value(t2, b), s2));
    if (s3 > 0.0) worst_p2 = std::max(worst_p2, rel(penalty_value(t3, b), s3));

    const Eigen::VectorXd f = standard_normal(m, 1, rng);
    double sf = 0.0;
    for (int v = 0; v < m; ++v)
      for (int vp = 0; vp < m; ++vp) sf += 0.5 * w(v, vp) * (f(v) - f(vp)) * (f(v) - f(vp));
    if (sf > 0.0) worst_dir = std::max(worst_dir, rel(dirichlet_form(lap, f), sf / m));
  }
  const double worst = std::max({worst_kron, worst_p1, worst_p2, worst_dir});
  return {worst < 1e-10, "max rel err: Kronecker " + fmt("%.2e", worst_kron) + ", Sigma double sum " +
                             fmt("%.2e", worst_p1) + ", Gamma double sum " + fmt("%.2e", worst_p2) + ", Dirichlet " +
                             fmt("%.2e", worst_dir) + " (< 1e-10)"};
}

Outcome c8_manifold_geometry() {
  using Point = FixedRankPoint<double>;
  using Tangent = TangentVector<double>;
  Rng rng(808);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> dim(4, 10);
  double idem = 0.0, orth = 0.0, normality = 0.0, symm = 0.0, wein = 0.0;
  int violations = 0;
  double slope_min = 1e9, slope_max = -1e9;
  for (int pair = 0; pair < 200; ++pair) {
    const int k = dim(rng), m = dim(rng);
    const int r = 1 + pair % std::min(3, std::min(k, m) - 1);
    Eigen::VectorXd dv(r);
    for (int i = 0; i < r; ++i) dv(i) = 0.5 + 3.0 * u(rng);
    const Point p = random_point<double>(k, m, dv, rng);
    const Eigen::MatrixXd w = random_weights(m, rng);
    const PenaltySpec<double> spec =
        graph_penalty_spec<double>(random_gamma(k, rng), laplacian_from_weights(w).omega, random_psd(k, rng), 0.05, 0.05);

    const Eigen::MatrixXd z = standard_normal(k, m, rng);
    const Tangent tz = project_tangent(p, z);
    const Eigen::MatrixXd tzd = to_dense(p, tz);
    idem = std::max(idem, (to_dense(p, project_tangent(p, tzd)) - tzd).norm() / std::max(1.0, tzd.norm()));
    orth = std::max(orth, std::abs(tzd.cwiseProduct(normal_project(p, z)).sum()) / std::max(1.0, z.squaredNorm()));

    const Tangent a0 = random_tangent(p, rng), b0 = random_tangent(p, rng);
    const Eigen::MatrixXd ii = second_fundamental_form(p, a0, b0);
    normality = std::max(normality, to_dense(p, project_tangent(p, ii)).norm() / std::max(1.0, ii.norm()));
    symm = std::max(symm, (ii - second_fundamental_form(p, b0, a0)).norm() / std::max(1.0, ii.norm()));
    const Eigen::MatrixXd nrm = normal_project(p, standard_normal(k, m, rng));
    wein = std::max(wein, rel(weingarten(p, nrm, a0).cwiseProduct(to_dense(p, b0)).sum(), nrm.cwiseProduct(ii).sum()));

    // Local bi-Lipschitz and second-order inequalities at radius 0.1 sigma_R in the Q norm.
    const double cap = 0.1 * p.sigma_min();
    const Tangent a = a0 * (u(rng) * cap / q_norm(spec, to_dense(p, a0)));
    const Tangent b = b0 * (u(rng) * cap / q_norm(spec, to_dense(p, b0)));
    Rng probe_rng(derive_seed(808, pair));
    const double probe =
        std::max({curvature_bound_probe(p, spec, 50, probe_rng), curvature_ratio(p, spec, a), curvature_ratio(p, spec, b)});
    const Eigen::MatrixXd bb = p.dense();
    const Eigen::MatrixXd ra = retract(p, a).dense(), rb = retract(p, b).dense();
    const double qa = q_norm(spec, to_dense(p, a));
    const double qs = q_norm(spec, Eigen::MatrixXd(ra - bb));
    if (!(0.5 * qa <= qs && qs <= 2.0 * qa)) ++violations;
    if (!(q_norm(spec, Eigen::MatrixXd(ra - bb - to_dense(p, a))) <= 2.0 * probe * qa * qa)) ++violations;
    const double dab = (to_dense(p, a) - to_dense(p, b)).norm();
    const double rab = (ra - rb).norm();
    if (!(0.25 * dab <= rab && rab <= 4.0 * dab)) ++violations;

    if (pair % 20 == 0) {
      const Tangent unit = a0 * (1.0 / tangent_norm(a0));
      std::vector<double> ts, res;
      for (double t : {0.04, 0.02, 0.01, 0.005, 0.0025}) {
        const Tangent step = unit * (t * p.sigma_min());
        ts.push_back(t);
        res.push_back((retract(p, step).dense() - bb - to_dense(p, step)).norm());
      }
      const double s = fit_loglog(Eigen::Map<Eigen::VectorXd>(ts.data(), 5), Eigen::Map<Eigen::VectorXd>(res.data(), 5)).slope;
      slope_min = std::min(slope_min, s);
      slope_max = std::max(slope_max, s);
    }
  }
  const bool ok = idem < 1e-10 && orth < 1e-10 && normality < 1e-10 && symm < 1e-10 && wein < 1e-10 &&
                  slope_min >= 1.8 && slope_max <= 2.2 && violations == 0;
  return {ok, "idempotence " + fmt("%.1e", idem) + ", orthogonality " + fmt("%.1e", orth) + ", II normality " +
                  fmt("%.1e", normality) + ", II symmetry " + fmt("%.1e", symm) + ", Weingarten " + fmt("%.1e", wein) +
                  ", retraction slope [" + fmt("%.3f", slope_min) + ", " + fmt("%.3f", slope_max) +
                  "], inequality violations " + std::to_string(violations) + "/600"};
}

Outcome c9_empirical_norm() {
  SystemCache cache(CovKernel::brownian(), 2, 4);
  const SystemCache::Entry& e = cache.get(60);
  const double eta1 = 1e-6;
  const Scenario base = make_scenario(Preset::single_task_smooth);
  std::vector<double> devs;
  std::ostringstream d;
  d << "eff. dim " << fmt("%.2f", std::pow(ellipsoid_complexity(e.sys.gamma, eta1), 2)) << "; median sup deviation";
  for (int n : {500, 2000, 8000}) {
    Scenario s = base;
    s.n = n;
    std::vector<double> reps;
    for (int rep = 0; rep < 11; ++rep) {
      const Generated g = generate(s, e.sys, *e.sampler, derive_seed(909, std::uint64_t(n) * 100 + rep));
      reps.push_back(empirical_norm_deviation(g.data.x[0], e.pop_cov, e.sys.gamma, eta1, 200, derive_seed(910, rep)));
    }
    devs.push_back(median_of(reps));
    d << " N=" << n << ": " << fmt("%.4f", devs.back());
  }
  const double r1 = devs[1] / devs[0], r2 = devs[2] / devs[1];
  d << "; ratios " << fmt("%.3f", r1) << ", " << fmt("%.3f", r2) << " (0.5 within 30%)";
  return {r1 >= 0.35 && r1 <= 0.65 && r2 >= 0.35 && r2 <= 0.65, d.str()};
}

TaskDataset gaussian_data(int k, int m, int n, LossKind loss, InterceptMode mode, Rng& rng) {
  TaskDataset d;
  d.loss = loss;
  d.intercept_mode = mode;
  const Eigen::MatrixXd b = 0.5 * standard_normal(k, m, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int j = 0; j < m; ++j) {
    const Eigen::MatrixXd x = standard_normal(n, k, rng);
    const Eigen::VectorXd u0 = x * b.col(j);
    Eigen::VectorXd y = u0 + 0.3 * standard_normal(n, 1, rng);
    if (loss.kind == LossKind::logistic)
      for (int i = 0; i < n; ++i) y(i) = unif(rng) < 1.0 / (1.0 + std::exp(-u0(i))) ? 1.0 : 0.0;
    d.x.push_back(x);
    d.y.push_back(y);
  }
  return d;
}

Outcome c10_gradients() {
  Rng rng(1010);
  double worst_pen = 0.0, worst_loss = 0.0, worst_obj = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const int k = 4 + inst % 5, m = 2 + inst % 4;
    const PenaltySpec<double> spec = graph_penalty_spec<double>(
        random_gamma(k, rng), laplacian_from_weights(random_weights(m, rng)).omega, random_psd(k, rng), 0.3, 0.7);
    const Eigen::MatrixXd b = standard_normal(k, m, rng);
    const Eigen::MatrixXd g = penalty_gradient(spec, b);
    Eigen::MatrixXd fd(k, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < k; ++i) {
        Eigen::MatrixXd bp = b, bm = b;
        bp(i, j) += 1e-6;
        bm(i, j) -= 1e-6;
        fd(i, j) = (penalty_value(spec, bp) - penalty_value(spec, bm)) / 2e-6;
      }
    worst_pen = std::max(worst_pen, rel(g, fd));

    for (const LossKind& loss : {LossKind::make_squared(), LossKind::make_logistic(), LossKind::make_quantile(0.3, 0.2)}) {
      const TaskDataset data = gaussian_data(k, m, 40, loss, InterceptMode::fitted, rng);
      const Eigen::VectorXd u = standard_normal(40, 1, rng);
      const LossEval le = loss_value_grad(loss, data.y[0], u);
      Eigen::VectorXd fu(40);
      for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd up = u, um = u;
        up(i) += 1e-6;
        um(i) -= 1e-6;
        fu(i) = (loss_value_grad(loss, data.y[0], up).value - loss_value_grad(loss, data.y[0], um).value) / 2e-6;
      }
      worst_loss = std::max(worst_loss, rel(le.grad, fu));

      const Eigen::VectorXd alpha = standard_normal(m, 1, rng);
      Eigen::MatrixXd gb;
      Eigen::VectorXd ga;
      objective(data, spec, alpha, b, &gb, &ga);
      Eigen::MatrixXd fb(k, m);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < k; ++i) {
          Eigen::MatrixXd bp = b, bm = b;
          bp(i, j) += 1e-6;
          bm(i, j) -= 1e-6;
          fb(i, j) = (objective(data, spec, alpha, bp) - objective(data, spec, alpha, bm)) / 2e-6;
        }
      Eigen::VectorXd fa(m);
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd ap = alpha, am = alpha;
        ap(j) += 1e-6;
        am(j) -= 1e-6;
        fa(j) = (objective(data, spec, ap, b) - objective(data, spec, am, b)) / 2e-6;
      }
      worst_obj = std::max({worst_obj, rel(gb, fb), rel(ga, fa)});
    }
  }
  const double worst = std::max({worst_pen, worst_loss, worst_obj});
  return {worst < 1e-6, "max rel err: penalty " + fmt("%.2e", worst_pen) + ", losses " + fmt("%.2e", worst_loss) +
                            ", full objective " + fmt("%.2e", worst_obj) + " (< 1e-6)"};
}

Outcome c11_solvers() {
  Rng rng(1111);
  double worst_cg = 0.0, worst_gap = 0.0;
  for (int inst = 0; inst < 8; ++inst) {
    const int k = 6 + inst % 7, m = 3 + inst % 8;
    if (k * m > 144) continue;
    const TaskDataset data = gaussian_data(k, m, 50, LossKind::make_squared(), InterceptMode::none, rng);
    Eigen::MatrixXd w = random_weights(m, rng);
    for (int i = 0; i + 1 < m; ++i) w(i, i + 1) = w(i + 1, i) = 0.5;
    const Eigen::MatrixXd omega = laplacian_from_weights(w).omega;
    const Eigen::VectorXd gam = random_gamma(k, rng);
    const FitResult cg = fit_graph(data, gam, omega, 1e-3, 0.3);
    const Eigen::VectorXd dense = graph_dense_solve(data, gam, omega, 1e-3, 0.3);
    worst_cg = std::max(worst_cg, rel(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(cg.b.data(), k * m)), dense));
  }
  for (int inst = 0; inst < 6; ++inst) {
    const Scenario s = make_scenario(Preset::reduced_rank, {{"m", 8 + inst}, {"n", 60}, {"noise_sd", 0.3}, {"seed", 30 + inst}});
    const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(10, 4), s.kernel, 2);
    const Generated g = generate(s, sys, derive_seed(1112, inst));
    const double eta1 = 1e-6;
    ReducedOptions als, rie;
    rie.method = ReducedMethod::riemannian;
    const FitResult fa = fit_reduced(g.data, sys, eta1, 2, als);
    const FitResult fr = fit_reduced(g.data, sys, eta1, 2, rie);
    worst_gap = std::max(worst_gap, std::abs(fa.objective - fr.objective));
  }
  return {worst_cg < 1e-8 && worst_gap < 1e-5,
          "CG vs dense max rel " + fmt("%.2e", worst_cg) + " (< 1e-8), ALS vs Riemannian max objective gap " +
              fmt("%.2e", worst_gap) + " (< 1e-5)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"graph Laplacian eigenvalue growth", c1_laplacian_growth},
      {"simultaneous diagonalization", c2_simdiag},
      {"roughness eigenvalue growth", c3_gamma_growth},
      {"single-task smoothing-spline rate", c4_single_task_rate},
      {"reduced-rank gain", c5_reduced_gain},
      {"graph-regularization gain", c6_graph_gain},
      {"penalty and trace identities", c7_penalty_identities},
      {"fixed-rank manifold geometry", c8_manifold_geometry},
      {"empirical-norm scaling", c9_empirical_norm},
      {"gradient checks", c10_gradients},
      {"solver cross-validation", c11_solvers},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << criteria[i].first << ": " << o.detail << " ["
              << fmt("%.1f", secs) << " s]" << std::endl;
  }
  std::cout << failures << " criterion(s) failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
