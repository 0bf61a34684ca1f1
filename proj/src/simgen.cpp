#include "mtfr/simgen.hpp"

#include "mtfr/errors.hpp"
#include "mtfr/random.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace mtfr {

using nlohmann::json;

Preset parse_preset(const std::string& name) {
  if (name == "single_task_smooth") return Preset::single_task_smooth;
  if (name == "reduced_rank") return Preset::reduced_rank;
  if (name == "graph_sphere") return Preset::graph_sphere;
  throw std::invalid_argument("unknown scenario preset '" + name + "'");
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::single_task_smooth:
      return "single_task_smooth";
    case Preset::reduced_rank:
      return "reduced_rank";
    case Preset::graph_sphere:
      return "graph_sphere";
  }
  return "unknown";
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double psi(int r, double t) { return std::numbers::sqrt2 * std::cos(std::numbers::pi * (r + 1) * t); }

json kernel_to_json(const CovKernel& k) { return {{"name", k.name()}, {"params", k.params}}; }

CovKernel kernel_from_json(const json& j) {
  if (j.is_string()) return parse_kernel(j.get<std::string>());
  CovKernel k = parse_kernel(j.at("name").get<std::string>());
  if (j.contains("params")) {
    const auto p = j.at("params").get<std::vector<double>>();
    switch (k.kind) {
      case KernelKind::brownian_shifted:
        require(p.size() == 2, "kernel brownian_shifted needs two parameters");
        k = CovKernel::brownian_shifted(p[0], p[1]);
        break;
      case KernelKind::ornstein_uhlenbeck:
        require(p.size() == 2, "kernel ornstein_uhlenbeck needs two parameters");
        k = CovKernel::ornstein_uhlenbeck(p[0], p[1]);
        break;
      case KernelKind::sobolev:
        k = CovKernel::sobolev(k.order_q, p);
        break;
      default:
        break;
    }
  }
  return k;
}

void draw_task_structure(Scenario& s) {
  Rng rng(derive_seed(s.seed, 0x5eed));
  if (s.preset == Preset::reduced_rank) {
    require(s.rank_true >= 1 && s.rank_true <= s.m, "reduced_rank: rank_true must lie in [1, M]");
    s.loadings = standard_normal(s.m, s.rank_true, rng);
  } else {
    s.loadings.resize(0, 0);
  }
  if (s.preset == Preset::graph_sphere)
    s.aux = sample_manifold(s.manifold, s.m, derive_seed(s.seed, 0xa11));
  else
    s.aux = AuxiliarySample{};
}

}  // namespace

double Scenario::beta0(int task, double t) const {
  switch (preset) {
    case Preset::single_task_smooth:
      return std::sin(kTwoPi * t) + 0.5 * std::cos(2.0 * kTwoPi * t);
    case Preset::reduced_rank: {
      double v = 0.0;
      for (int r = 0; r < rank_true; ++r) v += loadings(task, r) * psi(r, t);
      return v;
    }
    case Preset::graph_sphere: {
      const double s1 = aux.points(task, 0);
      const double s2 = aux.points.cols() > 1 ? aux.points(task, 1) : 0.0;
      return std::sin(kTwoPi * t) * (1.0 + s1) + std::cos(kTwoPi * t) * s2;
    }
  }
  return 0.0;
}

Eigen::MatrixXd Scenario::beta0_grid(const Eigen::VectorXd& t) const {
  Eigen::MatrixXd out(t.size(), m);
  for (int j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < t.size(); ++i) out(i, j) = beta0(j, t(i));
  return out;
}

Scenario make_scenario(Preset preset, const json& overrides) {
  require(overrides.is_object(), "scenario overrides must be a JSON object");
  static const std::set<std::string> known = {"preset", "kernel", "m", "n", "noise_sd", "loss", "w",
                                              "smooth_eps", "intercept", "rank_true", "mu", "seed"};
  for (const auto& [key, _] : overrides.items())
    require(known.count(key) > 0, "unknown scenario key '" + key + "'");
  Scenario s;
  s.preset = preset;
  s.manifold = {ManifoldKind::sphere, 2};
  switch (preset) {
    case Preset::single_task_smooth:
      s.m = 1;
      break;
    case Preset::reduced_rank:
      s.m = 20;
      s.rank_true = 2;
      break;
    case Preset::graph_sphere:
      s.m = 100;
      s.n = 64;
      break;
  }
  if (overrides.contains("kernel")) s.kernel = kernel_from_json(overrides.at("kernel"));
  s.m = overrides.value("m", s.m);
  s.n = overrides.value("n", s.n);
  s.noise_sd = overrides.value("noise_sd", s.noise_sd);
  s.rank_true = overrides.value("rank_true", s.rank_true);
  s.seed = overrides.value("seed", s.seed);
  if (overrides.contains("mu")) s.manifold.mu = overrides.at("mu").get<int>();
  if (overrides.contains("loss"))
    s.loss = parse_loss(overrides.at("loss").get<std::string>(), overrides.value("w", 0.5),
                        overrides.value("smooth_eps", 0.0));
  if (overrides.contains("intercept")) {
    const std::string mode = overrides.at("intercept").get<std::string>();
    require(mode == "none" || mode == "fitted", "intercept must be 'none' or 'fitted'");
    s.intercept_mode = mode == "fitted" ? InterceptMode::fitted : InterceptMode::none;
  }
  require(s.m >= 1 && s.n >= 1, "scenario: M and N must be positive");
  require(s.noise_sd >= 0.0, "scenario: noise_sd must be nonnegative");
  require(s.manifold.mu >= 1, "scenario: mu must be >= 1");
  if (preset == Preset::graph_sphere) require(s.m >= 2, "graph_sphere: need M >= 2");
  draw_task_structure(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j = {{"preset", preset_name(s.preset)},
            {"kernel", kernel_to_json(s.kernel)},
            {"m", s.m},
            {"n", s.n},
            {"noise_sd", s.noise_sd},
            {"loss", s.loss.name()},
            {"intercept", s.intercept_mode == InterceptMode::fitted ? "fitted" : "none"},
            {"rank_true", s.rank_true},
            {"mu", s.manifold.mu},
            {"seed", s.seed}};
  if (s.loss.kind == LossKind::quantile) {
    j["w"] = s.loss.w;
    j["smooth_eps"] = s.loss.smooth_eps;
  }
  return j;
}

Scenario scenario_from_json(const json& j) {
  json overrides = j;
  const Preset p = parse_preset(j.at("preset").get<std::string>());
  overrides.erase("preset");
  return make_scenario(p, overrides);
}

double student_t4_quantile(double w) {
  require(w > 0.0 && w < 1.0, "student_t4_quantile: level must lie in (0,1)");
  if (w == 0.5) return 0.0;
  const double a = 4.0 * w * (1.0 - w);
  const double sa = std::sqrt(a);
  const double q = std::cos(std::acos(sa) / 3.0) / sa;
  return (w > 0.5 ? 2.0 : -2.0) * std::sqrt(q - 1.0);
}

Generated generate(const Scenario& scenario, const DiagonalizedSystem& sys, std::uint64_t seed) {
  const GPSampler sampler(scenario.kernel, sys.grid, seed);
  return generate(scenario, sys, sampler, seed);
}

Generated generate(const Scenario& scenario, const DiagonalizedSystem& sys, const GPSampler& sampler,
                   std::uint64_t seed) {
  const Grid& grid = sys.grid;
  check_dims(sampler.grid().size() == grid.size(), "generate: sampler grid differs from the system grid");
  const int m = scenario.m, n = scenario.n, k = sys.dof();
  Generated out;
  out.data.intercept_mode = scenario.intercept_mode;
  out.data.loss = scenario.loss;
  out.truth.beta_grid = scenario.beta0_grid(grid.t);
  out.truth.b0.resize(k, m);
  for (int j = 0; j < m; ++j)
    out.truth.b0.col(j) = l2_projection(sys.basis, [&](double t) { return scenario.beta0(j, t); });
  out.truth.signal.resize(n, m);
  const Eigen::MatrixXd integ = covariate_integrator(sys.basis, grid);  // K x G
  const double t4_shift = scenario.loss.kind == LossKind::quantile ? student_t4_quantile(scenario.loss.w) : 0.0;
  for (int j = 0; j < m; ++j) {
    Rng rng(derive_seed(seed, std::uint64_t(j)));
    const Eigen::MatrixXd paths = sampler.sample_paths(n, rng);  // N x G
    out.data.x.push_back(paths * integ.transpose());
    const Eigen::VectorXd u = paths * grid.w.cwiseProduct(out.truth.beta_grid.col(j));
    out.truth.signal.col(j) = u;
    Eigen::VectorXd y(n);
    switch (scenario.loss.kind) {
      case LossKind::squared: {
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < n; ++i) y(i) = u(i) + scenario.noise_sd * g(rng);
        break;
      }
      case LossKind::logistic: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < n; ++i) y(i) = unif(rng) < 1.0 / (1.0 + std::exp(-u(i))) ? 1.0 : 0.0;
        break;
      }
      case LossKind::quantile: {
        std::student_t_distribution<double> t4(4.0);
        for (int i = 0; i < n; ++i) y(i) = u(i) + scenario.noise_sd * (t4(rng) - t4_shift);
        break;
      }
    }
    out.data.y.push_back(std::move(y));
  }
  return out;
}

}  // namespace mtfr
