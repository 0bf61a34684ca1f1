#include "mtfr/harness.hpp"

#include "mtfr/errors.hpp"
#include "mtfr/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace mtfr {

using nlohmann::json;

TuningExponents tuning_exponents(const TuningConsts& c) {
  require(c.q > 0.0 && c.d >= 1.0 && c.nu > 0.0 && c.mu > 0.0 && c.order >= 1, "tuning: invalid constants");
  TuningExponents e;
  const double o1 = c.order;  // polynomial degree + 1
  e.tau = std::min(c.nu, o1) + std::min(c.q, o1) / 2.0;
  e.iota = c.q + c.d;
  e.kappa = e.tau + c.d - c.nu;
  e.r1 = e.tau / (e.tau * (2.0 + c.mu) + 1.0);
  e.r2 = e.iota / (e.iota * (2.0 + c.mu) + 1.0);
  return e;
}

std::vector<std::string> tuning_rule_names() {
  return {"table1.i", "table1.ii", "table1.iii", "table1.iv", "table2.i", "table2.ii",
          "table2.iii", "table2.iv", "table2.v", "table2.vi", "fixed"};
}

Tuning tuning_rule(const std::string& name, double n, double m, double r, const TuningConsts& c) {
  require(n >= 1.0 && m >= 1.0 && r >= 1.0, "tuning: N, M and R must be >= 1");
  const TuningExponents e = tuning_exponents(c);
  const double tau = e.tau, iota = e.iota, kappa = e.kappa;
  const double vee = std::max(iota, tau), wedge = std::min(iota, tau);
  double k = 0.0, eta1 = 0.0, eta2 = 0.0;
  if (name == "fixed") {
    return {c.fixed_k, c.fixed_eta1, c.fixed_eta2};
  } else if (name.rfind("table1.", 0) == 0) {
    const double x = m * n / r;
    const std::string row = name.substr(7);
    if (row == "i") {
      eta1 = std::pow(x, -2.0 * vee / (2.0 * tau + 1.0));
      k = std::pow(x, 1.0 / (2.0 * tau + 1.0));
    } else if (row == "ii") {
      eta1 = std::pow(x, -2.0 * iota / (2.0 * iota + 1.0));
      k = std::pow(x, iota / ((2.0 * iota + 1.0) * wedge));
    } else if (row == "iii") {
      eta1 = std::pow(x, -2.0 * iota / (2.0 * tau + 1.0));
      k = std::pow(x, 1.0 / (2.0 * tau + 1.0));
    } else if (row == "iv") {
      eta1 = std::pow(x, -2.0 * iota * kappa / (kappa + 2.0 * iota * tau));
      k = std::pow(x, iota / (kappa + 2.0 * iota * tau));
    } else {
      throw std::invalid_argument("unknown tuning rule '" + name + "'");
    }
  } else if (name.rfind("table2.", 0) == 0) {
    const std::string row = name.substr(7);
    const double mn = m * n;
    const double weak_cap = std::pow(m, -2.0 / c.mu);
    if (row == "i") {
      eta1 = std::pow(n, -2.0 * vee / (2.0 * tau + 1.0));
      k = std::pow(n, 1.0 / (2.0 * tau + 1.0));
      eta2 = std::min(weak_cap, std::pow(n, -2.0 * tau / (2.0 * tau + 1.0)));
    } else if (row == "ii") {
      eta1 = std::pow(n, -2.0 * iota / (2.0 * iota + 1.0));
      k = std::pow(n, iota / ((2.0 * iota + 1.0) * vee));
      eta2 = std::min(weak_cap, std::pow(n, -2.0 * iota / (2.0 * iota + 1.0)));
    } else if (row == "iii" || row == "iv") {
      eta1 = std::pow(mn, -2.0 * vee * e.r1 / tau);
      k = std::pow(mn, e.r1 / tau);
      eta2 = row == "iii" ? std::pow(mn, -2.0 * e.r1) : weak_cap;
    } else if (row == "v" || row == "vi") {
      eta1 = std::pow(mn, -2.0 * e.r2);
      k = std::pow(mn, e.r2 / wedge);
      eta2 = row == "v" ? std::pow(mn, -2.0 * e.r2) : weak_cap;
    } else {
      throw std::invalid_argument("unknown tuning rule '" + name + "'");
    }
  } else {
    throw std::invalid_argument("unknown tuning rule '" + name + "'");
  }
  Tuning t;
  t.k = c.fixed_k > 0 ? c.fixed_k : std::max(c.order, int(std::lround(c.c_k * k)));
  t.eta1 = c.c_eta1 * eta1;
  t.eta2 = c.c_eta2 * eta2;
  return t;
}

RatePrediction predicted_rate(const std::string& name, const TuningConsts& c) {
  const TuningExponents e = tuning_exponents(c);
  const double tau = e.tau, iota = e.iota, kappa = e.kappa;
  if (name == "table1.i" || name == "table1.iii") return {-tau / (2.0 * tau + 1.0), "MN/R"};
  if (name == "table1.ii") return {-iota / (2.0 * iota + 1.0), "MN/R"};
  if (name == "table1.iv") return {-iota * tau / (kappa + 2.0 * iota * tau), "MN/R"};
  if (name == "table2.i") return {-tau / (2.0 * tau + 1.0), "N"};
  if (name == "table2.ii") return {-iota / (2.0 * iota + 1.0), "N"};
  if (name == "table2.iii") return {-e.r1, "MN"};
  if (name == "table2.v") return {-e.r2, "MN"};
  if (name == "table2.iv" || name == "table2.vi") return {-1.0 / c.mu, "M"};
  return {std::nan(""), ""};
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "pooled") return ModelKind::pooled;
  if (s == "reduced") return ModelKind::reduced;
  if (s == "graph") return ModelKind::graph;
  throw std::invalid_argument("unknown model '" + s + "'");
}

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::pooled:
      return "pooled";
    case ModelKind::reduced:
      return "reduced";
    case ModelKind::graph:
      return "graph";
  }
  return "unknown";
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, "unknown key '" + key + "' in " + where);
}

json model_to_json(const ModelSpec& m) {
  return {{"type", model_kind_name(m.kind)},
          {"rank", m.rank},
          {"method", m.method == ReducedMethod::als ? "als" : "riemannian"},
          {"init", m.init == ReducedInit::svd_of_pooled ? "svd_of_pooled" : "random"},
          {"force_eta2_zero", m.force_eta2_zero},
          {"bandwidth_scale", m.bandwidth_scale},
          {"graph_kernel", m.graph_kernel == GraphKernel::exp_trunc ? "exp_trunc" : "quartic"}};
}

ModelSpec model_from_json(const json& j) {
  reject_unknown(j, {"type", "rank", "method", "init", "force_eta2_zero", "bandwidth_scale", "graph_kernel"},
                 "model");
  ModelSpec m;
  m.kind = parse_model_kind(j.value("type", std::string("pooled")));
  m.rank = j.value("rank", 1);
  const std::string method = j.value("method", std::string("als"));
  require(method == "als" || method == "riemannian", "model.method must be 'als' or 'riemannian'");
  m.method = method == "als" ? ReducedMethod::als : ReducedMethod::riemannian;
  const std::string init = j.value("init", std::string("svd_of_pooled"));
  require(init == "svd_of_pooled" || init == "random", "model.init must be 'svd_of_pooled' or 'random'");
  m.init = init == "random" ? ReducedInit::random : ReducedInit::svd_of_pooled;
  m.force_eta2_zero = j.value("force_eta2_zero", false);
  m.bandwidth_scale = j.value("bandwidth_scale", 1.0);
  m.graph_kernel = parse_graph_kernel(j.value("graph_kernel", std::string("exp_trunc")));
  require(m.rank >= 1, "model.rank must be >= 1");
  require(m.bandwidth_scale > 0.0, "model.bandwidth_scale must be positive");
  return m;
}

json consts_to_json(const TuningConsts& c) {
  return {{"q", c.q},         {"d", c.d},           {"nu", c.nu},
          {"mu", c.mu},       {"order", c.order},   {"c_k", c.c_k},
          {"c_eta1", c.c_eta1}, {"c_eta2", c.c_eta2}, {"fixed_k", c.fixed_k},
          {"fixed_eta1", c.fixed_eta1}, {"fixed_eta2", c.fixed_eta2}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, {"scenario", "model", "penalty_order", "spline_order", "sweep", "outputs", "master_seed",
                     "threads"},
                 "config");
  ExperimentConfig c;
  c.scenario = j.value("scenario", json::object());
  require(c.scenario.is_object(), "config.scenario must be an object");
  if (!c.scenario.contains("preset")) c.scenario["preset"] = "single_task_smooth";
  // Validates the scenario block early.
  const Scenario probe = scenario_from_json(c.scenario);
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  c.d = j.value("penalty_order", 2);
  c.order = j.value("spline_order", 4);
  require(c.d >= 1 && c.d < c.order, "penalty_order must lie in [1, spline_order)");
  c.outputs = j.value("outputs", std::string("."));
  c.master_seed = j.value("master_seed", std::uint64_t(1));
  c.threads = j.value("threads", 1);
  const json sweep = j.value("sweep", json::object());
  reject_unknown(sweep, {"n_grid", "m_grid", "reps", "tuning_rule", "consts"}, "sweep");
  c.n_grid = sweep.value("n_grid", std::vector<int>{});
  c.m_grid = sweep.value("m_grid", std::vector<int>{});
  c.reps = sweep.value("reps", 1);
  c.tuning_rule = sweep.value("tuning_rule", std::string("table1.ii"));
  require(c.reps >= 1, "sweep.reps must be >= 1");
  for (std::size_t i = 1; i < c.n_grid.size(); ++i) require(c.n_grid[i] > c.n_grid[i - 1], "sweep.n_grid must increase");
  for (std::size_t i = 1; i < c.m_grid.size(); ++i) require(c.m_grid[i] > c.m_grid[i - 1], "sweep.m_grid must increase");
  const auto names = tuning_rule_names();
  require(std::find(names.begin(), names.end(), c.tuning_rule) != names.end(),
          "unknown tuning rule '" + c.tuning_rule + "'");
  c.consts.q = probe.kernel.eigen_decay_q();
  c.consts.d = c.d;
  c.consts.order = c.order;
  c.consts.mu = probe.manifold.mu;
  const json cj = sweep.value("consts", json::object());
  reject_unknown(cj, {"q", "d", "nu", "mu", "order", "c_k", "c_eta1", "c_eta2", "fixed_k", "fixed_eta1", "fixed_eta2"},
                 "sweep.consts");
  c.consts.q = cj.value("q", c.consts.q);
  c.consts.d = cj.value("d", c.consts.d);
  c.consts.nu = cj.value("nu", c.consts.nu);
  c.consts.mu = cj.value("mu", c.consts.mu);
  c.consts.order = cj.value("order", c.consts.order);
  c.consts.c_k = cj.value("c_k", c.consts.c_k);
  c.consts.c_eta1 = cj.value("c_eta1", c.consts.c_eta1);
  c.consts.c_eta2 = cj.value("c_eta2", c.consts.c_eta2);
  c.consts.fixed_k = cj.value("fixed_k", c.consts.fixed_k);
  c.consts.fixed_eta1 = cj.value("fixed_eta1", c.consts.fixed_eta1);
  c.consts.fixed_eta2 = cj.value("fixed_eta2", c.consts.fixed_eta2);
  tuning_exponents(c.consts);
  require(c.consts.fixed_k == 0 || c.consts.fixed_k >= c.consts.order, "sweep.consts.fixed_k must be 0 or at least the spline order");
  require(c.tuning_rule != "fixed" || c.consts.fixed_k > 0, "tuning rule 'fixed' needs sweep.consts.fixed_k");
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"scenario", scenario},
          {"model", model_to_json(model)},
          {"penalty_order", d},
          {"spline_order", order},
          {"sweep",
           {{"n_grid", n_grid},
            {"m_grid", m_grid},
            {"reps", reps},
            {"tuning_rule", tuning_rule},
            {"consts", consts_to_json(consts)}}},
          {"outputs", outputs},
          {"master_seed", master_seed},
          {"threads", threads}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "' is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = cfg.to_json();
  j.erase("threads");  // scheduling does not change results
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const SystemCache::Entry& SystemCache::get(int k) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(k);
  if (it != entries_.end()) return *it->second;
  std::unique_ptr<Entry> e(new Entry{diagonalize(SplineBasis::uniform(k, order_), kernel_, d_), nullptr, nullptr, {}, {}, {}});
  e->sampler = std::make_unique<GPSampler>(kernel_, e->sys.grid, 0);
  e->xnorm = std::make_unique<XNorm>(kernel_, e->sys.grid);
  e->phi_grid = e->sys.basis.eval_matrix(e->sys.grid.t);
  e->pop_cov = population_covariance(e->sys, kernel_);
  const Grid& g = e->sys.grid;
  e->cross = covariate_integrator(e->sys.basis, g) * kernel_.gram(g.t) * g.w.asDiagonal();
  const Entry& ref = *e;
  entries_.emplace(k, std::move(e));
  return ref;
}

ErrorReport evaluate_fit(const SystemCache::Entry& entry, const Scenario& scenario, const Generated& gen,
                         const ModelSpec& model, const Tuning& tuning, const FitResult& fit,
                         const Eigen::MatrixXd& omega) {
  const DiagonalizedSystem& sys = entry.sys;
  const int m = gen.data.m();
  const Eigen::MatrixXd diff = entry.phi_grid.transpose() * fit.b - gen.truth.beta_grid;
  Eigen::VectorXd x_errs(m);
  for (int j = 0; j < m; ++j) x_errs(j) = (*entry.xnorm)(diff.col(j));
  double pen;
  if (model.kind == ModelKind::graph) {
    const double eta2 = model.force_eta2_zero ? 0.0 : tuning.eta2;
    pen = penalty_value(graph_penalty(gen.data, sys.gamma, omega, tuning.eta1, eta2), fit.b);
  } else {
    pen = penalty_value(pooled_penalty(gen.data, sys.gamma, tuning.eta1), fit.b);
  }
  // Population-limit squared-loss fit: (Sigma + M eta1 Gamma) b = E[x <x, beta0>].
  Eigen::MatrixXd a = entry.pop_cov;
  a.diagonal() += double(m) * tuning.eta1 * sys.gamma;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::MatrixXd bbar(sys.dof(), m);
  double spline_bias = 0.0;
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd rhs = entry.cross * gen.truth.beta_grid.col(j);
    bbar.col(j) = ldlt.solve(rhs);
    const Eigen::VectorXd bj = bbar.col(j);
    const double err2 = bj.dot(entry.pop_cov * bj) - 2.0 * bj.dot(rhs) + entry.xnorm->squared(gen.truth.beta_grid.col(j));
    spline_bias += std::max(0.0, err2) + tuning.eta1 * bj.dot(sys.gamma.cwiseProduct(bj));
  }
  const double manifold_bias = model.kind == ModelKind::reduced ? rank_truncation_error(bbar, model.rank) : 0.0;
  (void)scenario;
  return make_error_report(std::move(x_errs), pen, spline_bias, manifold_bias);
}

namespace {

std::uint64_t replicate_seed(std::uint64_t master, int n, int m, int rep) {
  return derive_seed(derive_seed(derive_seed(master, std::uint64_t(n)), std::uint64_t(m)), std::uint64_t(rep));
}

}  // namespace

double tuning_rank(const ModelSpec& model, int m) {
  switch (model.kind) {
    case ModelKind::pooled:
      return m;
    case ModelKind::reduced:
      return model.rank;
    case ModelKind::graph:
      return 1.0;
  }
  return 1.0;
}

FitResult fit_model(const ModelSpec& model, const SystemCache::Entry& entry, const Scenario& scn,
                    const Generated& gen, const Tuning& tuning, std::uint64_t seed, Eigen::MatrixXd* omega) {
  switch (model.kind) {
    case ModelKind::pooled:
      return fit_pooled(gen.data, entry.sys, tuning.eta1);
    case ModelKind::reduced: {
      ReducedOptions ro;
      ro.method = model.method;
      ro.init = model.init;
      ro.seed = derive_seed(seed, 0x4ed);
      return fit_reduced(gen.data, entry.sys, tuning.eta1, model.rank, ro);
    }
    case ModelKind::graph: {
      require(scn.aux.points.rows() == gen.data.m(), "graph model needs a scenario with task covariates (graph_sphere)");
      require(omega != nullptr, "fit_model: graph model needs a Laplacian slot");
      if (omega->size() == 0) {
        const double h = default_bandwidth(gen.data.m(), scn.manifold.mu, model.bandwidth_scale);
        *omega = build_laplacian(scn.aux, h, model.graph_kernel).omega;
      }
      const double eta2 = model.force_eta2_zero ? 0.0 : tuning.eta2;
      return fit_graph(gen.data, entry.sys.gamma, *omega, tuning.eta1, eta2);
    }
  }
  throw std::logic_error("fit_model: unknown model kind");
}

ReplicateOutcome run_replicate(const ExperimentConfig& cfg, int n, int m, int rep,
                               const std::vector<ModelSpec>& models, SystemCache& cache) {
  require(!models.empty(), "run_replicate: no models");
  ReplicateOutcome out;
  out.n = n;
  out.m = m;
  out.rep = rep;
  const std::uint64_t data_seed = replicate_seed(cfg.master_seed, n, m, rep);
  json sj = cfg.scenario;
  sj["m"] = m;
  sj["n"] = n;
  if (!sj.contains("seed")) sj["seed"] = derive_seed(data_seed, 0x7a5c);
  const Scenario scn = scenario_from_json(sj);
  // Paths and noise depend only on the seed and the kernel grid, so models
  // tuned to different K see the same underlying sample.
  std::map<int, Generated> by_k;
  Eigen::MatrixXd omega;
  for (const ModelSpec& model : models) {
    const Tuning tuning = tuning_rule(cfg.tuning_rule, n, m, tuning_rank(model, m), cfg.consts);
    const SystemCache::Entry& entry = cache.get(tuning.k);
    auto it = by_k.find(tuning.k);
    if (it == by_k.end()) it = by_k.emplace(tuning.k, generate(scn, entry.sys, *entry.sampler, data_seed)).first;
    FitResult fit = fit_model(model, entry, scn, it->second, tuning, data_seed, &omega);
    out.reports.push_back(evaluate_fit(entry, scn, it->second, model, tuning, fit, omega));
    out.fits.push_back(std::move(fit));
    out.tunings.push_back(tuning);
  }
  out.tuning = out.tunings.front();
  return out;
}

void parallel_for(int count, int threads, const std::function<void(int)>& f) {
  if (threads <= 0) threads = int(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex err_mu;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first) return;
      }
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first) std::rethrow_exception(first);
}

double median_of(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

RateTable run_rate_sweep(const ExperimentConfig& cfg) {
  std::vector<std::pair<int, int>> grid;
  RateTable table;
  const Scenario base = scenario_from_json(cfg.scenario);
  if (cfg.m_grid.size() > 1) {
    require(cfg.n_grid.size() <= 1, "rate sweep: vary either N or M, not both");
    const int n = cfg.n_grid.empty() ? base.n : cfg.n_grid.front();
    for (int m : cfg.m_grid) grid.emplace_back(n, m);
    table.axis = "m";
  } else {
    require(!cfg.n_grid.empty(), "rate sweep: n_grid is empty");
    const int m = cfg.m_grid.empty() ? base.m : cfg.m_grid.front();
    for (int n : cfg.n_grid) grid.emplace_back(n, m);
    table.axis = "n";
  }
  SystemCache cache(base.kernel, cfg.d, cfg.order);
  const int total = int(grid.size()) * cfg.reps;
  std::vector<double> errs(total);
  std::vector<Tuning> tunings(grid.size());
  parallel_for(total, cfg.threads, [&](int i) {
    const int g = i / cfg.reps, rep = i % cfg.reps;
    try {
      const ReplicateOutcome o = run_replicate(cfg, grid[g].first, grid[g].second, rep, {cfg.model}, cache);
      errs[i] = o.reports.front().combined;
      if (rep == 0) tunings[g] = o.tuning;
    } catch (const std::exception& e) {
      throw NumericalError("replication N=" + std::to_string(grid[g].first) + " M=" +
                           std::to_string(grid[g].second) + " rep=" + std::to_string(rep) + ": " + e.what());
    }
  });
  std::vector<double> axis_vals, medians;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    RatePoint p;
    p.n = grid[g].first;
    p.m = grid[g].second;
    p.tuning = tunings[g];
    p.errors.assign(errs.begin() + g * cfg.reps, errs.begin() + (g + 1) * cfg.reps);
    p.median = median_of(p.errors);
    double s = 0.0, s2 = 0.0;
    for (double e : p.errors) {
      s += e;
      s2 += e * e;
    }
    p.mean = s / cfg.reps;
    p.sd = cfg.reps > 1 ? std::sqrt(std::max(0.0, (s2 - cfg.reps * p.mean * p.mean) / (cfg.reps - 1))) : 0.0;
    axis_vals.push_back(table.axis == "n" ? p.n : p.m);
    medians.push_back(p.median);
    table.points.push_back(std::move(p));
  }
  if (table.points.size() >= 4)
    table.slope = rate_slope(axis_vals, medians);
  else
    table.slope = {std::nan(""), std::nan(""), std::nan("")};
  table.predicted = predicted_rate(cfg.tuning_rule, cfg.consts);
  return table;
}

void write_rates_csv(std::ostream& os, const ExperimentConfig& cfg, const RateTable& table) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
  os << "# config_hash=" << hash.str() << " master_seed=" << cfg.master_seed << "\n";
  os << "# tuning_rule=" << cfg.tuning_rule << " model=" << model_kind_name(cfg.model.kind)
     << " predicted_exponent=" << table.predicted.exponent << " base=" << table.predicted.base << "\n";
  os << "n,m,k,eta1,eta2,reps,median,mean,sd\n";
  os << std::setprecision(10);
  for (const auto& p : table.points)
    os << p.n << "," << p.m << "," << p.tuning.k << "," << p.tuning.eta1 << "," << p.tuning.eta2 << ","
       << p.errors.size() << "," << p.median << "," << p.mean << "," << p.sd << "\n";
  os << "# slope=" << table.slope.slope << " stderr=" << table.slope.slope_stderr << " axis=" << table.axis << "\n";
}

}  // namespace mtfr
