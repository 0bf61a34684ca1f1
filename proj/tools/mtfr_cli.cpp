#include "mtfr/diagnostics.hpp"
#include "mtfr/errors.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/harness.hpp"
#include "mtfr/selftest.hpp"
#include "mtfr/simdiag.hpp"
#include "mtfr/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtfr;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << a(i, j);
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("ragged CSV '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty CSV '" + path.string() + "'");
  Eigen::MatrixXd a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
  return a;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig::from_json(json::object()) : load_config(path);
}

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.master_seed = *seed;
    if (threads > 0) cfg.threads = threads;
  }
};

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--config", c.config, "JSON experiment config");
  if (with_out) app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads");
}

/// Scenario and tuning of a single (N, M) draw described by a config.
struct SingleDraw {
  Scenario scenario;
  Tuning tuning;
  std::uint64_t data_seed = 0;
};

SingleDraw single_draw(const ExperimentConfig& cfg) {
  const Scenario base = scenario_from_json(cfg.scenario);
  const int n = cfg.n_grid.empty() ? base.n : cfg.n_grid.front();
  const int m = cfg.m_grid.empty() ? base.m : cfg.m_grid.front();
  SingleDraw d;
  d.data_seed = cfg.master_seed;
  json sj = cfg.scenario;
  sj["n"] = n;
  sj["m"] = m;
  if (!sj.contains("seed")) sj["seed"] = derive_seed(d.data_seed, 0x7a5c);
  d.scenario = scenario_from_json(sj);
  d.tuning = tuning_rule(cfg.tuning_rule, n, m, tuning_rank(cfg.model, m), cfg.consts);
  return d;
}

int cmd_gen(const Common& c) {
  ExperimentConfig cfg = config_or_default(c.config);
  c.apply(cfg);
  const SingleDraw d = single_draw(cfg);
  SystemCache cache(d.scenario.kernel, cfg.d, cfg.order);
  const auto& entry = cache.get(d.tuning.k);
  const Generated gen = generate(d.scenario, entry.sys, *entry.sampler, d.data_seed);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  json files = json::array();
  Eigen::MatrixXd y(d.scenario.n, d.scenario.m);
  for (int j = 0; j < d.scenario.m; ++j) {
    const std::string name = "x_" + std::to_string(j) + ".csv";
    write_matrix_csv(dir / name, gen.data.x[j]);
    files.push_back(name);
    y.col(j) = gen.data.y[j];
  }
  write_matrix_csv(dir / "y.csv", y);
  json manifest = {{"config", cfg.to_json()},
                   {"config_hash", hex64(config_hash(cfg))},
                   {"scenario", scenario_to_json(d.scenario)},
                   {"data_seed", d.data_seed},
                   {"k", d.tuning.k},
                   {"eta1", d.tuning.eta1},
                   {"eta2", d.tuning.eta2},
                   {"x_files", files},
                   {"y_file", "y.csv"}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote " << d.scenario.m << " task(s), N=" << d.scenario.n << ", K=" << d.tuning.k << " to "
            << dir.string() << "\n";
  return 0;
}

json to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
    rows.push_back(r);
  }
  return rows;
}

int cmd_fit(const Common& c, const std::string& data_dir) {
  ExperimentConfig cfg;
  SingleDraw d;
  const fs::path dir(data_dir);
  std::ifstream min(dir / "manifest.json");
  if (!min) throw UsageError("cannot read '" + (dir / "manifest.json").string() + "'");
  const json manifest = json::parse(min);
  cfg = c.config.empty() ? ExperimentConfig::from_json(manifest.at("config")) : load_config(c.config);
  c.apply(cfg);
  d.scenario = scenario_from_json(manifest.at("scenario"));
  d.tuning = {manifest.at("k").get<int>(), manifest.at("eta1").get<double>(), manifest.at("eta2").get<double>()};
  d.data_seed = manifest.at("data_seed").get<std::uint64_t>();

  SystemCache cache(d.scenario.kernel, cfg.d, cfg.order);
  const auto& entry = cache.get(d.tuning.k);
  Generated gen;
  gen.data.intercept_mode = d.scenario.intercept_mode;
  gen.data.loss = d.scenario.loss;
  const Eigen::MatrixXd y = read_matrix_csv(dir / manifest.at("y_file").get<std::string>());
  const auto files = manifest.at("x_files").get<std::vector<std::string>>();
  check_dims(int(files.size()) == d.scenario.m && y.cols() == d.scenario.m, "fit: bundle task count mismatch");
  for (int j = 0; j < d.scenario.m; ++j) {
    gen.data.x.push_back(read_matrix_csv(dir / files[j]));
    gen.data.y.push_back(y.col(j));
  }
  gen.data.validate();
  gen.truth.beta_grid = d.scenario.beta0_grid(entry.sys.grid.t);

  const ModelSpec& model = cfg.model;
  Eigen::MatrixXd omega;
  const FitResult fit = fit_model(model, entry, d.scenario, gen, d.tuning, d.data_seed, &omega);
  const ErrorReport rep = evaluate_fit(entry, d.scenario, gen, model, d.tuning, fit, omega);
  json out = {{"model", model_kind_name(model.kind)},
              {"k", d.tuning.k},
              {"eta1", d.tuning.eta1},
              {"eta2", d.tuning.eta2},
              {"objective", fit.objective},
              {"grad_norm", fit.grad_norm},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"objective_trace", fit.objective_trace},
              {"alpha", std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size())},
              {"b", to_json(fit.b)},
              {"report",
               {{"x_norm_errs", std::vector<double>(rep.x_norm_errs.data(),
                                                    rep.x_norm_errs.data() + rep.x_norm_errs.size())},
                {"penalty", rep.penalty_val},
                {"combined", rep.combined},
                {"spline_bias", rep.spline_bias},
                {"manifold_bias", rep.manifold_bias}}}};
  fs::create_directories(c.out);
  std::ofstream(fs::path(c.out) / "fit.json") << out.dump(2) << "\n";
  std::cout << std::setprecision(12) << "objective=" << fit.objective << " combined_error=" << rep.combined
            << " converged=" << (fit.converged ? "true" : "false") << "\n";
  return 0;
}

int cmd_rates(const Common& c) {
  if (c.config.empty()) throw UsageError("rates: --config is required");
  ExperimentConfig cfg = load_config(c.config);
  c.apply(cfg);
  const RateTable table = run_rate_sweep(cfg);
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / "rates.csv";
  std::ofstream out(path);
  write_rates_csv(out, cfg, table);
  write_rates_csv(std::cout, cfg, table);
  return 0;
}

int cmd_graph_eig(int mu, int m, const std::string& out, double scale, int lo, int hi, std::uint64_t seed,
                  const std::string& manifold, const std::string& kernel) {
  const AuxiliarySample s = sample_manifold(parse_manifold(manifold, mu), m, seed);
  const Laplacian lap = build_laplacian(s, default_bandwidth(m, mu, scale), parse_graph_kernel(kernel));
  const SpectralGrowth sg = spectral_growth(lap, lo, hi);
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write '" + out + "'");
  write_eigen_csv(os, sg, lo, hi);
  std::cout << "slope=" << sg.slope << " stderr=" << sg.slope_stderr << " expected=" << 2.0 / mu
            << " components=" << lap.components << "\n";
  return 0;
}

int cmd_diag(const Common& c, int k, const std::string& out) {
  ExperimentConfig cfg = config_or_default(c.config);
  const Scenario scn = scenario_from_json(cfg.scenario);
  const DiagonalizedSystem sys = diagonalize(SplineBasis::uniform(k, cfg.order), scn.kernel, cfg.d);
  const Eigen::MatrixXd cov = population_covariance(sys, scn.kernel);
  std::cout << "K=" << k << " order=" << cfg.order << " d=" << cfg.d << " kernel=" << scn.kernel.name() << "\n"
            << "pbar=" << sys.pbar << " cond(Q)=" << sys.cond_q << "\n"
            << "max covariance deviation from pattern=" << (cov - sys.sigma_pattern).cwiseAbs().maxCoeff() << "\n";
  if (k >= 2 * cfg.d + 8) std::cout << "gamma log-log slope=" << gamma_growth_check(sys) << "\n";
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write '" + out + "'");
    write_gamma_csv(os, sys);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task functional linear regression toolkit"};
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("gen", "generate a dataset bundle (CSV + manifest.json)");
  add_common(gen, common);

  auto* fit = app.add_subcommand("fit", "fit one model on a dataset bundle");
  add_common(fit, common);
  std::string data_dir;
  fit->add_option("--data", data_dir, "dataset bundle directory")->required();

  auto* rates = app.add_subcommand("rates", "run a rate sweep");
  add_common(rates, common);

  auto* geig = app.add_subcommand("graph-eig", "graph Laplacian eigenvalue growth");
  int mu = 2, m = 2000, lo = 5, hi = 100;
  double scale = 2.0;
  std::string eig_out = "eig.csv", manifold = "sphere", gkernel = "exp_trunc";
  std::uint64_t gseed = 1;
  geig->add_option("--mu", mu, "intrinsic dimension");
  geig->add_option("--m", m, "number of vertices");
  geig->add_option("--out", eig_out, "output CSV");
  geig->add_option("--scale", scale, "bandwidth scale");
  geig->add_option("--lo", lo, "first eigenvalue index of the fit window (1-based)");
  geig->add_option("--hi", hi, "last eigenvalue index of the fit window");
  geig->add_option("--seed", gseed, "sampling seed");
  geig->add_option("--manifold", manifold, "sphere, torus or euclidean_cube");
  geig->add_option("--kernel", gkernel, "exp_trunc or quartic");

  auto* diag = app.add_subcommand("diag", "simultaneous diagonalization report");
  add_common(diag, common, false);
  int diag_k = 20;
  std::string diag_out;
  diag->add_option("--k", diag_k, "number of basis functions");
  diag->add_option("--out", diag_out, "gamma CSV");

  app.add_subcommand("selftest", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(common);
    if (*fit) return cmd_fit(common, data_dir);
    if (*rates) return cmd_rates(common);
    if (*geig) return cmd_graph_eig(mu, m, eig_out, scale, lo, hi, gseed, manifold, gkernel);
    if (*diag) return cmd_diag(common, diag_k, diag_out);
    return run_selftest(std::cout) == 0 ? 0 : 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
