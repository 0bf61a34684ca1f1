#pragma once

#include "mtfr/diagnostics.hpp"
#include "mtfr/estimators.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/simdiag.hpp"
#include "mtfr/simgen.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace mtfr {

/// Smoothness constants entering the rate tables; c_* scale the prescribed
/// orders (all 1 by default).
struct TuningConsts {
  double q = 1.0;
  double d = 2.0;
  double nu = 2.0;
  double mu = 2.0;
  int order = 4;
  double c_k = 1.0;
  double c_eta1 = 1.0;
  double c_eta2 = 1.0;
  /// fixed_k > 0 pins K under every rule; the etas below are used by the
  /// "fixed" rule only.
  int fixed_k = 0;
  double fixed_eta1 = 0.0;
  double fixed_eta2 = 0.0;
};

struct TuningExponents {
  double tau = 0.0;
  double iota = 0.0;
  double kappa = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

TuningExponents tuning_exponents(const TuningConsts& c);

struct Tuning {
  int k = 0;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// Rules: "table1.i" .. "table1.iv", "table2.i" .. "table2.vi", "fixed".
/// K is rounded to the nearest integer and floored at the spline order.
Tuning tuning_rule(const std::string& name, double n, double m, double r, const TuningConsts& c);
std::vector<std::string> tuning_rule_names();

/// Predicted error exponent of a rule, and whether it is in N, MN, MN/R or M.
struct RatePrediction {
  double exponent = 0.0;
  std::string base;
};
RatePrediction predicted_rate(const std::string& name, const TuningConsts& c);

enum class ModelKind { pooled, reduced, graph };
ModelKind parse_model_kind(const std::string& s);
std::string model_kind_name(ModelKind k);

struct ModelSpec {
  ModelKind kind = ModelKind::pooled;
  int rank = 1;
  ReducedMethod method = ReducedMethod::als;
  ReducedInit init = ReducedInit::svd_of_pooled;
  /// Graph model only: ignore the rule's eta2 and fit with eta2 = 0.
  bool force_eta2_zero = false;
  double bandwidth_scale = 1.0;
  GraphKernel graph_kernel = GraphKernel::exp_trunc;
};

struct ExperimentConfig {
  nlohmann::json scenario = nlohmann::json::object();  ///< preset + overrides
  ModelSpec model;
  int d = 2;
  int order = 4;
  std::vector<int> n_grid;
  std::vector<int> m_grid;
  int reps = 1;
  std::string tuning_rule = "table1.ii";
  TuningConsts consts;
  std::string outputs = ".";
  std::uint64_t master_seed = 1;
  int threads = 1;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the canonical JSON serialization.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Diagonalized systems and samplers keyed by K; safe for concurrent use.
class SystemCache {
 public:
  SystemCache(CovKernel kernel, int d, int order) : kernel_(std::move(kernel)), d_(d), order_(order) {}
  struct Entry {
    DiagonalizedSystem sys;
    std::unique_ptr<GPSampler> sampler;
    std::unique_ptr<XNorm> xnorm;
    Eigen::MatrixXd phi_grid;  ///< K x G basis values on the grid
    Eigen::MatrixXd pop_cov;   ///< population covariance of the basis integrals
    Eigen::MatrixXd cross;     ///< K x G map from beta on the grid to E[x_vec <x, beta>]
  };
  const Entry& get(int k);
  const CovKernel& kernel() const { return kernel_; }

 private:
  CovKernel kernel_;
  int d_;
  int order_;
  std::mutex mu_;
  std::map<int, std::unique_ptr<Entry>> entries_;
};

struct ReplicateOutcome {
  int n = 0;
  int m = 0;
  int rep = 0;
  Tuning tuning;                     ///< tuning of the first model
  std::vector<Tuning> tunings;       ///< one per model
  std::vector<ErrorReport> reports;  ///< one per model, in request order
  std::vector<FitResult> fits;
};

/// R entering the table1.* rules: M for the unconstrained pooled fit,
/// the rank for the reduced model, 1 for the graph model.
double tuning_rank(const ModelSpec& model, int m);

/// Fits `model` with the given tuning; `omega` caches the graph Laplacian
/// (built on first use when empty).
FitResult fit_model(const ModelSpec& model, const SystemCache::Entry& entry, const Scenario& scn,
                    const Generated& gen, const Tuning& tuning, std::uint64_t seed, Eigen::MatrixXd* omega);

/// One scenario draw at (N, M) with seed derive_seed(master, stream), fitted
/// by every model in `models` on the same data, each with its own tuning.
ReplicateOutcome run_replicate(const ExperimentConfig& cfg, int n, int m, int rep,
                               const std::vector<ModelSpec>& models, SystemCache& cache);

/// Error report of a fit against the scenario truth.
ErrorReport evaluate_fit(const SystemCache::Entry& entry, const Scenario& scenario, const Generated& gen,
                         const ModelSpec& model, const Tuning& tuning, const FitResult& fit,
                         const Eigen::MatrixXd& omega);

struct RatePoint {
  int n = 0;
  int m = 0;
  Tuning tuning;
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> errors;  ///< combined error per replication, in rep order
};

struct RateTable {
  std::vector<RatePoint> points;
  std::string axis;  ///< "n" or "m"
  LineFit slope;
  RatePrediction predicted;
};

/// Runs reps replications per grid point on a pool of cfg.threads workers.
/// Results are stored by (grid point, rep) so the table does not depend on
/// scheduling. A failing replication aborts the sweep with context.
RateTable run_rate_sweep(const ExperimentConfig& cfg);

/// Runs f(i) for i in [0, count) on `threads` workers; rethrows the first
/// failure after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& f);

void write_rates_csv(std::ostream& os, const ExperimentConfig& cfg, const RateTable& table);

double median_of(std::vector<double> v);

}  // namespace mtfr
