#pragma once

#include "mtfr/estimators.hpp"
#include "mtfr/graph.hpp"
#include "mtfr/processes.hpp"
#include "mtfr/simdiag.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>

namespace mtfr {

enum class Preset { single_task_smooth, reduced_rank, graph_sphere };

Preset parse_preset(const std::string& name);
std::string preset_name(Preset p);

/// A synthetic experiment: covariate process, true slope surface, task layout
/// and noise model.
struct Scenario {
  Preset preset = Preset::single_task_smooth;
  CovKernel kernel = CovKernel::brownian();
  ManifoldSpec manifold;
  int m = 1;
  int n = 100;
  double noise_sd = 0.5;
  LossKind loss;
  InterceptMode intercept_mode = InterceptMode::none;
  int rank_true = 0;
  std::uint64_t seed = 0;
  /// Task loadings for reduced_rank (M x R0); drawn from `seed` by make_scenario.
  Eigen::MatrixXd loadings;
  /// Auxiliary task covariates for graph_sphere (M x s), drawn from `seed`.
  AuxiliarySample aux;

  /// True slope of task `task` at t.
  double beta0(int task, double t) const;
  /// G x M matrix of beta0 on the points t.
  Eigen::MatrixXd beta0_grid(const Eigen::VectorXd& t) const;
};

/// Preset defaults with JSON overrides (keys: kernel, m, n, noise_sd, loss,
/// w, smooth_eps, intercept, rank_true, mu, seed). Throws on unknown keys or
/// invalid values.
Scenario make_scenario(Preset preset, const nlohmann::json& overrides = nlohmann::json::object());

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

struct GroundTruth {
  Eigen::MatrixXd b0;         ///< K x M, L2 projection of beta0 onto the working basis
  Eigen::MatrixXd beta_grid;  ///< G x M, beta0 on the system grid
  Eigen::MatrixXd signal;     ///< N x M, <x_nm, beta0_m> by grid quadrature
};

struct Generated {
  TaskDataset data;
  GroundTruth truth;
};

/// Draws N paths per task on the system grid, integrates them against the
/// working basis, forms <x, beta0> from the true surface and samples the
/// responses. Task m uses the stream derive_seed(seed, m), so results do not
/// depend on scheduling.
Generated generate(const Scenario& scenario, const DiagonalizedSystem& sys, std::uint64_t seed);

/// Same, reusing an already factorized sampler (its grid must match sys.grid).
Generated generate(const Scenario& scenario, const DiagonalizedSystem& sys, const GPSampler& sampler,
                   std::uint64_t seed);

/// w-quantile of the Student-t distribution with 4 degrees of freedom.
double student_t4_quantile(double w);

}  // namespace mtfr
