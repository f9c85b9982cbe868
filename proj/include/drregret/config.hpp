#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "drregret/linsys.hpp"
#include "drregret/regret.hpp"
#include "drregret/uncertainty.hpp"

namespace drr {

// Tolerances and sizes of the cross-module oracle suite run by `validate`.
struct ValidationSettings {
  int instances = 100;
  int w2_instances = 50;
  int mc_rollouts = 100000;
  int moment_step = 10;
  double quadratic_tol = 1e-8;
  double linear_tol = 1e-6;
  double w2_tol = 1e-10;
  double moment_rel_tol_gaussian = 0.05;
  double moment_rel_tol_laplacian = 0.07;
  double pseudo_regret_tol = 1e-10;

  friend bool operator==(const ValidationSettings&, const ValidationSettings&) = default;
};

struct ExperimentConfig {
  // system
  MatrixXd A, B, D;
  // moments
  VectorXd mu_x0;
  MatrixXd Sigma_x0, Sigma_w;
  // cost
  MatrixXd Q, R, Q_f;
  int horizon = 100;
  // sweep
  std::vector<double> alphas;
  std::vector<int> horizons;
  double alpha = 0.2;
  int n_samples = 100;
  int n_rollouts = 10000;
  // distributions
  Family true_family = Family::laplacian;
  Family worst_family = Family::gaussian;
  bool shared_streams = false;

  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<double> percentiles;
  int threads = 0;
  Tolerances tolerances;
  ValidationSettings validation;

  bool operator==(const ExperimentConfig& other) const;
};

// Vehicle-steering instance: the two-state steering model with one input,
// D = I, Q = Q_f = 10 I, R = 1, alpha = 0.2, T = 100, N = 100.
ExperimentConfig default_config();

// Overlays the keys present in `doc` on default_config() and validates the
// result. Throws ConfigError naming the offending field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Full serialisation; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

// Throws ConfigError naming the first invalid field.
void validate_config(const ExperimentConfig& config);

LinearSystem make_system(const ExperimentConfig& config);
CostSpec make_cost(const ExperimentConfig& config, int horizon);
MomentAmbiguitySet x0_set(const ExperimentConfig& config);
MomentAmbiguitySet w_set(const ExperimentConfig& config);
ModelPair true_models(const ExperimentConfig& config);
ModelPair worst_models(const ExperimentConfig& config);
RoleStreams role_streams(const ExperimentConfig& config);

}  // namespace drr
