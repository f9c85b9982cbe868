#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drregret/config.hpp"
#include "drregret/regret.hpp"

namespace drr {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitValidation = 2,
  kExitIo = 3,
};

// Fixed data-file format: 17 significant digits, locale independent.
std::string format_double(double value);

// Stationary LQR gain of the configured system replicated over `horizon`.
Policy stationary_policy(const ExperimentConfig& config, int horizon);

struct BoundSweepRow {
  double alpha = 0.0;
  int horizon = 0;
  double bound_total = 0.0;
  double trace_sum = 0.0;
  double g_sum = 0.0;
};

// One row per (alpha, horizon), sorted by (horizon, alpha).
std::vector<BoundSweepRow> bound_sweep(const ExperimentConfig& config);

// Error-process statistics at config.horizon from config.n_rollouts paired
// rollouts. Throws InvalidInput when n_rollouts < 10.
std::vector<ErrorStatRow> error_percentiles(const ExperimentConfig& config);

struct SimulationResult {
  RegretReport report;
  std::vector<double> costs_true;
  std::vector<double> costs_worst;
};

SimulationResult run_simulation(const ExperimentConfig& config);

nlohmann::json to_json(const RegretReport& report);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
};

// Cross-module oracle suite driven by config.validation.
ValidationReport run_validation(const ExperimentConfig& config);

nlohmann::json to_json(const ValidationReport& report);

// CSV / JSON writers. Throw IoError when the file cannot be written.
void write_bound_sweep_csv(const std::filesystem::path& path,
                           const std::vector<BoundSweepRow>& rows);
void write_error_percentiles_csv(const std::filesystem::path& path,
                                 const std::vector<ErrorStatRow>& rows,
                                 const std::vector<double>& percentiles);
void write_costs_csv(const std::filesystem::path& path, const std::vector<double>& costs);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// Full commands: compute, write the data files under `out_dir` plus
// manifest.json, and return the data files written.
std::vector<std::filesystem::path> cmd_bound_sweep(const ExperimentConfig& config,
                                                   const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_error_percentiles(const ExperimentConfig& config,
                                                         const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& config,
                                                const std::filesystem::path& out_dir);
// Also reports the overall verdict through `passed`.
std::vector<std::filesystem::path> cmd_validate(const ExperimentConfig& config,
                                                const std::filesystem::path& out_dir,
                                                bool& passed);

// Hex SHA-256 of a file's content.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace drr
