#include "drregret/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "drregret/errors.hpp"
#include "drregret/risk.hpp"
#include "drregret/wasserstein.hpp"

#ifndef DRREGRET_VERSION
#define DRREGRET_VERSION "unknown"
#endif

namespace drr {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

namespace {

// Shortest round-trip text, used for column labels such as p5 or p2.5.
std::string format_label(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error("format_label: conversion failed");
  return std::string(buf.data(), end);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const ExperimentConfig& config, const fs::path& out_dir,
                    const std::string& command, const std::string& started,
                    const std::vector<fs::path>& files) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = DRREGRET_VERSION;
  manifest["seed"] = config.seed;
  manifest["config"] = to_json(config);
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  json list = json::array();
  for (const auto& f : files) {
    list.push_back({{"path", f.filename().string()}, {"sha256", file_sha256(f)}});
  }
  manifest["files"] = list;
  write_json(out_dir / "manifest.json", manifest);
}

MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return symmetrize(g * g.transpose());
}

double brute_force_w2(const MatrixXd& x, const MatrixXd& y) {
  std::vector<int> perm(static_cast<std::size_t>(x.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) total += (x.col(i) - y.col(perm[i])).squaredNorm();
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(x.cols()));
}

ValidationCheck make_check(std::string name, double measured, double tolerance,
                           std::string detail) {
  ValidationCheck c;
  c.name = std::move(name);
  c.measured = measured;
  c.tolerance = tolerance;
  c.passed = std::isfinite(measured) && measured <= tolerance;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

Policy stationary_policy(const ExperimentConfig& config, int horizon) {
  const LinearSystem sys = make_system(config);
  const StationaryLqr lqr = dare_stationary(sys, make_cost(config, horizon));
  return Policy::constant(lqr.K, horizon);
}

std::vector<BoundSweepRow> bound_sweep(const ExperimentConfig& config) {
  const LinearSystem sys = make_system(config);
  const MatrixXd gain = dare_stationary(sys, make_cost(config, config.horizon)).K;
  const RoleStreams streams = role_streams(config);

  std::vector<int> horizons = config.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  std::vector<double> alphas = config.alphas;
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

  std::vector<BoundSweepRow> rows;
  for (int horizon : horizons) {
    const CostSpec cost = make_cost(config, horizon);
    const Policy policy = Policy::constant(gain, horizon);
    const MomentTrajectory moments =
        propagate_moments(sys, policy, x0_set(config), w_set(config), horizon);
    const ErrorModel errors = error_model(moments);
    const EffectiveWeights weights = effective_weights(cost, policy);
    RolloutOptions options;
    options.threads = config.threads;
    options.keep_states = true;
    const RolloutBatch nominal = simulate_rollouts(sys, policy, cost, worst_models(config),
                                                   config.n_samples, streams.worst_stream,
                                                   options);
    for (double alpha : alphas) {
      const BoundDecomposition bound =
          regret_bound(errors, weights, RiskLevel(alpha), nominal.states);
      rows.push_back({alpha, horizon, bound.total, bound.trace_sum(), bound.g_sum()});
    }
  }
  return rows;
}

std::vector<ErrorStatRow> error_percentiles(const ExperimentConfig& config) {
  if (config.n_rollouts < 10) {
    throw InvalidInput("error-percentiles needs n_rollouts >= 10, got " +
                       std::to_string(config.n_rollouts));
  }
  const LinearSystem sys = make_system(config);
  const CostSpec cost = make_cost(config, config.horizon);
  const Policy policy = stationary_policy(config, config.horizon);
  const RoleStreams streams = role_streams(config);
  RolloutOptions options;
  options.threads = config.threads;
  options.keep_states = true;
  const RolloutBatch true_batch = simulate_rollouts(sys, policy, cost, true_models(config),
                                                    config.n_rollouts, streams.true_stream,
                                                    options);
  const RolloutBatch worst_batch = simulate_rollouts(sys, policy, cost, worst_models(config),
                                                     config.n_rollouts, streams.worst_stream,
                                                     options);
  return error_statistics(true_batch, worst_batch, config.percentiles);
}

SimulationResult run_simulation(const ExperimentConfig& config) {
  const LinearSystem sys = make_system(config);
  const int horizon = config.horizon;
  const CostSpec cost = make_cost(config, horizon);
  const Policy policy = stationary_policy(config, horizon);
  const RoleStreams streams = role_streams(config);
  const RiskLevel alpha(config.alpha);

  const ModelPair truth = true_models(config);
  const ModelPair worst = worst_models(config);
  DistributionalRegret dr = empirical_distributional_regret(
      sys, policy, cost, truth, worst, alpha, config.n_rollouts, streams, config.threads);

  const MomentTrajectory moments_true =
      propagate_moments(sys, policy, truth.x0.moments, truth.w.moments, horizon);
  const MomentTrajectory moments_worst =
      propagate_moments(sys, policy, worst.x0.moments, worst.w.moments, horizon);
  const EffectiveWeights weights = effective_weights(cost, policy);

  RolloutOptions options;
  options.threads = config.threads;
  options.keep_states = true;
  const RolloutBatch nominal = simulate_rollouts(sys, policy, cost, worst, config.n_samples,
                                                 streams.worst_stream, options);

  SimulationResult out;
  RegretReport& report = out.report;
  report.pseudo_regret_analytic = pseudo_regret(moments_true, moments_worst, weights);
  report.pseudo_regret_mc =
      monte_carlo_pseudo_regret(dr.costs_true, dr.costs_worst, streams.worst_stream);
  report.empirical_distributional_regret = dr.regret;
  report.cvar_true = dr.cvar_true;
  report.cvar_worst = dr.cvar_worst;
  report.bound = regret_bound(error_model(moments_worst), weights, alpha, nominal.states);
  report.alpha = config.alpha;
  report.horizon = horizon;
  report.n_samples = config.n_samples;
  report.n_rollouts = config.n_rollouts;
  out.costs_true = std::move(dr.costs_true);
  out.costs_worst = std::move(dr.costs_worst);
  return out;
}

json to_json(const RegretReport& r) {
  json doc;
  doc["pseudo_regret_analytic"] = r.pseudo_regret_analytic;
  doc["pseudo_regret_mc"] = {{"value", r.pseudo_regret_mc.value},
                             {"std_error", r.pseudo_regret_mc.std_error}};
  doc["empirical_distributional_regret"] = {
      {"value", r.empirical_distributional_regret.value},
      {"std_error", r.empirical_distributional_regret.std_error}};
  doc["cvar_true"] = r.cvar_true;
  doc["cvar_worst"] = r.cvar_worst;
  doc["bound_total"] = r.bound.total;
  doc["bound_trace_terms"] = r.bound.trace_terms;
  doc["bound_G_terms"] = r.bound.g_terms;
  doc["alpha"] = r.alpha;
  doc["T"] = r.horizon;
  doc["N"] = r.n_samples;
  doc["n_rollouts"] = r.n_rollouts;
  return doc;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport run_validation(const ExperimentConfig& config) {
  const ValidationSettings& s = config.validation;
  RandomStream stream(RngSpec{config.seed, 0x7a11da7eULL});
  auto& rng = stream.engine();
  std::uniform_int_distribution<int> pick_dim(1, 5);
  std::normal_distribution<double> normal;
  const std::array<double, 4> alpha_grid{0.05, 0.2, 0.5, 0.9};
  ValidationReport report;

  {
    double worst = 0.0;
    for (int i = 0; i < s.instances; ++i) {
      const int d = pick_dim(rng);
      const MatrixXd cov = random_psd(rng, d);
      const MatrixXd P = random_psd(rng, d);
      const RiskLevel alpha(alpha_grid[static_cast<std::size_t>(i) % alpha_grid.size()]);
      const double closed = worst_case_cvar_quadratic(cov, P, alpha);
      const double dual = worst_case_cvar_quadratic_general(
                              SecondMomentMatrix::from_covariance(cov), P, VectorXd::Zero(d),
                              0.0, alpha)
                              .value;
      worst = std::max(worst, std::abs(closed - dual));
    }
    report.checks.push_back(make_check("quadratic_closed_form_vs_dual", worst, s.quadratic_tol,
                                       "max |Tr(Sigma P)/alpha - dual| over random instances"));
  }
  {
    double worst = 0.0;
    for (int i = 0; i < s.instances; ++i) {
      const int d = pick_dim(rng);
      const MatrixXd cov = random_psd(rng, d);
      VectorXd q(d);
      for (int j = 0; j < d; ++j) q[j] = normal(rng);
      const RiskLevel alpha(alpha_grid[static_cast<std::size_t>(i) % alpha_grid.size()]);
      const double closed = worst_case_cvar_linear(cov, q, alpha);
      const double dual = worst_case_cvar_quadratic_general(
                              SecondMomentMatrix::from_covariance(cov), MatrixXd::Zero(d, d), q,
                              0.0, alpha)
                              .value;
      worst = std::max(worst, std::abs(closed - dual));
    }
    report.checks.push_back(make_check("linear_closed_form_vs_dual", worst, s.linear_tol,
                                       "max |closed form - dual| at P = 0, r = 0"));
  }
  {
    std::uniform_int_distribution<int> pick_atoms(1, 6);
    std::uniform_int_distribution<int> pick_d(1, 4);
    double worst = 0.0;
    for (int i = 0; i < s.w2_instances; ++i) {
      const int m = pick_atoms(rng);
      const int d = pick_d(rng);
      MatrixXd x(d, m), y(d, m);
      for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = normal(rng);
      for (Eigen::Index j = 0; j < y.size(); ++j) y.data()[j] = normal(rng);
      const double fast = w2_empirical(EmpiricalDistribution(x), EmpiricalDistribution(y));
      worst = std::max(worst, std::abs(fast - brute_force_w2(x, y)));
    }
    report.checks.push_back(make_check("w2_assignment_vs_bruteforce", worst, s.w2_tol,
                                       "max |assignment - exhaustive permutations|"));
  }
  {
    const LinearSystem sys = make_system(config);
    const int steps = s.moment_step;
    const CostSpec cost = make_cost(config, steps);
    const Policy policy = stationary_policy(config, steps);
    const MomentTrajectory moments =
        propagate_moments(sys, policy, x0_set(config), w_set(config), steps);
    const MatrixXd& reference = moments.covs.back();
    RolloutOptions options;
    options.threads = config.threads;
    options.keep_states = true;
    for (Family family : {Family::gaussian, Family::laplacian}) {
      const ModelPair models{DistributionModel{family, x0_set(config)},
                             DistributionModel{family, w_set(config)}};
      const RngSpec spec{config.seed, 0x303e27ULL + static_cast<std::uint64_t>(family)};
      const RolloutBatch batch =
          simulate_rollouts(sys, policy, cost, models, s.mc_rollouts, spec, options);
      const MatrixXd estimate = sample_covariance(batch.states.back());
      const double err = reference.norm() > 0.0 ? relative_frobenius_error(estimate, reference)
                                                : estimate.norm();
      const bool gaussian = family == Family::gaussian;
      report.checks.push_back(make_check(
          std::string("moment_propagation_") + std::string(to_string(family)), err,
          gaussian ? s.moment_rel_tol_gaussian : s.moment_rel_tol_laplacian,
          "relative Frobenius error of the sample covariance at k = " + std::to_string(steps)));
    }
  }
  {
    const LinearSystem sys = make_system(config);
    const CostSpec cost = make_cost(config, config.horizon);
    const Policy policy = stationary_policy(config, config.horizon);
    const ModelPair truth = true_models(config);
    const ModelPair worst = worst_models(config);
    const double value = pseudo_regret(
        propagate_moments(sys, policy, truth.x0.moments, truth.w.moments, config.horizon),
        propagate_moments(sys, policy, worst.x0.moments, worst.w.moments, config.horizon),
        effective_weights(cost, policy));
    report.checks.push_back(make_check("pseudo_regret_zero", std::abs(value),
                                       s.pseudo_regret_tol,
                                       "|analytic pseudo regret| under matched moments"));
  }
  return report;
}

json to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"measured", c.measured},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  }
  return {{"passed", report.passed()}, {"checks", checks}};
}

void write_bound_sweep_csv(const fs::path& path, const std::vector<BoundSweepRow>& rows) {
  auto out = open_output(path);
  out << "alpha,horizon,bound_total,trace_sum,g_sum\n";
  for (const auto& r : rows) {
    out << format_double(r.alpha) << ',' << r.horizon << ',' << format_double(r.bound_total)
        << ',' << format_double(r.trace_sum) << ',' << format_double(r.g_sum) << '\n';
  }
  finish(out, path);
}

void write_error_percentiles_csv(const fs::path& path, const std::vector<ErrorStatRow>& rows,
                                 const std::vector<double>& percentiles) {
  auto out = open_output(path);
  out << "k,component,mean";
  for (double p : percentiles) out << ",p" << format_label(p);
  out << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << r.component << ',' << format_double(r.mean);
    for (double v : r.percentiles) out << ',' << format_double(v);
    out << '\n';
  }
  finish(out, path);
}

void write_costs_csv(const fs::path& path, const std::vector<double>& costs) {
  auto out = open_output(path);
  out << "rollout,cost\n";
  for (std::size_t i = 0; i < costs.size(); ++i) out << i << ',' << format_double(costs[i]) << '\n';
  finish(out, path);
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

std::vector<fs::path> cmd_bound_sweep(const ExperimentConfig& config, const fs::path& out_dir) {
  const std::string started = utc_now();
  const auto rows = bound_sweep(config);
  ensure_dir(out_dir);
  const fs::path csv = out_dir / "bound_sweep.csv";
  write_bound_sweep_csv(csv, rows);
  write_manifest(config, out_dir, "bound-sweep", started, {csv});
  return {csv};
}

std::vector<fs::path> cmd_error_percentiles(const ExperimentConfig& config,
                                            const fs::path& out_dir) {
  const std::string started = utc_now();
  const auto rows = error_percentiles(config);
  ensure_dir(out_dir);
  const fs::path csv = out_dir / "error_percentiles.csv";
  write_error_percentiles_csv(csv, rows, config.percentiles);
  write_manifest(config, out_dir, "error-percentiles", started, {csv});
  return {csv};
}

std::vector<fs::path> cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir) {
  const std::string started = utc_now();
  const SimulationResult result = run_simulation(config);
  ensure_dir(out_dir);
  const std::vector<fs::path> files{out_dir / "costs_true.csv", out_dir / "costs_worst.csv",
                                    out_dir / "regret.json"};
  write_costs_csv(files[0], result.costs_true);
  write_costs_csv(files[1], result.costs_worst);
  write_json(files[2], to_json(result.report));
  write_manifest(config, out_dir, "simulate", started, files);
  return files;
}

std::vector<fs::path> cmd_validate(const ExperimentConfig& config, const fs::path& out_dir,
                                   bool& passed) {
  const std::string started = utc_now();
  const ValidationReport report = run_validation(config);
  ensure_dir(out_dir);
  const fs::path path = out_dir / "validate.json";
  write_json(path, to_json(report));
  write_manifest(config, out_dir, "validate", started, {path});
  passed = report.passed();
  return {path};
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

}  // namespace drr
