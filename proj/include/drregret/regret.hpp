#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "drregret/linsys.hpp"
#include "drregret/risk.hpp"
#include "drregret/uncertainty.hpp"

namespace drr {

// Q*_k = Q + K_k^T R K_k for k < T and Q*_T = Q_f, so that the cost of a
// linear-feedback rollout is sum_k x_k^T Q*_k x_k.
struct EffectiveWeights {
  std::vector<MatrixXd> Q;

  int horizon() const noexcept { return static_cast<int>(Q.size()) - 1; }
};

EffectiveWeights effective_weights(const CostSpec& cost, const Policy& policy);

// sum_k Tr(Q*_k Sigma_k) + mu_k^T Q*_k mu_k.
double expected_cost_analytic(const MomentTrajectory& moments,
                              const EffectiveWeights& weights);

// Error process e_k = x_true_k - x_worst_k for two independent rollouts with
// matched moments: zero mean, covariance 2 Sigma_k.
struct ErrorModel {
  std::vector<MatrixXd> covs;
  std::vector<SecondMomentMatrix> omegas;

  int horizon() const noexcept { return static_cast<int>(covs.size()) - 1; }
};

ErrorModel error_model(const MomentTrajectory& moments);

// Expected-cost difference between two moment trajectories. Vanishes
// whenever the moments agree, whatever the distributions behind them.
double pseudo_regret(const MomentTrajectory& moments_true,
                     const MomentTrajectory& moments_worst,
                     const EffectiveWeights& weights);

// Distributions of the initial state and of the (i.i.d.) disturbance.
struct ModelPair {
  DistributionModel x0;
  DistributionModel w;
};

struct RolloutOptions {
  int threads = 0;           // 0 = hardware concurrency
  bool keep_states = false;  // fill RolloutBatch::states
};

struct RolloutBatch {
  std::vector<double> costs;     // one per rollout
  std::vector<MatrixXd> states;  // per k = 0..T, n x count (when kept)
};

// Closed-loop rollouts; rollout i draws x0 then w_0..w_{T-1} from
// rng.substream(i), so results do not depend on the thread count.
RolloutBatch simulate_rollouts(const LinearSystem& sys, const Policy& policy,
                               const CostSpec& cost, const ModelPair& models,
                               int count, const RngSpec& rng,
                               const RolloutOptions& options = {});

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

using Statistic = std::function<double(std::span<const double>)>;

// Bootstrap standard error of stat(a) - stat(b), resampling a and b
// independently.
double bootstrap_std_error_difference(std::span<const double> a,
                                      std::span<const double> b,
                                      const Statistic& stat, int resamples,
                                      const RngSpec& rng);

inline constexpr int kBootstrapResamples = 200;

// Stream assignment per role: the true model draws from `true_stream`, the
// worst-case model from `worst_stream`.
struct RoleStreams {
  RngSpec true_stream;
  RngSpec worst_stream;

  // Two independent streams derived from one spec.
  static RoleStreams independent(const RngSpec& base);
  // Both roles share one stream (common random numbers).
  static RoleStreams shared(const RngSpec& base);
};

struct DistributionalRegret {
  Estimate regret;
  double cvar_true = 0.0;
  double cvar_worst = 0.0;
  std::vector<double> costs_true;
  std::vector<double> costs_worst;
};

// CVaR of the rollout costs under the true models minus the same under the
// worst-case models. Each CVaR is the empirical CVaR of one member of the
// moment set, standing in for the supremum over the set.
DistributionalRegret empirical_distributional_regret(
    const LinearSystem& sys, const Policy& policy, const CostSpec& cost,
    const ModelPair& true_models, const ModelPair& worst_models,
    RiskLevel alpha, int count, const RoleStreams& streams, int threads = 0);

// Mean cost under the true models minus mean cost under the worst models.
Estimate monte_carlo_pseudo_regret(std::span<const double> costs_true,
                                   std::span<const double> costs_worst,
                                   const RngSpec& rng);

struct BoundDecomposition {
  double total = 0.0;
  std::vector<double> trace_terms;  // Tr(Sigma_e_k Q*_k) / alpha
  std::vector<double> g_terms;      // sample mean of worst-case CVaR of 2 (Q*_k x*_k)^T e_k

  double trace_sum() const;
  double g_sum() const;
};

// Upper bound on the distributional regret. nominal_states[k] holds sampled
// nominal states x*_k as the columns of an n x N matrix.
BoundDecomposition regret_bound(const ErrorModel& errors,
                                const EffectiveWeights& weights,
                                RiskLevel alpha,
                                const std::vector<MatrixXd>& nominal_states);

struct RegretReport {
  double pseudo_regret_analytic = 0.0;
  Estimate pseudo_regret_mc;
  Estimate empirical_distributional_regret;
  double cvar_true = 0.0;
  double cvar_worst = 0.0;
  BoundDecomposition bound;
  double alpha = 0.0;
  int horizon = 0;
  int n_samples = 0;
  int n_rollouts = 0;
};

// Per (k, component) statistics of e_k = x_true_k - x_worst_k from paired
// rollouts.
struct ErrorStatRow {
  int k = 0;
  int component = 0;  // 1-based
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> percentiles;
};

std::vector<ErrorStatRow> error_statistics(const RolloutBatch& true_batch,
                                           const RolloutBatch& worst_batch,
                                           std::span<const double> percentiles);

// Linear-interpolation sample quantile, p in [0, 100].
double sample_percentile(std::vector<double> values, double p);

}  // namespace drr
