#include "drregret/regret.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "drregret/config.hpp"
#include "drregret/errors.hpp"
#include "test_support.hpp"

namespace drr {
namespace {

using testing::mat;
using testing::vec;

struct Steering {
  ExperimentConfig config = default_config();
  LinearSystem sys = make_system(config);
  CostSpec cost = make_cost(config, config.horizon);
  Policy policy = Policy::constant(dare_stationary(sys, cost).K, config.horizon);
  EffectiveWeights weights = effective_weights(cost, policy);
  MomentTrajectory moments =
      propagate_moments(sys, policy, x0_set(config), w_set(config), config.horizon);
};

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

TEST(EffectiveWeights, Formula) {
  const CostSpec cost(mat({{1}}), mat({{1}}), mat({{3}}), 2);
  const EffectiveWeights zero = effective_weights(cost, Policy::constant(mat({{0}}), 2));
  EXPECT_EQ(zero.Q[0](0, 0), 1.0);
  EXPECT_EQ(zero.Q[1](0, 0), 1.0);
  EXPECT_EQ(zero.Q[2](0, 0), 3.0);
  const EffectiveWeights half = effective_weights(cost, Policy::constant(mat({{-0.5}}), 2));
  EXPECT_EQ(half.Q[0](0, 0), 1.25);
  EXPECT_THROW(effective_weights(cost, Policy::constant(mat({{0}}), 3)), DimensionError);
}

TEST(EffectiveWeights, PsdForRandomGains) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 3;
    const CostSpec cost(testing::random_psd(rng, n), testing::random_psd(rng, m) + MatrixXd::Identity(m, m),
                        testing::random_psd(rng, n), 3);
    std::vector<MatrixXd> gains;
    for (int k = 0; k < 3; ++k) gains.push_back(testing::random_matrix(rng, m, n, 3.0));
    for (const auto& q : effective_weights(cost, Policy(gains)).Q) {
      EXPECT_GE(min_eigenvalue(q), -1e-8 * (1.0 + q.norm()));
    }
  }
}

TEST(ExpectedCost, TraceAndMeanTerms) {
  MomentTrajectory mt;
  mt.means = {VectorXd::Zero(3), VectorXd::Zero(3)};
  mt.covs = {MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)};
  EffectiveWeights w{{MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)}};
  EXPECT_EQ(expected_cost_analytic(mt, w), 6.0);
  mt.covs = {MatrixXd::Zero(3, 3), MatrixXd::Zero(3, 3)};
  EXPECT_EQ(expected_cost_analytic(mt, w), 0.0);
  w.Q.pop_back();
  EXPECT_THROW(expected_cost_analytic(mt, w), DimensionError);
}

TEST(ExpectedCost, MonteCarloAgreement) {
  const Steering s;
  const double analytic = expected_cost_analytic(s.moments, s.weights);
  const RolloutBatch batch = simulate_rollouts(s.sys, s.policy, s.cost, worst_models(s.config),
                                               100000, {2024, 0});
  const double mean = mean_of(batch.costs);
  double ss = 0.0;
  for (double c : batch.costs) ss += (c - mean) * (c - mean);
  const double se = std::sqrt(ss / (batch.costs.size() - 1) / batch.costs.size());
  EXPECT_LT(std::abs(mean - analytic), 3.0 * se) << "analytic " << analytic << " mc " << mean;
}

TEST(ExpectedCost, RiccatiPolicyBeatsPerturbedGains) {
  const Steering s;
  const auto sol = riccati_finite_horizon(s.sys, s.cost);
  auto cost_of = [&](const Policy& p) {
    return expected_cost_analytic(
        propagate_moments(s.sys, p, x0_set(s.config), w_set(s.config), s.config.horizon),
        effective_weights(s.cost, p));
  };
  const double optimal = cost_of(sol.policy);
  std::mt19937_64 rng(3);
  int strictly_worse = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MatrixXd> gains = sol.policy.gains();
    for (auto& g : gains) g += testing::random_matrix(rng, g.rows(), g.cols(), 0.1);
    const double c = cost_of(Policy(gains));
    EXPECT_LE(optimal, c);
    if (optimal < c) ++strictly_worse;
  }
  EXPECT_GE(strictly_worse, 95);
}

TEST(RolloutCost, MatchesSimulateAndIsThreadCountIndependent) {
  const Steering s;
  const RolloutBatch one = simulate_rollouts(s.sys, s.policy, s.cost, true_models(s.config), 64,
                                             {8, 3}, {.threads = 1, .keep_states = true});
  const RolloutBatch many = simulate_rollouts(s.sys, s.policy, s.cost, true_models(s.config), 64,
                                              {8, 3}, {.threads = 4, .keep_states = true});
  EXPECT_EQ(one.costs, many.costs);
  for (std::size_t k = 0; k < one.states.size(); ++k) EXPECT_TRUE(one.states[k] == many.states[k]);
  // Replay rollout 5 through simulate() from its recorded states.
  std::vector<VectorXd> w;
  const MatrixXd Dinv = s.sys.D().inverse();
  for (int k = 0; k < s.config.horizon; ++k) {
    const VectorXd x = one.states[k].col(5);
    const VectorXd next = one.states[k + 1].col(5);
    w.push_back(Dinv * (next - (s.sys.A() + s.sys.B() * s.policy.gain(k)) * x));
  }
  const Trajectory traj = simulate(s.sys, s.policy, one.states[0].col(5), w, s.cost);
  EXPECT_NEAR(traj.cost, one.costs[5], 1e-9 * traj.cost);
}

TEST(ErrorModel, DoublesCovariance) {
  MomentTrajectory mt;
  mt.means = {VectorXd::Zero(2)};
  mt.covs = {MatrixXd::Identity(2, 2)};
  EXPECT_TRUE(error_model(mt).covs[0] == 2.0 * MatrixXd::Identity(2, 2));
  const Steering s;
  const ErrorModel e = error_model(s.moments);
  EXPECT_LT((e.covs[0] - mat({{0.40, 0.04}, {0.04, 0.40}})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(e.omegas[0].matrix()(2, 2), 1.0);
  EXPECT_EQ(e.horizon(), 100);
}

TEST(ErrorModel, MonteCarloInitialError) {
  const Steering s;
  const MomentAmbiguitySet x0 = x0_set(s.config);
  const MatrixXd truth = sample_laplacian(x0, {55, 0}, 100000);
  const MatrixXd worst = sample_gaussian(x0, {55, 1}, 100000);
  const MatrixXd e = truth - worst;
  EXPECT_LT(relative_frobenius_error(sample_covariance(e), 2.0 * s.config.Sigma_x0), 0.07);
}

TEST(PseudoRegret, ZeroUnderMatchedMoments) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4;
    const LinearSystem sys(testing::random_matrix(rng, n, n, 0.6), testing::random_matrix(rng, n, 1),
                           testing::random_matrix(rng, n, 2));
    const CostSpec cost(testing::random_psd(rng, n), mat({{1.0}}), testing::random_psd(rng, n), 25);
    const Policy policy = riccati_finite_horizon(sys, cost).policy;
    const MomentAmbiguitySet x0(testing::random_matrix(rng, n, 1), testing::random_psd(rng, n));
    const MomentAmbiguitySet w(VectorXd::Zero(2), testing::random_psd(rng, 2));
    const auto a = propagate_moments(sys, policy, x0, w, 25);
    const auto b = propagate_moments(sys, policy, x0, w, 25);
    EXPECT_LE(std::abs(pseudo_regret(a, b, effective_weights(cost, policy))), 1e-10);
  }
}

TEST(PseudoRegret, ScaledCovarianceGivesTraceSum) {
  const Steering s;
  MomentTrajectory scaled = s.moments;
  double expected = 0.0;
  for (std::size_t k = 0; k < scaled.covs.size(); ++k) {
    scaled.covs[k] *= 2.0;
    expected += (s.weights.Q[k] * s.moments.covs[k]).trace();
  }
  const double value = pseudo_regret(scaled, s.moments, s.weights);
  EXPECT_GT(value, 0.0);
  EXPECT_NEAR(value, expected, 1e-9 * expected);
  MomentTrajectory shorter = s.moments;
  shorter.means.pop_back();
  shorter.covs.pop_back();
  EXPECT_THROW(pseudo_regret(shorter, s.moments, s.weights), DimensionError);
}

TEST(PseudoRegret, MonteCarloNearZero) {
  const Steering s;
  const RoleStreams streams = RoleStreams::independent({s.config.seed, 0});
  const auto truth = simulate_rollouts(s.sys, s.policy, s.cost, true_models(s.config), 10000,
                                       streams.true_stream);
  const auto worst = simulate_rollouts(s.sys, s.policy, s.cost, worst_models(s.config), 10000,
                                       streams.worst_stream);
  const Estimate est = monte_carlo_pseudo_regret(truth.costs, worst.costs, {1, 1});
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LT(std::abs(est.value), 3.0 * est.std_error);
}

TEST(DistributionalRegret, IdenticalModelsAndStreamsGiveZero) {
  const Steering s;
  const auto streams = RoleStreams::shared({7, 0});
  const auto dr = empirical_distributional_regret(s.sys, s.policy, s.cost, worst_models(s.config),
                                                  worst_models(s.config), RiskLevel(0.2), 200, streams);
  EXPECT_EQ(dr.regret.value, 0.0);
}

TEST(DistributionalRegret, HeavyTailsGivePositiveRegret) {
  const Steering s;
  const auto dr = empirical_distributional_regret(s.sys, s.policy, s.cost, true_models(s.config),
                                                  worst_models(s.config), RiskLevel(0.2), 10000,
                                                  role_streams(s.config));
  EXPECT_GT(dr.regret.value, 0.0);
  EXPECT_GT(dr.regret.std_error, 0.0);
}

TEST(DistributionalRegret, AlphaOneReducesToMeanDifference) {
  const Steering s;
  const auto dr = empirical_distributional_regret(s.sys, s.policy, s.cost, true_models(s.config),
                                                  worst_models(s.config), RiskLevel(1.0), 10000,
                                                  role_streams(s.config));
  EXPECT_NEAR(dr.regret.value, mean_of(dr.costs_true) - mean_of(dr.costs_worst),
              1e-9 * mean_of(dr.costs_true));
  EXPECT_LT(std::abs(dr.regret.value), 3.0 * dr.regret.std_error);
}

TEST(DistributionalRegret, SwappingRolesNegates) {
  const Steering s;
  const RoleStreams streams = RoleStreams::independent({11, 0});
  const RoleStreams swapped{streams.worst_stream, streams.true_stream};
  const auto a = empirical_distributional_regret(s.sys, s.policy, s.cost, true_models(s.config),
                                                 worst_models(s.config), RiskLevel(0.2), 500, streams);
  const auto b = empirical_distributional_regret(s.sys, s.policy, s.cost, worst_models(s.config),
                                                 true_models(s.config), RiskLevel(0.2), 500, swapped);
  EXPECT_EQ(a.regret.value, -b.regret.value);
}

TEST(DistributionalRegret, Preconditions) {
  const Steering s;
  ModelPair other = true_models(s.config);
  other.w = DistributionModel{Family::laplacian,
                              MomentAmbiguitySet(VectorXd::Zero(2), 2.0 * s.config.Sigma_w)};
  EXPECT_THROW(empirical_distributional_regret(s.sys, s.policy, s.cost, other, worst_models(s.config),
                                               RiskLevel(0.2), 100, role_streams(s.config)),
               InvalidInput);
  EXPECT_THROW(empirical_distributional_regret(s.sys, s.policy, s.cost, true_models(s.config),
                                               worst_models(s.config), RiskLevel(0.2), 4,
                                               role_streams(s.config)),
               InvalidInput);
}

std::vector<MatrixXd> nominal_samples(const Steering& s, int horizon, int count) {
  const Policy policy = Policy::constant(s.policy.gain(0), horizon);
  return simulate_rollouts(s.sys, policy, s.cost.with_horizon(horizon), worst_models(s.config), count,
                           role_streams(s.config).worst_stream, {.threads = 0, .keep_states = true})
      .states;
}

BoundDecomposition bound_at(const Steering& s, int horizon, double alpha) {
  const Policy policy = Policy::constant(s.policy.gain(0), horizon);
  const auto moments = propagate_moments(s.sys, policy, x0_set(s.config), w_set(s.config), horizon);
  return regret_bound(error_model(moments), effective_weights(s.cost.with_horizon(horizon), policy),
                      RiskLevel(alpha), nominal_samples(s, horizon, 100));
}

TEST(RegretBound, VanishesWithoutUncertainty) {
  MomentTrajectory mt;
  for (int k = 0; k <= 3; ++k) {
    mt.means.push_back(vec({1.0, -2.0}));
    mt.covs.push_back(MatrixXd::Zero(2, 2));
  }
  const EffectiveWeights w{std::vector<MatrixXd>(4, MatrixXd::Identity(2, 2))};
  const std::vector<MatrixXd> xs(4, mat({{1.0, 2.0}, {-1.0, 0.5}}));
  const auto b = regret_bound(error_model(mt), w, RiskLevel(0.2), xs);
  EXPECT_EQ(b.total, 0.0);
}

TEST(RegretBound, SingleStepByHand) {
  MomentTrajectory mt;
  mt.means = {VectorXd::Zero(2)};
  mt.covs = {0.5 * MatrixXd::Identity(2, 2)};  // Sigma_e = I
  const EffectiveWeights w{{MatrixXd::Identity(2, 2)}};
  const auto b = regret_bound(error_model(mt), w, RiskLevel(0.5), {MatrixXd::Zero(2, 1)});
  EXPECT_DOUBLE_EQ(b.total, 4.0);
  EXPECT_EQ(b.g_terms[0], 0.0);
}

TEST(RegretBound, DecompositionAndDualAgreement) {
  const Steering s;
  const auto xs = nominal_samples(s, 100, 100);
  const ErrorModel errors = error_model(s.moments);
  const auto b = regret_bound(errors, s.weights, RiskLevel(0.2), xs);
  EXPECT_NEAR(b.total, b.trace_sum() + b.g_sum(), 1e-9 * b.total);
  for (std::size_t k = 0; k < b.trace_terms.size(); ++k) {
    EXPECT_GE(b.trace_terms[k], 0.0);
    EXPECT_GE(b.g_terms[k], 0.0);
  }
  // G_k via the dual solver at P = 0, r = 0 on a subset of samples.
  for (int k : {0, 1, 50, 100}) {
    for (int i = 0; i < 10; ++i) {
      const VectorXd q = s.weights.Q[k] * xs[k].col(i);
      const double closed = worst_case_cvar_linear(errors.covs[k], q, RiskLevel(0.2));
      const double dual = worst_case_cvar_quadratic_general(errors.omegas[k], MatrixXd::Zero(2, 2), q,
                                                            0.0, RiskLevel(0.2))
                              .value;
      EXPECT_NEAR(closed, dual, 1e-6);
    }
  }
}

TEST(RegretBound, GrowsWithHorizonAndTighterRiskLevel) {
  const Steering s;
  EXPECT_GT(bound_at(s, 100, 0.2).total, bound_at(s, 100, 0.4).total);
  EXPECT_LT(bound_at(s, 50, 0.2).total, bound_at(s, 100, 0.2).total);
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.05, 0.1, 0.2, 0.4, 0.8, 0.95}) {
    const double v = bound_at(s, 30, a).total;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(RegretBound, Preconditions) {
  const Steering s;
  const ErrorModel errors = error_model(s.moments);
  EXPECT_THROW(regret_bound(errors, s.weights, RiskLevel(1.0), nominal_samples(s, 100, 5)),
               InvalidInput);
  EXPECT_THROW(regret_bound(errors, s.weights, RiskLevel(0.2), nominal_samples(s, 50, 5)),
               DimensionError);
  std::vector<MatrixXd> empty(101, MatrixXd(2, 0));
  EXPECT_THROW(regret_bound(errors, s.weights, RiskLevel(0.2), empty), InvalidInput);
}

TEST(ErrorStatistics, MeanNearZeroAndPercentilesOrdered) {
  const Steering s;
  const RoleStreams streams = role_streams(s.config);
  const RolloutOptions keep{.threads = 0, .keep_states = true};
  const auto truth = simulate_rollouts(s.sys, s.policy, s.cost, true_models(s.config), 2000,
                                       streams.true_stream, keep);
  const auto worst = simulate_rollouts(s.sys, s.policy, s.cost, worst_models(s.config), 2000,
                                       streams.worst_stream, keep);
  const std::vector<double> pct{5.0, 50.0, 95.0};
  const auto rows = error_statistics(truth, worst, pct);
  ASSERT_EQ(rows.size(), 202u);
  for (const auto& r : rows) {
    EXPECT_LE(r.percentiles[0], r.percentiles[1]);
    EXPECT_LE(r.percentiles[1], r.percentiles[2]);
    EXPECT_GT(r.percentiles[2] - r.percentiles[0], 0.0);
  }
}

TEST(SamplePercentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(sample_percentile({1, 2, 3, 4, 5}, 50), 3.0);
  EXPECT_DOUBLE_EQ(sample_percentile({1, 2, 3, 4, 5}, 25), 2.0);
  EXPECT_DOUBLE_EQ(sample_percentile({0, 10}, 95), 9.5);
  EXPECT_THROW(sample_percentile({}, 50), InvalidInput);
}

}  // namespace
}  // namespace drr
