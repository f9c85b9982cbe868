#include "drregret/linsys.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "drregret/errors.hpp"
#include "test_support.hpp"

namespace drr {
namespace {

using testing::mat;
using testing::vec;

LinearSystem scalar_system(double a = 1.0, double b = 1.0, double d = 1.0) {
  return LinearSystem(mat({{a}}), mat({{b}}), mat({{d}}));
}

CostSpec scalar_cost(int horizon, double q = 1.0, double r = 1.0, double qf = 1.0) {
  return CostSpec(mat({{q}}), mat({{r}}), mat({{qf}}), horizon);
}

TEST(LinearSystem, RejectsInconsistentShapes) {
  EXPECT_THROW(LinearSystem(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 2)),
               DimensionError);
  EXPECT_THROW(LinearSystem(MatrixXd::Zero(2, 2), MatrixXd::Zero(3, 1), MatrixXd::Zero(2, 2)),
               DimensionError);
  EXPECT_THROW(LinearSystem(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2)),
               DimensionError);
  MatrixXd a = MatrixXd::Identity(2, 2);
  a(0, 1) = std::nan("");
  EXPECT_THROW(LinearSystem(a, MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 2)), InvalidInput);
}

TEST(CostSpec, ValidatesWeights) {
  EXPECT_THROW(CostSpec(mat({{1}}), mat({{0}}), mat({{1}}), 3), InvalidInput);
  EXPECT_THROW(CostSpec(mat({{-1}}), mat({{1}}), mat({{1}}), 3), InvalidInput);
  EXPECT_THROW(CostSpec(mat({{1, 2}, {0, 1}}), mat({{1}}), MatrixXd::Identity(2, 2), 3),
               InvalidInput);
  EXPECT_THROW(CostSpec(mat({{1}}), mat({{1}}), mat({{1}}), -1), InvalidInput);
  EXPECT_THROW(CostSpec(mat({{1}}), mat({{1}}), MatrixXd::Identity(2, 2), 1), DimensionError);
}

TEST(Riccati, NoActuationGivesZeroGainsAndLyapunovRecursion) {
  const LinearSystem sys(mat({{1.0, 0.3}, {-0.2, 0.9}}), MatrixXd::Zero(2, 1),
                         MatrixXd::Identity(2, 2));
  const CostSpec cost(2.0 * MatrixXd::Identity(2, 2), mat({{1}}), MatrixXd::Identity(2, 2), 6);
  const auto sol = riccati_finite_horizon(sys, cost);
  ASSERT_EQ(sol.policy.horizon(), 6);
  for (const auto& k : sol.policy.gains()) EXPECT_TRUE(k.isZero());
  MatrixXd p = cost.Qf();
  for (int k = 5; k >= 0; --k) {
    p = cost.Q() + sys.A().transpose() * p * sys.A();
    EXPECT_LT((sol.values.P[k] - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Riccati, ScalarSingleStepByHand) {
  // K0 = -(1 + 1)^-1 * 1 = -0.5; P0 = 1 + 1 - 1 * 0.5 = 1.5.
  const auto sol = riccati_finite_horizon(scalar_system(), scalar_cost(1));
  EXPECT_DOUBLE_EQ(sol.policy.gain(0)(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(sol.values.P[0](0, 0), 1.5);
  EXPECT_DOUBLE_EQ(sol.values.P[1](0, 0), 1.0);
}

TEST(Riccati, TerminalValueIsQf) {
  const auto sol = riccati_finite_horizon(testing::steering_system(), testing::steering_cost(5));
  EXPECT_EQ(sol.values.P.size(), 6u);
  EXPECT_TRUE(sol.values.P.back() == testing::steering_cost(5).Qf());
}

TEST(Riccati, InteriorGainsConvergeToStationaryGain) {
  const LinearSystem sys = testing::steering_system();
  const auto sol = riccati_finite_horizon(sys, testing::steering_cost(400));
  const StationaryLqr lqr = dare_stationary(sys, testing::steering_cost(400));
  for (int k : {0, 50, 200}) {
    EXPECT_LT((sol.policy.gain(k) - lqr.K).cwiseAbs().maxCoeff(), 1e-6) << "k = " << k;
  }
}

TEST(Riccati, ValueMatricesSymmetricPsd) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 2;
    const LinearSystem sys(testing::random_matrix(rng, n, n), testing::random_matrix(rng, n, m),
                           MatrixXd::Identity(n, n));
    const CostSpec cost(testing::random_psd(rng, n),
                        testing::random_psd(rng, m) + MatrixXd::Identity(m, m),
                        testing::random_psd(rng, n), 15);
    const auto sol = riccati_finite_horizon(sys, cost);
    for (const auto& p : sol.values.P) {
      EXPECT_LT(symmetry_error(p), 1e-10);
      EXPECT_GE(min_eigenvalue(p), -1e-8 * std::max(1.0, p.norm()));
    }
  }
}

TEST(Riccati, ErrorsOnDimensionMismatchAndIndefiniteInner) {
  const CostSpec wrong(MatrixXd::Identity(3, 3), mat({{1}}), MatrixXd::Identity(3, 3), 2);
  EXPECT_THROW(riccati_finite_horizon(testing::steering_system(), wrong), DimensionError);
  EXPECT_THROW(riccati_step(scalar_system(), mat({{1}}), mat({{-2}}), mat({{1}})), InvalidInput);
}

// Bisection on the scalar DARE residual g(p) = q + a^2 p - (abp)^2 / (r + b^2 p) - p.
double scalar_dare_bisection(double a, double b, double q, double r) {
  auto g = [&](double p) { return q + a * a * p - std::pow(a * b * p, 2) / (r + b * b * p) - p; };
  double lo = q;  // g(q) >= 0
  double hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TEST(Dare, ZeroDynamicsGivesQ) {
  const LinearSystem sys(MatrixXd::Zero(2, 2), mat({{1}, {2}}), MatrixXd::Identity(2, 2));
  const CostSpec cost(mat({{3, 1}, {1, 2}}), mat({{1}}), MatrixXd::Identity(2, 2), 1);
  const StationaryLqr lqr = dare_stationary(sys, cost);
  EXPECT_LT((lqr.P - cost.Q()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(lqr.K.isZero());
}

TEST(Dare, ScalarMatchesBisectionOracle) {
  const StationaryLqr lqr = dare_stationary(scalar_system(), scalar_cost(1));
  const double oracle = scalar_dare_bisection(1, 1, 1, 1);
  EXPECT_NEAR(oracle, (1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_NEAR(lqr.P(0, 0), oracle, 1e-10);
  const double p = lqr.P(0, 0);
  EXPECT_LT(std::abs(1.0 + p - p * p / (1.0 + p) - p), 1e-11);
}

TEST(Dare, SteeringClosedLoopIsStable) {
  const LinearSystem sys = testing::steering_system();
  const StationaryLqr lqr = dare_stationary(sys, testing::steering_cost(100));
  EXPECT_LT(spectral_radius(sys.A() + sys.B() * lqr.K), 1.0);
  EXPECT_LT(lqr.closed_loop_radius, 1.0);
  const auto [k, next] = riccati_step(sys, testing::steering_cost(1).Q(),
                                      testing::steering_cost(1).R(), lqr.P);
  EXPECT_LT((next - lqr.P).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dare, UnstabilizableDoesNotConverge) {
  const LinearSystem sys(mat({{2.0}}), mat({{0.0}}), mat({{1.0}}));
  EXPECT_THROW(dare_stationary(sys, scalar_cost(1), 1e-12, 500), ConvergenceError);
}

TEST(Simulate, ZeroInitialStateAndNoiseStayAtZero) {
  const LinearSystem sys = testing::steering_system();
  const Policy policy = Policy::constant(mat({{-1.0, -2.0}}), 5);
  const std::vector<VectorXd> w(5, VectorXd::Zero(2));
  const Trajectory traj = simulate(sys, policy, VectorXd::Zero(2), w, testing::steering_cost(5));
  for (const auto& x : traj.states) EXPECT_TRUE(x.isZero());
  EXPECT_EQ(traj.cost, 0.0);
}

TEST(Simulate, ScalarHandPropagation) {
  const Policy policy = Policy::constant(mat({{-1.0}}), 1);
  const std::vector<VectorXd> w{vec({0.0})};
  const Trajectory traj = simulate(scalar_system(), policy, vec({1.0}), w, scalar_cost(1));
  EXPECT_EQ(traj.states[1](0), 0.0);
  EXPECT_EQ(traj.inputs[0](0), -1.0);
  EXPECT_EQ(traj.cost, 2.0);  // x0^2 + u0^2 + x1^2
}

TEST(Simulate, DeterministicAndConsistent) {
  const LinearSystem sys = testing::steering_system();
  const StationaryLqr lqr = dare_stationary(sys, testing::steering_cost(30));
  const Policy policy = Policy::constant(lqr.K, 30);
  std::mt19937_64 rng(5);
  std::vector<VectorXd> w;
  for (int k = 0; k < 30; ++k) w.push_back(testing::random_matrix(rng, 2, 1));
  const VectorXd x0 = testing::vec({-4, 4});
  const CostSpec cost = testing::steering_cost(30);
  const Trajectory a = simulate(sys, policy, x0, w, cost);
  const Trajectory b = simulate(sys, policy, x0, a.disturbances, cost);
  ASSERT_EQ(a.states.size(), 31u);
  for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_TRUE(a.states[k] == b.states[k]);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_LT(dynamics_residual(sys, a), 1e-9);
  EXPECT_EQ(a.cost, trajectory_cost(a.states, a.inputs, cost));
}

TEST(Simulate, LengthMismatch) {
  const Policy policy = Policy::constant(mat({{-1.0}}), 2);
  const std::vector<VectorXd> w{vec({0.0})};
  EXPECT_THROW(simulate(scalar_system(), policy, vec({1.0}), w, scalar_cost(2)), DimensionError);
}

TEST(TrajectoryCost, HandSumAndZero) {
  const std::vector<VectorXd> states{vec({1}), vec({2})};
  const std::vector<VectorXd> inputs{vec({3})};
  EXPECT_EQ(trajectory_cost(states, inputs, scalar_cost(1)), 14.0);
  const std::vector<VectorXd> zs{vec({0}), vec({0})};
  const std::vector<VectorXd> zu{vec({0})};
  EXPECT_EQ(trajectory_cost(zs, zu, scalar_cost(1)), 0.0);
  EXPECT_THROW(trajectory_cost(states, states, scalar_cost(1)), DimensionError);
}

TEST(TrajectoryCost, QuadraticHomogeneityAndPositivity) {
  std::mt19937_64 rng(9);
  const CostSpec cost = testing::steering_cost(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VectorXd> xs, us, xs2, us2;
    for (int k = 0; k < 5; ++k) xs.push_back(testing::random_matrix(rng, 2, 1));
    for (int k = 0; k < 4; ++k) us.push_back(testing::random_matrix(rng, 1, 1));
    for (const auto& x : xs) xs2.push_back(2.0 * x);
    for (const auto& u : us) us2.push_back(2.0 * u);
    const double c = trajectory_cost(xs, us, cost);
    EXPECT_GT(c, 0.0);
    EXPECT_DOUBLE_EQ(trajectory_cost(xs2, us2, cost), 4.0 * c);
  }
}

}  // namespace
}  // namespace drr
