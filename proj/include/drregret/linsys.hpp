#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "drregret/matrix_util.hpp"

namespace drr {

// Discrete-time plant x_{k+1} = A x_k + B u_k + D w_k.
class LinearSystem {
 public:
  LinearSystem(MatrixXd a, MatrixXd b, MatrixXd d);

  const MatrixXd& A() const noexcept { return a_; }
  const MatrixXd& B() const noexcept { return b_; }
  const MatrixXd& D() const noexcept { return d_; }

  Eigen::Index state_dim() const noexcept { return a_.rows(); }
  Eigen::Index input_dim() const noexcept { return b_.cols(); }
  Eigen::Index disturbance_dim() const noexcept { return d_.cols(); }

 private:
  MatrixXd a_, b_, d_;
};

// Quadratic cost weights and horizon. A horizon of zero is admitted and
// leaves only the terminal term.
class CostSpec {
 public:
  CostSpec(MatrixXd q, MatrixXd r, MatrixXd q_final, int horizon,
           const Tolerances& tol = {});

  const MatrixXd& Q() const noexcept { return q_; }
  const MatrixXd& R() const noexcept { return r_; }
  const MatrixXd& Qf() const noexcept { return qf_; }
  int horizon() const noexcept { return horizon_; }
  const Tolerances& tolerances() const noexcept { return tol_; }

  // Same weights, different horizon.
  CostSpec with_horizon(int horizon) const;

 private:
  MatrixXd q_, r_, qf_;
  int horizon_;
  Tolerances tol_;
};

// Time-varying linear state feedback u_k = K_k x_k, k = 0..T-1.
class Policy {
 public:
  explicit Policy(std::vector<MatrixXd> gains);

  // The same gain repeated over `horizon` steps.
  static Policy constant(const MatrixXd& gain, int horizon);

  const std::vector<MatrixXd>& gains() const noexcept { return gains_; }
  const MatrixXd& gain(std::size_t k) const { return gains_.at(k); }
  int horizon() const noexcept { return static_cast<int>(gains_.size()); }

 private:
  std::vector<MatrixXd> gains_;
};

struct Trajectory {
  std::vector<VectorXd> states;        // T + 1
  std::vector<VectorXd> inputs;        // T
  std::vector<VectorXd> disturbances;  // T
  double cost = 0.0;
};

// Cost-to-go matrices P_0..P_T, with P_T = Q_f.
struct ValueMatrices {
  std::vector<MatrixXd> P;
};

struct RiccatiSolution {
  Policy policy;
  ValueMatrices values;
};

struct StationaryLqr {
  MatrixXd K;
  MatrixXd P;
  int iterations = 0;
  double residual = 0.0;
  double closed_loop_radius = 0.0;
};

// Backward Riccati recursion over cost.horizon() steps.
RiccatiSolution riccati_finite_horizon(const LinearSystem& sys,
                                       const CostSpec& cost);

// One Riccati step: returns the gain and the updated cost-to-go given
// P_{k+1}. Throws InvalidInput if R + B^T P B is not positive definite.
std::pair<MatrixXd, MatrixXd> riccati_step(const LinearSystem& sys,
                                           const MatrixXd& Q,
                                           const MatrixXd& R,
                                           const MatrixXd& p_next);

// Stationary gain by fixed-point iteration of riccati_step, starting from Q.
// Converged when max |P - f(P)| < tol. Throws ConvergenceError if max_iter
// is exhausted or if the resulting closed loop is not Schur stable.
StationaryLqr dare_stationary(const LinearSystem& sys, const CostSpec& cost,
                              double tol = 1e-12, int max_iter = 100000);

// Rolls Eq. x_{k+1} = A x_k + B K_k x_k + D w_k forward from x0.
Trajectory simulate(const LinearSystem& sys, const Policy& policy,
                    const VectorXd& x0, std::span<const VectorXd> disturbances,
                    const CostSpec& cost);

// ||x_T||^2_{Qf} + sum_k (||x_k||^2_Q + ||u_k||^2_R).
double trajectory_cost(std::span<const VectorXd> states,
                       std::span<const VectorXd> inputs, const CostSpec& cost);

// Max |x_{k+1} - (A x_k + B u_k + D w_k)| over the trajectory.
double dynamics_residual(const LinearSystem& sys, const Trajectory& traj);

}  // namespace drr
