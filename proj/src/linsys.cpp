#include "drregret/linsys.hpp"

#include <cmath>
#include <string>

#include "drregret/errors.hpp"

namespace drr {

namespace {

std::string shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_compatible(const LinearSystem& sys, const CostSpec& cost) {
  if (cost.Q().rows() != sys.state_dim() || cost.R().rows() != sys.input_dim()) {
    throw DimensionError("cost weights Q " + shape(cost.Q()) + ", R " +
                         shape(cost.R()) + " do not match system with n=" +
                         std::to_string(sys.state_dim()) +
                         ", m=" + std::to_string(sys.input_dim()));
  }
}

void check_policy(const LinearSystem& sys, const Policy& policy) {
  for (const auto& k : policy.gains()) {
    if (k.rows() != sys.input_dim() || k.cols() != sys.state_dim()) {
      throw DimensionError("policy gain " + shape(k) + " does not match m x n = " +
                           std::to_string(sys.input_dim()) + "x" +
                           std::to_string(sys.state_dim()));
    }
  }
}

}  // namespace

LinearSystem::LinearSystem(MatrixXd a, MatrixXd b, MatrixXd d)
    : a_(std::move(a)), b_(std::move(b)), d_(std::move(d)) {
  const auto n = a_.rows();
  if (n < 1 || a_.cols() != n) {
    throw DimensionError("A must be square with n >= 1, got " + shape(a_));
  }
  if (b_.rows() != n || b_.cols() < 1) {
    throw DimensionError("B must be n x m with m >= 1, got " + shape(b_));
  }
  if (d_.rows() != n || d_.cols() < 1) {
    throw DimensionError("D must be n x r with r >= 1, got " + shape(d_));
  }
  if (!a_.allFinite() || !b_.allFinite() || !d_.allFinite()) {
    throw InvalidInput("system matrices must be finite");
  }
}

CostSpec::CostSpec(MatrixXd q, MatrixXd r, MatrixXd q_final, int horizon,
                   const Tolerances& tol)
    : q_(std::move(q)),
      r_(std::move(r)),
      qf_(std::move(q_final)),
      horizon_(horizon),
      tol_(tol) {
  if (horizon_ < 0) throw InvalidInput("horizon must be >= 0");
  require_psd(q_, "Q", tol_);
  require_pd(r_, "R", tol_);
  require_psd(qf_, "Q_f", tol_);
  if (qf_.rows() != q_.rows()) {
    throw DimensionError("Q_f " + shape(qf_) + " does not match Q " + shape(q_));
  }
}

CostSpec CostSpec::with_horizon(int horizon) const {
  return CostSpec(q_, r_, qf_, horizon, tol_);
}

Policy::Policy(std::vector<MatrixXd> gains) : gains_(std::move(gains)) {
  for (const auto& k : gains_) {
    if (!k.allFinite()) throw InvalidInput("policy gains must be finite");
    if (k.rows() != gains_.front().rows() || k.cols() != gains_.front().cols()) {
      throw DimensionError("policy gains must share one shape");
    }
  }
}

Policy Policy::constant(const MatrixXd& gain, int horizon) {
  if (horizon < 0) throw InvalidInput("horizon must be >= 0");
  return Policy(std::vector<MatrixXd>(static_cast<std::size_t>(horizon), gain));
}

std::pair<MatrixXd, MatrixXd> riccati_step(const LinearSystem& sys,
                                           const MatrixXd& Q,
                                           const MatrixXd& R,
                                           const MatrixXd& p_next) {
  const MatrixXd& A = sys.A();
  const MatrixXd& B = sys.B();
  const MatrixXd bt_p = B.transpose() * p_next;
  const MatrixXd inner = R + bt_p * B;
  Eigen::LLT<MatrixXd> llt(symmetrize(inner));
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("R + B^T P B is not positive definite");
  }
  MatrixXd K = -llt.solve(bt_p * A);
  MatrixXd P = Q + A.transpose() * p_next * A + A.transpose() * bt_p.transpose() * K;
  return {std::move(K), symmetrize(P)};
}

RiccatiSolution riccati_finite_horizon(const LinearSystem& sys,
                                       const CostSpec& cost) {
  check_compatible(sys, cost);
  const auto T = static_cast<std::size_t>(cost.horizon());
  std::vector<MatrixXd> P(T + 1);
  std::vector<MatrixXd> K(T);
  P[T] = cost.Qf();
  for (std::size_t k = T; k-- > 0;) {
    std::tie(K[k], P[k]) = riccati_step(sys, cost.Q(), cost.R(), P[k + 1]);
  }
  return {Policy(std::move(K)), ValueMatrices{std::move(P)}};
}

StationaryLqr dare_stationary(const LinearSystem& sys, const CostSpec& cost,
                              double tol, int max_iter) {
  check_compatible(sys, cost);
  MatrixXd P = cost.Q();
  for (int it = 1; it <= max_iter; ++it) {
    auto [K, next] = riccati_step(sys, cost.Q(), cost.R(), P);
    const double residual = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (!P.allFinite()) break;
    if (residual < tol) {
      // Gain consistent with the converged P.
      K = riccati_step(sys, cost.Q(), cost.R(), P).first;
      const double rho = spectral_radius(sys.A() + sys.B() * K);
      if (!(rho < 1.0)) {
        throw ConvergenceError("stationary closed loop is unstable (spectral radius " +
                               std::to_string(rho) + ")");
      }
      return {std::move(K), std::move(P), it, residual, rho};
    }
  }
  throw ConvergenceError("Riccati fixed-point iteration did not converge within " +
                         std::to_string(max_iter) + " iterations");
}

double trajectory_cost(std::span<const VectorXd> states,
                       std::span<const VectorXd> inputs, const CostSpec& cost) {
  if (states.size() != inputs.size() + 1) {
    throw DimensionError("trajectory_cost: expected T+1 states for T inputs, got " +
                         std::to_string(states.size()) + " and " +
                         std::to_string(inputs.size()));
  }
  double total = states.back().dot(cost.Qf() * states.back());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    total += states[k].dot(cost.Q() * states[k]);
    total += inputs[k].dot(cost.R() * inputs[k]);
  }
  return total;
}

Trajectory simulate(const LinearSystem& sys, const Policy& policy,
                    const VectorXd& x0, std::span<const VectorXd> disturbances,
                    const CostSpec& cost) {
  check_policy(sys, policy);
  check_compatible(sys, cost);
  const auto T = static_cast<std::size_t>(policy.horizon());
  if (disturbances.size() != T) {
    throw DimensionError("simulate: " + std::to_string(disturbances.size()) +
                         " disturbances for horizon " + std::to_string(T));
  }
  if (x0.size() != sys.state_dim()) {
    throw DimensionError("simulate: initial state has wrong dimension");
  }
  Trajectory traj;
  traj.states.reserve(T + 1);
  traj.inputs.reserve(T);
  traj.disturbances.assign(disturbances.begin(), disturbances.end());
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < T; ++k) {
    if (disturbances[k].size() != sys.disturbance_dim()) {
      throw DimensionError("simulate: disturbance has wrong dimension");
    }
    const VectorXd& x = traj.states.back();
    VectorXd u = policy.gain(k) * x;
    VectorXd next = sys.A() * x + sys.B() * u + sys.D() * disturbances[k];
    traj.inputs.push_back(std::move(u));
    traj.states.push_back(std::move(next));
  }
  traj.cost = trajectory_cost(traj.states, traj.inputs, cost);
  return traj;
}

double dynamics_residual(const LinearSystem& sys, const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const VectorXd expected = sys.A() * traj.states[k] + sys.B() * traj.inputs[k] +
                              sys.D() * traj.disturbances[k];
    worst = std::max(worst, (traj.states[k + 1] - expected).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace drr
