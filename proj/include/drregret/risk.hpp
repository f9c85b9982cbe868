#pragma once

#include <span>

#include <Eigen/Dense>

#include "drregret/matrix_util.hpp"
#include "drregret/uncertainty.hpp"

namespace drr {

// Tail probability alpha of CVaR/VaR. Admits (0, 1]; alpha = 1 reduces CVaR
// to the expectation.
class RiskLevel {
 public:
  explicit RiskLevel(double alpha);
  double value() const noexcept { return alpha_; }

 private:
  double alpha_;
};

// Smallest order statistic whose empirical cdf reaches 1 - alpha, i.e. the
// ceil((1 - alpha) n)-th smallest sample (at least the first).
double empirical_var(std::span<const double> samples, RiskLevel alpha);

// Rockafellar-Uryasev minimum on the empirical measure, evaluated exactly at
// s = VaR: VaR + sum_i (z_i - VaR)^+ / (alpha n).
double empirical_cvar(std::span<const double> samples, RiskLevel alpha);

// Worst-case CVaR over zero-mean distributions with covariance `cov` of the
// loss e^T P e, which is Tr(cov P) / alpha.
double worst_case_cvar_quadratic(const MatrixXd& cov, const MatrixXd& P,
                                 RiskLevel alpha, const Tolerances& tol = {});

// Worst-case CVaR of g(e) = e^T P e + 2 q^T e + r over all distributions with
// second-moment matrix Omega.
//
// The semidefinite program
//   min_{s, M}  s + Tr(Omega M) / alpha   s.t.  M >= H(s), M >= 0,
//   H(s) = [[P, q], [q^T, r - s]]
// is solved through its inner closed form: for fixed s with Omega = L L^T the
// optimal M gives Tr(Omega M) = Tr_+(L^T H(s) L), the sum of positive
// eigenvalues. The remaining one-dimensional objective
//   phi(s) = s + Tr_+(L^T H(s) L) / alpha
// is convex and is minimised by bracket expansion plus ternary search.
struct DualSolution {
  double value = 0.0;  // min_s phi(s)
  double s = 0.0;      // minimiser (the worst-case VaR)
  int evaluations = 0;
};

DualSolution worst_case_cvar_quadratic_general(const SecondMomentMatrix& omega,
                                               const MatrixXd& P,
                                               const VectorXd& q, double r,
                                               RiskLevel alpha,
                                               const Tolerances& tol = {});

// phi(s) from the reduction above, exposed for convexity checks.
double worst_case_cvar_dual_objective(const SecondMomentMatrix& omega,
                                      const MatrixXd& P, const VectorXd& q,
                                      double r, RiskLevel alpha, double s);

// Closed form of the general problem at P = 0, r = 0:
// 2 sqrt(q^T cov q) sqrt((1 - alpha) / alpha).
double worst_case_cvar_linear(const MatrixXd& cov, const VectorXd& q,
                              RiskLevel alpha, const Tolerances& tol = {});

}  // namespace drr
