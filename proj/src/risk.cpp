#include "drregret/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "drregret/errors.hpp"

namespace drr {

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidInput("risk level must lie in (0, 1], got " + std::to_string(alpha));
  }
}

namespace {

std::vector<double> sorted_copy(std::span<const double> samples) {
  if (samples.empty()) throw InvalidInput("sample set is empty");
  std::vector<double> v(samples.begin(), samples.end());
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput("sample set has non-finite values");
  }
  std::sort(v.begin(), v.end());
  return v;
}

// 1-based rank of the VaR order statistic.
std::size_t var_rank(std::size_t n, double alpha) {
  const double target = (1.0 - alpha) * static_cast<double>(n);
  // Absorb rounding in (1 - alpha) n so that e.g. 0.8 * 10 gives rank 8.
  auto rank = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::clamp<std::size_t>(rank, 1, n);
}

double var_sorted(const std::vector<double>& sorted, double alpha) {
  return sorted[var_rank(sorted.size(), alpha) - 1];
}

}  // namespace

double empirical_var(std::span<const double> samples, RiskLevel alpha) {
  return var_sorted(sorted_copy(samples), alpha.value());
}

double empirical_cvar(std::span<const double> samples, RiskLevel alpha) {
  const std::vector<double> sorted = sorted_copy(samples);
  const double var = var_sorted(sorted, alpha.value());
  double excess = 0.0;
  for (double z : sorted) excess += std::max(z - var, 0.0);
  return var + excess / (alpha.value() * static_cast<double>(sorted.size()));
}

double worst_case_cvar_quadratic(const MatrixXd& cov, const MatrixXd& P,
                                 RiskLevel alpha, const Tolerances& tol) {
  require_psd(cov, "covariance", tol);
  require_psd(P, "P", tol);
  if (cov.rows() != P.rows()) throw DimensionError("covariance and P differ in size");
  return (cov * P).trace() / alpha.value();
}

namespace {

// Precomputed pieces of phi(s) = s + Tr_+(G - s v v^T) / alpha where
// G = L^T H(0) L and v = L^T e_last.
struct DualProblem {
  MatrixXd g;
  VectorXd v;
  double alpha;

  double operator()(double s) const {
    return s + trace_positive(g - s * v * v.transpose()) / alpha;
  }
};

DualProblem make_dual(const SecondMomentMatrix& omega, const MatrixXd& P,
                      const VectorXd& q, double r, RiskLevel alpha,
                      const Tolerances& tol) {
  const auto d = omega.dim();
  if (P.rows() != d || P.cols() != d || q.size() != d) {
    throw DimensionError("P and q must match the second-moment dimension " +
                         std::to_string(d));
  }
  require_psd(P, "P", tol);
  if (!q.allFinite() || !std::isfinite(r)) throw InvalidInput("q and r must be finite");
  MatrixXd h(d + 1, d + 1);
  h.topLeftCorner(d, d) = P;
  h.topRightCorner(d, 1) = q;
  h.bottomLeftCorner(1, d) = q.transpose();
  h(d, d) = r;
  const MatrixXd l = psd_factor(omega.matrix());
  return {symmetrize(l.transpose() * h * l), l.row(d).transpose(), alpha.value()};
}

}  // namespace

double worst_case_cvar_dual_objective(const SecondMomentMatrix& omega,
                                      const MatrixXd& P, const VectorXd& q,
                                      double r, RiskLevel alpha, double s) {
  return make_dual(omega, P, q, r, alpha, {})(s);
}

DualSolution worst_case_cvar_quadratic_general(const SecondMomentMatrix& omega,
                                               const MatrixXd& P,
                                               const VectorXd& q, double r,
                                               RiskLevel alpha,
                                               const Tolerances& tol) {
  const DualProblem phi = make_dual(omega, P, q, r, alpha, tol);
  const MatrixXd cov = omega.covariance();
  const double a = alpha.value();
  DualSolution sol;
  auto eval = [&](double s) {
    ++sol.evaluations;
    return phi(s);
  };

  const double spread = std::sqrt(std::max(q.dot(cov * q), 0.0));
  double b = 1.0 + std::abs(r) + std::max((cov * P).trace(), 0.0) +
             2.0 * spread / std::min(a, 1.0 - a + 1e-9);
  // Expand until phi is non-increasing entering the bracket from both ends;
  // by convexity a minimiser then lies inside [-b, b].
  constexpr int kMaxDoublings = 200;
  int doublings = 0;
  for (;; ++doublings) {
    if (doublings > kMaxDoublings || !std::isfinite(b)) {
      throw ConvergenceError("worst-case CVaR bracket expansion did not terminate");
    }
    const double half = 0.5 * b;
    if (eval(-b) >= eval(-b + half) && eval(b) >= eval(b - half)) break;
    b *= 2.0;
  }

  double lo = -b;
  double hi = b;
  double best_s = 0.0;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double s, double value) {
    if (value < best) {
      best = value;
      best_s = s;
    }
  };
  // The width floor sits near the resolution of doubles at the bracket scale.
  const double min_width = 1e-13 * (1.0 + b);
  while (hi - lo > min_width) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = eval(m1);
    const double f2 = eval(m2);
    consider(m1, f1);
    consider(m2, f2);
    if (f1 < f2) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double mid = 0.5 * (lo + hi);
  consider(mid, eval(mid));
  sol.value = best;
  sol.s = best_s;
  return sol;
}

double worst_case_cvar_linear(const MatrixXd& cov, const VectorXd& q,
                              RiskLevel alpha, const Tolerances& tol) {
  require_psd(cov, "covariance", tol);
  if (q.size() != cov.rows()) throw DimensionError("q does not match covariance size");
  const double a = alpha.value();
  const double spread = std::sqrt(std::max(q.dot(cov * q), 0.0));
  return 2.0 * spread * std::sqrt((1.0 - a) / a);
}

}  // namespace drr
