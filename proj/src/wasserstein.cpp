#include "drregret/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drregret/errors.hpp"

namespace drr {

EmpiricalDistribution::EmpiricalDistribution(MatrixXd atoms)
    : atoms_(std::move(atoms)) {
  if (atoms_.cols() < 1 || atoms_.rows() < 1) {
    throw InvalidInput("empirical distribution needs at least one atom of dimension >= 1");
  }
  if (!atoms_.allFinite()) throw InvalidInput("empirical distribution has non-finite atoms");
}

WassersteinAmbiguitySet::WassersteinAmbiguitySet(EmpiricalDistribution center,
                                                 double radius)
    : center_(std::move(center)), radius_(radius) {
  if (!(radius_ >= 0.0) || !std::isfinite(radius_)) {
    throw InvalidInput("Wasserstein radius must be finite and >= 0");
  }
}

std::vector<int> min_cost_assignment(const MatrixXd& cost) {
  // Shortest augmenting paths with row/column potentials (Hungarian method),
  // O(n^3). Index 0 is a sentinel column.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("assignment cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const int row0 = match[col0];
      double delta = kInf;
      int col1 = 0;
      for (int col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double cur = cost(row0 - 1, col - 1) - u[row0] - v[col];
        if (cur < min_slack[col]) {
          min_slack[col] = cur;
          way[col] = col0;
        }
        if (min_slack[col] < delta) {
          delta = min_slack[col];
          col1 = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          min_slack[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(n);
  for (int col = 1; col <= n; ++col) assignment[match[col] - 1] = col - 1;
  return assignment;
}

double w2_empirical(const EmpiricalDistribution& nu,
                    const EmpiricalDistribution& mu) {
  if (nu.dim() != mu.dim()) {
    throw DimensionError("w2_empirical: atom dimensions differ");
  }
  if (nu.size() != mu.size()) {
    throw DimensionError("w2_empirical: atom counts differ (" + std::to_string(nu.size()) +
                         " vs " + std::to_string(mu.size()) + ")");
  }
  const auto m = nu.size();
  MatrixXd cost(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cost(i, j) = (nu.atoms().col(i) - mu.atoms().col(j)).squaredNorm();
    }
  }
  const std::vector<int> assignment = min_cost_assignment(cost);
  // Sum in sorted order so the result does not depend on atom order.
  std::vector<double> matched(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) matched[i] = cost(i, assignment[i]);
  std::sort(matched.begin(), matched.end());
  double total = 0.0;
  for (double c : matched) total += c;
  return std::sqrt(total / static_cast<double>(m));
}

double w2_gaussian(const VectorXd& mean1, const MatrixXd& cov1,
                   const VectorXd& mean2, const MatrixXd& cov2,
                   const Tolerances& tol) {
  require_psd(cov1, "cov1", tol);
  require_psd(cov2, "cov2", tol);
  if (mean1.size() != cov1.rows() || mean2.size() != cov2.rows() ||
      mean1.size() != mean2.size()) {
    throw DimensionError("w2_gaussian: dimension mismatch");
  }
  const MatrixXd root2 = psd_sqrt(cov2);
  const MatrixXd cross = psd_sqrt(symmetrize(root2 * cov1 * root2));
  const double bures = (cov1 + cov2 - 2.0 * cross).trace();
  return std::sqrt(std::max((mean1 - mean2).squaredNorm() + bures, 0.0));
}

bool wasserstein_membership(const EmpiricalDistribution& dist,
                            const WassersteinAmbiguitySet& set) {
  return w2_empirical(set.center(), dist) <= set.radius();
}

}  // namespace drr
