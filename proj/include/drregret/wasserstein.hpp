#pragma once

#include <vector>

#include <Eigen/Dense>

#include "drregret/matrix_util.hpp"

namespace drr {

// Uniformly weighted point masses; atoms are the columns of a d x M matrix.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(MatrixXd atoms);

  const MatrixXd& atoms() const noexcept { return atoms_; }
  Eigen::Index dim() const noexcept { return atoms_.rows(); }
  Eigen::Index size() const noexcept { return atoms_.cols(); }

 private:
  MatrixXd atoms_;
};

// All distributions within W2 distance `radius` of `center`.
class WassersteinAmbiguitySet {
 public:
  WassersteinAmbiguitySet(EmpiricalDistribution center, double radius);

  const EmpiricalDistribution& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

 private:
  EmpiricalDistribution center_;
  double radius_;
};

// Minimum-cost perfect matching on a square cost matrix. Returns, for each
// row i, the column assigned to it.
std::vector<int> min_cost_assignment(const MatrixXd& cost);

// W2 between two equal-size empirical distributions via an exact assignment
// on squared Euclidean distances.
double w2_empirical(const EmpiricalDistribution& nu,
                    const EmpiricalDistribution& mu);

// Closed-form W2 between Gaussians N(m1, S1) and N(m2, S2).
double w2_gaussian(const VectorXd& mean1, const MatrixXd& cov1,
                   const VectorXd& mean2, const MatrixXd& cov2,
                   const Tolerances& tol = {});

// Inclusive: W2(center, dist) <= radius.
bool wasserstein_membership(const EmpiricalDistribution& dist,
                            const WassersteinAmbiguitySet& set);

}  // namespace drr
