#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "drregret/linsys.hpp"
#include "drregret/matrix_util.hpp"

namespace drr {

// All distributions sharing a prescribed mean and covariance.
class MomentAmbiguitySet {
 public:
  MomentAmbiguitySet(VectorXd mean, MatrixXd cov, const Tolerances& tol = {});

  const VectorXd& mean() const noexcept { return mean_; }
  const MatrixXd& cov() const noexcept { return cov_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  VectorXd mean_;
  MatrixXd cov_;
};

enum class Family { gaussian, laplacian };

std::string_view to_string(Family family);
// Accepts "gaussian" or "laplacian"; throws InvalidInput otherwise.
Family parse_family(std::string_view name);

// A concrete member of a moment set: the family plus its first two moments.
struct DistributionModel {
  Family family;
  MomentAmbiguitySet moments;
};

// Moments of the closed-loop state, k = 0..T.
struct MomentTrajectory {
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;

  int horizon() const noexcept { return static_cast<int>(means.size()) - 1; }
};

// Omega = [[Sigma, 0], [0, 1]], the second-moment matrix of a zero-mean
// vector augmented with a constant 1.
class SecondMomentMatrix {
 public:
  // Validates the block layout of a full (d+1)x(d+1) matrix.
  explicit SecondMomentMatrix(MatrixXd omega, const Tolerances& tol = {});

  static SecondMomentMatrix from_covariance(const MatrixXd& cov,
                                            const Tolerances& tol = {});

  const MatrixXd& matrix() const noexcept { return omega_; }
  Eigen::Index dim() const noexcept { return omega_.rows() - 1; }
  MatrixXd covariance() const {
    return omega_.topLeftCorner(dim(), dim());
  }

 private:
  MatrixXd omega_;
};

// Identifies one reproducible random stream. Distinct (seed, stream) pairs
// seed independent engines.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // Child stream for work item `index` (one rollout, one worker, ...).
  RngSpec substream(std::uint64_t index) const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

class RandomStream {
 public:
  explicit RandomStream(const RngSpec& spec);

  double normal() { return normal_(engine_); }
  double exponential() { return exponential_(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

  // Scratch vector reused by Sampler::draw so draws do not allocate.
  VectorXd& scratch(Eigen::Index size) {
    if (scratch_.size() != size) scratch_.resize(size);
    return scratch_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
  VectorXd scratch_;
};

// Draws from a DistributionModel. Gaussian: mean + L z. Laplacian: the
// Gaussian scale mixture mean + sqrt(W) L z with W ~ Exp(1), which has the
// same covariance and marginal excess kurtosis 3.
class Sampler {
 public:
  explicit Sampler(const DistributionModel& model);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  void draw(RandomStream& rng, Eigen::Ref<VectorXd> out) const;
  VectorXd draw(RandomStream& rng) const;

 private:
  Family family_;
  VectorXd mean_;
  MatrixXd factor_;
};

// count draws as the columns of a dim x count matrix.
MatrixXd sample_gaussian(const MomentAmbiguitySet& set, const RngSpec& rng,
                         int count);
MatrixXd sample_laplacian(const MomentAmbiguitySet& set, const RngSpec& rng,
                          int count);
MatrixXd sample(const DistributionModel& model, const RngSpec& rng, int count);

// True iff the declared moments of dist equal (set.mean, set.cov) within tol.
bool membership_check(const DistributionModel& dist,
                      const MomentAmbiguitySet& set, double tol);

// Exact mean/covariance recursion of the closed loop under u_k = K_k x_k:
// mu_{k+1} = (A + B K_k) mu_k,
// Sigma_{k+1} = (A + B K_k) Sigma_k (A + B K_k)^T + D Sigma_w D^T.
MomentTrajectory propagate_moments(const LinearSystem& sys,
                                   const Policy& policy,
                                   const MomentAmbiguitySet& x0_set,
                                   const MomentAmbiguitySet& w_set,
                                   int horizon);

}  // namespace drr
