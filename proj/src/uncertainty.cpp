#include "drregret/uncertainty.hpp"

#include <cmath>
#include <string>

#include "drregret/errors.hpp"

namespace drr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

MomentAmbiguitySet::MomentAmbiguitySet(VectorXd mean, MatrixXd cov,
                                       const Tolerances& tol)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() < 1) throw DimensionError("moment set dimension must be >= 1");
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw DimensionError("covariance shape does not match mean dimension " +
                         std::to_string(mean_.size()));
  }
  if (!mean_.allFinite()) throw InvalidInput("mean has non-finite entries");
  require_psd(cov_, "covariance", tol);
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::gaussian:
      return "gaussian";
    case Family::laplacian:
      return "laplacian";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "laplacian") return Family::laplacian;
  throw InvalidInput("unknown distribution family '" + std::string(name) +
                     "' (expected gaussian or laplacian)");
}

SecondMomentMatrix::SecondMomentMatrix(MatrixXd omega, const Tolerances& tol)
    : omega_(std::move(omega)) {
  const auto n = omega_.rows();
  if (n < 2 || omega_.cols() != n) {
    throw DimensionError("second-moment matrix must be square of size >= 2");
  }
  const auto d = n - 1;
  if (omega_(d, d) != 1.0 || omega_.col(d).head(d).cwiseAbs().maxCoeff() != 0.0 ||
      omega_.row(d).head(d).cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidInput("second-moment matrix must have block layout [[Sigma, 0], [0, 1]]");
  }
  require_psd(omega_.topLeftCorner(d, d), "second-moment covariance block", tol);
}

SecondMomentMatrix SecondMomentMatrix::from_covariance(const MatrixXd& cov,
                                                       const Tolerances& tol) {
  const auto d = cov.rows();
  MatrixXd omega = MatrixXd::Zero(d + 1, d + 1);
  omega.topLeftCorner(d, d) = cov;
  omega(d, d) = 1.0;
  return SecondMomentMatrix(std::move(omega), tol);
}

RngSpec RngSpec::substream(std::uint64_t index) const {
  return {seed, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

RandomStream::RandomStream(const RngSpec& spec) {
  const std::uint64_t a = splitmix64(spec.seed);
  const std::uint64_t b = splitmix64(spec.stream ^ 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

Sampler::Sampler(const DistributionModel& model)
    : family_(model.family),
      mean_(model.moments.mean()),
      factor_(psd_factor(model.moments.cov())) {}

void Sampler::draw(RandomStream& rng, Eigen::Ref<VectorXd> out) const {
  VectorXd& z = rng.scratch(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  if (family_ == Family::laplacian) z *= std::sqrt(rng.exponential());
  out.noalias() = factor_ * z;
  out += mean_;
}

VectorXd Sampler::draw(RandomStream& rng) const {
  VectorXd out(dim());
  draw(rng, out);
  return out;
}

MatrixXd sample(const DistributionModel& model, const RngSpec& rng, int count) {
  if (count < 1) throw InvalidInput("sample count must be >= 1");
  const Sampler sampler(model);
  RandomStream stream(rng);
  MatrixXd out(sampler.dim(), count);
  for (int i = 0; i < count; ++i) sampler.draw(stream, out.col(i));
  return out;
}

MatrixXd sample_gaussian(const MomentAmbiguitySet& set, const RngSpec& rng,
                         int count) {
  return sample(DistributionModel{Family::gaussian, set}, rng, count);
}

MatrixXd sample_laplacian(const MomentAmbiguitySet& set, const RngSpec& rng,
                          int count) {
  return sample(DistributionModel{Family::laplacian, set}, rng, count);
}

bool membership_check(const DistributionModel& dist,
                      const MomentAmbiguitySet& set, double tol) {
  if (dist.moments.dim() != set.dim()) {
    throw DimensionError("membership_check: dimension mismatch");
  }
  const double mean_err = (dist.moments.mean() - set.mean()).cwiseAbs().maxCoeff();
  const double cov_err = (dist.moments.cov() - set.cov()).cwiseAbs().maxCoeff();
  return mean_err <= tol && cov_err <= tol;
}

MomentTrajectory propagate_moments(const LinearSystem& sys,
                                   const Policy& policy,
                                   const MomentAmbiguitySet& x0_set,
                                   const MomentAmbiguitySet& w_set,
                                   int horizon) {
  if (horizon < 0 || policy.horizon() != horizon) {
    throw DimensionError("propagate_moments: policy has " +
                         std::to_string(policy.horizon()) + " gains for horizon " +
                         std::to_string(horizon));
  }
  if (x0_set.dim() != sys.state_dim() || w_set.dim() != sys.disturbance_dim()) {
    throw DimensionError("propagate_moments: moment set dimensions do not match system");
  }
  if (w_set.mean().cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidInput("propagate_moments: disturbance mean must be zero");
  }
  const MatrixXd noise = symmetrize(sys.D() * w_set.cov() * sys.D().transpose());
  MomentTrajectory out;
  out.means.reserve(horizon + 1);
  out.covs.reserve(horizon + 1);
  out.means.push_back(x0_set.mean());
  out.covs.push_back(x0_set.cov());
  for (int k = 0; k < horizon; ++k) {
    const MatrixXd& gain = policy.gain(static_cast<std::size_t>(k));
    if (gain.rows() != sys.input_dim() || gain.cols() != sys.state_dim()) {
      throw DimensionError("propagate_moments: gain shape mismatch");
    }
    const MatrixXd closed = sys.A() + sys.B() * gain;
    out.means.push_back(closed * out.means.back());
    out.covs.push_back(symmetrize(closed * out.covs.back() * closed.transpose() + noise));
  }
  return out;
}

}  // namespace drr
