#include "drregret/matrix_util.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "drregret/errors.hpp"

namespace drr {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

double symmetry_error(const MatrixXd& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

MatrixXd symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

double min_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

void check_symmetric(const MatrixXd& m, std::string_view what,
                     const Tolerances& tol) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + " has non-finite entries");
  }
  const double asym = symmetry_error(m);
  if (asym > tol.sym) {
    throw InvalidInput(std::string(what) + " is not symmetric (max |M-M^T| = " +
                       std::to_string(asym) + ")");
  }
}

}  // namespace

void require_psd(const MatrixXd& m, std::string_view what,
                 const Tolerances& tol) {
  check_symmetric(m, what, tol);
  const double lmin = min_eigenvalue(m);
  if (lmin < -tol.psd) {
    throw InvalidInput(std::string(what) +
                       " is not positive semidefinite (min eigenvalue " +
                       std::to_string(lmin) + ")");
  }
}

void require_pd(const MatrixXd& m, std::string_view what,
                const Tolerances& tol) {
  check_symmetric(m, what, tol);
  const double lmin = min_eigenvalue(m);
  if (!(lmin > 0.0)) {
    throw InvalidInput(std::string(what) +
                       " is not positive definite (min eigenvalue " +
                       std::to_string(lmin) + ")");
  }
}

MatrixXd psd_factor(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    MatrixXd l = llt.matrixL();
    if (l.allFinite()) return l;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double trace_positive(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0).sum();
}

double relative_frobenius_error(const MatrixXd& estimate,
                                const MatrixXd& reference) {
  if (estimate.rows() != reference.rows() ||
      estimate.cols() != reference.cols()) {
    throw DimensionError("relative_frobenius_error: shape mismatch");
  }
  return (estimate - reference).norm() / reference.norm();
}

VectorXd sample_mean(const MatrixXd& samples) {
  if (samples.cols() == 0) throw InvalidInput("sample_mean: no samples");
  return samples.rowwise().mean();
}

MatrixXd sample_covariance(const MatrixXd& samples) {
  if (samples.cols() < 2) throw InvalidInput("sample_covariance: need >= 2 samples");
  const MatrixXd centered = samples.colwise() - sample_mean(samples);
  return centered * centered.transpose() /
         static_cast<double>(samples.cols() - 1);
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace drr
