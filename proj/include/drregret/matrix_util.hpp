#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace drr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Numerical tolerances shared by the validating constructors.
struct Tolerances {
  double psd = 1e-8;  // smallest admissible eigenvalue is -psd
  double sym = 1e-9;  // max |M - M^T| entry
  double dyn = 1e-9;  // dynamics residual for trajectories
};

bool all_finite(const MatrixXd& m);

// Largest absolute entry of M - M^T.
double symmetry_error(const MatrixXd& m);

MatrixXd symmetrize(const MatrixXd& m);

// Smallest eigenvalue of the symmetric part of a square matrix.
double min_eigenvalue(const MatrixXd& m);

// Throws InvalidInput naming `what` unless m is square, finite, symmetric
// within tol.sym and has min eigenvalue >= -tol.psd.
void require_psd(const MatrixXd& m, std::string_view what,
                 const Tolerances& tol = {});

// Same as require_psd but the min eigenvalue must be strictly positive.
void require_pd(const MatrixXd& m, std::string_view what,
                const Tolerances& tol = {});

// Returns L with L L^T = m. Tries Cholesky first; falls back to a symmetric
// eigendecomposition with negative eigenvalues clipped to zero, which covers
// semidefinite inputs such as the zero matrix.
MatrixXd psd_factor(const MatrixXd& m);

// Symmetric PSD square root (eigenvalues clipped at zero).
MatrixXd psd_sqrt(const MatrixXd& m);

// Sum of the positive eigenvalues of a symmetric matrix.
double trace_positive(const MatrixXd& m);

// ||estimate - reference||_F / ||reference||_F.
double relative_frobenius_error(const MatrixXd& estimate,
                                const MatrixXd& reference);

// Column-wise samples (d x N) to mean and unbiased covariance.
VectorXd sample_mean(const MatrixXd& samples);
MatrixXd sample_covariance(const MatrixXd& samples);

double spectral_radius(const MatrixXd& m);

}  // namespace drr
