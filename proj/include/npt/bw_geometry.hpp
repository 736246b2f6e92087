#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "npt/errors.hpp"

namespace npt {

// Floor on eigenvalues below which a matrix is treated as singular.
inline constexpr double kEigenFloor = 1e-10;

// Symmetric d x d matrix. Construction validates symmetry to 1e-12 and then
// symmetrizes exactly so downstream eigensolvers see a bitwise-symmetric input.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& mat() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

// Positive semidefinite matrix: smallest eigenvalue >= -1e-10 at construction.
class SpdMatrix {
 public:
  explicit SpdMatrix(SymMatrix base);
  explicit SpdMatrix(Eigen::MatrixXd m) : SpdMatrix(SymMatrix(std::move(m))) {}

  int dim() const { return base_.dim(); }
  const Eigen::MatrixXd& mat() const { return base_.mat(); }
  double min_eigenvalue() const { return min_eig_; }
  bool strictly_positive(double eigen_floor = kEigenFloor) const {
    return min_eig_ >= eigen_floor;
  }

 private:
  SymMatrix base_;
  double min_eig_;
};

// Correlation matrix: symmetric PSD, unit diagonal (exact), off-diagonal
// entries in [-1, 1].
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(SpdMatrix base);
  explicit CorrelationMatrix(Eigen::MatrixXd m)
      : CorrelationMatrix(SpdMatrix(std::move(m))) {}

  static CorrelationMatrix identity(int dim);
  static CorrelationMatrix bivariate(double rho);

  int dim() const { return base_.dim(); }
  const Eigen::MatrixXd& mat() const { return base_.mat(); }
  const SpdMatrix& spd() const { return base_; }
  double min_eigenvalue() const { return base_.min_eigenvalue(); }

 private:
  SpdMatrix base_;
};

// Settings for the projected Riemannian gradient descent.
struct GdConfig {
  double step = 1.0;
  int max_iter = 100;
  double tol = 1e-10;
  double eigen_floor = kEigenFloor;

  void validate() const;
};

// Symmetric square root via eigendecomposition, eigenvalues clamped at zero.
SpdMatrix mat_sqrt(const SpdMatrix& a);

// Bures-Wasserstein distance sqrt(tr[S + Q - 2 (S^{1/2} Q S^{1/2})^{1/2}]),
// with negative rounding clamped to zero.
double bw_distance(const SpdMatrix& sigma, const SpdMatrix& q);

// Optimal transport matrix S^{-1/2} (S^{1/2} Q S^{1/2})^{1/2} S^{-1/2}.
// Requires sigma strictly positive definite above `eigen_floor`.
SymMatrix bw_transport(const SpdMatrix& sigma, const SpdMatrix& q,
                       double eigen_floor = kEigenFloor);

// Symmetric normalization D^{-1/2} S D^{-1/2}, the BW-nearest correlation
// matrix. Output diagonal is exactly 1.
CorrelationMatrix project_correlation(const SpdMatrix& sigma,
                                      double eigen_floor = kEigenFloor);

struct CorrelationFitResult {
  CorrelationMatrix value;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

struct CovarianceFitResult {
  SpdMatrix value;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// Weighted Frechet mean of correlation matrices under the BW metric, by
// projected Riemannian gradient descent. Weights must sum to 1 (within 1e-9)
// and may be negative. Starts from mats[0]. Non-convergence after max_iter
// returns the last iterate flagged converged = false.
CorrelationFitResult fit_correlation_frechet(
    const std::vector<CorrelationMatrix>& mats, std::span<const double> weights,
    const GdConfig& cfg = {});

// The same descent on the positive definite cone, without the correlation
// projection step.
CovarianceFitResult fit_covariance_frechet(const std::vector<SpdMatrix>& mats,
                                           std::span<const double> weights,
                                           const GdConfig& cfg = {});

// Closed-form weighted BW Frechet mean of bivariate correlations:
// rho = (A^2 - D^2) / (A^2 + D^2) with A = sum w_i sqrt(1 + rho_i) and
// D = sum w_i sqrt(1 - rho_i). Throws BoundaryError when A <= 0 or D <= 0
// unless clamp_boundary is set, in which case the result is clamped to
// +-(1 - 1e-8) and *clamped reports it.
double bivariate_closed_form(std::span<const double> rhos,
                             std::span<const double> weights,
                             bool clamp_boundary = false,
                             bool* clamped = nullptr);

// Isometric embedding of bivariate correlations into the first quadrant of
// the radius-sqrt(2) circle: rho -> (sqrt(1+rho), sqrt(1-rho)). The chordal
// distance between embeddings equals the BW distance.
std::pair<double, double> sphere_embed_bivariate(double rho);

}  // namespace npt
