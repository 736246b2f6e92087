#include "npt/bw_geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace npt {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigendecompose(
    const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition failed");
  }
  return solver;
}

// V f(lambda) V^T with eigenvalues clamped at zero before applying f.
Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& m, double (*f)(double)) {
  auto solver = eigendecompose(m);
  Eigen::VectorXd lam = solver.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    lam(i) = f(std::max(lam(i), 0.0));
  }
  Eigen::MatrixXd out =
      solver.eigenvectors() * lam.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

void check_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

SymMatrix::SymMatrix(Eigen::MatrixXd m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
    throw ValidationError("SymMatrix: matrix must be square and non-empty");
  }
  if (!mat_.allFinite()) {
    throw ValidationError("SymMatrix: entries must be finite");
  }
  const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    std::ostringstream msg;
    msg << "SymMatrix: asymmetry " << asym << " exceeds 1e-12";
    throw ValidationError(msg.str());
  }
  mat_ = 0.5 * (mat_ + mat_.transpose()).eval();
}

SpdMatrix::SpdMatrix(SymMatrix base) : base_(std::move(base)) {
  min_eig_ = eigendecompose(base_.mat()).eigenvalues().minCoeff();
  if (min_eig_ < -1e-10) {
    std::ostringstream msg;
    msg << "SpdMatrix: smallest eigenvalue " << min_eig_ << " is below -1e-10";
    throw ValidationError(msg.str());
  }
}

CorrelationMatrix::CorrelationMatrix(SpdMatrix base) : base_(std::move(base)) {
  Eigen::MatrixXd m = base_.mat();
  const int d = static_cast<int>(m.rows());
  for (int i = 0; i < d; ++i) {
    if (m(i, i) != 1.0) {
      std::ostringstream msg;
      msg << "CorrelationMatrix: diagonal entry (" << i << "," << i << ") = "
          << m(i, i) << " is not exactly 1";
      throw ValidationError(msg.str());
    }
    for (int j = 0; j < d; ++j) {
      if (i != j && std::abs(m(i, j)) > 1.0 + 1e-9) {
        throw ValidationError(
            "CorrelationMatrix: off-diagonal entry outside [-1, 1]");
      }
    }
  }
}

CorrelationMatrix CorrelationMatrix::identity(int dim) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

CorrelationMatrix CorrelationMatrix::bivariate(double rho) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, rho, rho, 1.0;
  return CorrelationMatrix(std::move(m));
}

void GdConfig::validate() const {
  if (!(step > 0.0)) throw ValidationError("GdConfig: step must be positive");
  if (!(tol > 0.0)) throw ValidationError("GdConfig: tol must be positive");
  if (max_iter < 1) throw ValidationError("GdConfig: max_iter must be >= 1");
}

SpdMatrix mat_sqrt(const SpdMatrix& a) {
  return SpdMatrix(spectral_apply(a.mat(), [](double x) { return std::sqrt(x); }));
}

double bw_distance(const SpdMatrix& sigma, const SpdMatrix& q) {
  check_same_dim(sigma.dim(), q.dim(), "bw_distance");
  // Identical inputs are at distance zero exactly; the trace formula would
  // return sqrt-of-rounding noise (~1e-8) instead.
  if ((sigma.mat().array() == q.mat().array()).all()) return 0.0;
  const Eigen::MatrixXd rs = mat_sqrt(sigma).mat();
  const Eigen::MatrixXd cross = spectral_apply(
      rs * q.mat() * rs, [](double x) { return std::sqrt(x); });
  const double sq = sigma.mat().trace() + q.mat().trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(sq, 0.0));
}

SymMatrix bw_transport(const SpdMatrix& sigma, const SpdMatrix& q,
                       double eigen_floor) {
  check_same_dim(sigma.dim(), q.dim(), "bw_transport");
  auto solver = eigendecompose(sigma.mat());
  const Eigen::VectorXd lam = solver.eigenvalues();
  if (lam.minCoeff() < eigen_floor) {
    std::ostringstream msg;
    msg << "bw_transport: source matrix is singular (smallest eigenvalue "
        << lam.minCoeff() << " < floor " << eigen_floor << ")";
    throw SingularityError(msg.str());
  }
  const Eigen::MatrixXd v = solver.eigenvectors();
  const Eigen::MatrixXd root =
      v * lam.cwiseSqrt().asDiagonal() * v.transpose();
  const Eigen::MatrixXd inv_root =
      v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  const Eigen::MatrixXd mid = spectral_apply(
      root * q.mat() * root, [](double x) { return std::sqrt(x); });
  Eigen::MatrixXd t = inv_root * mid * inv_root;
  return SymMatrix(0.5 * (t + t.transpose()).eval());
}

CorrelationMatrix project_correlation(const SpdMatrix& sigma,
                                      double eigen_floor) {
  const int d = sigma.dim();
  Eigen::VectorXd diag = sigma.mat().diagonal();
  for (int i = 0; i < d; ++i) {
    if (diag(i) <= eigen_floor) {
      std::ostringstream msg;
      msg << "project_correlation: diagonal entry " << i << " = " << diag(i)
          << " is not positive";
      throw DegenerateError(msg.str());
    }
  }
  const Eigen::VectorXd inv_root = diag.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r =
      inv_root.asDiagonal() * sigma.mat() * inv_root.asDiagonal();
  r = 0.5 * (r + r.transpose()).eval();
  for (int i = 0; i < d; ++i) {
    r(i, i) = 1.0;
    for (int j = 0; j < d; ++j) {
      if (i != j) r(i, j) = std::clamp(r(i, j), -1.0, 1.0);
    }
  }
  return CorrelationMatrix(std::move(r));
}

namespace {

// One descent step shared by the correlation and covariance solvers:
// G = I - step (I - sum_i w_i T_{S}^{S_i}), retract to G S G. The square
// root of the iterate is computed once and reused across all transports.
Eigen::MatrixXd descent_step(const Eigen::MatrixXd& s,
                             const std::vector<SpdMatrix>& mats,
                             std::span<const double> weights,
                             const GdConfig& cfg, double* grad_norm) {
  const int d = static_cast<int>(s.rows());
  auto solver = eigendecompose(s);
  const Eigen::VectorXd lam = solver.eigenvalues();
  if (lam.minCoeff() < cfg.eigen_floor) {
    std::ostringstream msg;
    msg << "frechet descent: iterate lost strict positive definiteness "
           "(smallest eigenvalue "
        << lam.minCoeff() << " < floor " << cfg.eigen_floor << ")";
    throw SingularityError(msg.str());
  }
  const Eigen::MatrixXd v = solver.eigenvectors();
  const Eigen::MatrixXd root = v * lam.cwiseSqrt().asDiagonal() * v.transpose();
  const Eigen::MatrixXd inv_root =
      v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  Eigen::MatrixXd mean_transport = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const Eigen::MatrixXd mid = spectral_apply(
        root * mats[i].mat() * root, [](double x) { return std::sqrt(x); });
    mean_transport += weights[i] * (inv_root * mid * inv_root);
  }
  mean_transport = 0.5 * (mean_transport + mean_transport.transpose()).eval();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  *grad_norm = (id - mean_transport).norm();
  const Eigen::MatrixXd g = id - cfg.step * (id - mean_transport);
  Eigen::MatrixXd next = g * s * g;
  return 0.5 * (next + next.transpose()).eval();
}

void check_weights(std::size_t n_mats, std::span<const double> weights) {
  if (n_mats == 0) throw ValidationError("frechet fit: empty input");
  if (weights.size() != n_mats) {
    throw ValidationError("frechet fit: weights/matrices length mismatch");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "frechet fit: weights sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
}

}  // namespace

CorrelationFitResult fit_correlation_frechet(
    const std::vector<CorrelationMatrix>& mats, std::span<const double> weights,
    const GdConfig& cfg) {
  cfg.validate();
  check_weights(mats.size(), weights);
  const int d = mats[0].dim();
  std::vector<SpdMatrix> spd;
  spd.reserve(mats.size());
  for (std::size_t i = 0; i < mats.size(); ++i) {
    check_same_dim(d, mats[i].dim(), "fit_correlation_frechet");
    if (!mats[i].spd().strictly_positive(cfg.eigen_floor)) {
      std::ostringstream msg;
      msg << "fit_correlation_frechet: input " << i
          << " is not strictly positive definite";
      throw ValidationError(msg.str());
    }
    spd.push_back(mats[i].spd());
  }

  CorrelationMatrix current = mats[0];
  double grad_norm = 0.0;
  int iter = 0;
  bool converged = false;
  while (iter < cfg.max_iter) {
    ++iter;
    const Eigen::MatrixXd retracted =
        descent_step(current.mat(), spd, weights, cfg, &grad_norm);
    CorrelationMatrix next =
        project_correlation(SpdMatrix(retracted), cfg.eigen_floor);
    const double change = (next.mat() - current.mat()).norm();
    current = std::move(next);
    if (change < cfg.tol) {
      converged = true;
      break;
    }
  }
  return CorrelationFitResult{std::move(current), converged, iter, grad_norm};
}

CovarianceFitResult fit_covariance_frechet(const std::vector<SpdMatrix>& mats,
                                           std::span<const double> weights,
                                           const GdConfig& cfg) {
  cfg.validate();
  check_weights(mats.size(), weights);
  const int d = mats[0].dim();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    check_same_dim(d, mats[i].dim(), "fit_covariance_frechet");
    if (!mats[i].strictly_positive(cfg.eigen_floor)) {
      std::ostringstream msg;
      msg << "fit_covariance_frechet: input " << i
          << " is not strictly positive definite";
      throw ValidationError(msg.str());
    }
  }

  Eigen::MatrixXd current = mats[0].mat();
  double grad_norm = 0.0;
  int iter = 0;
  bool converged = false;
  while (iter < cfg.max_iter) {
    ++iter;
    const Eigen::MatrixXd next =
        descent_step(current, mats, weights, cfg, &grad_norm);
    const double change = (next - current).norm();
    current = next;
    if (change < cfg.tol) {
      converged = true;
      break;
    }
  }
  return CovarianceFitResult{SpdMatrix(std::move(current)), converged, iter,
                             grad_norm};
}

double bivariate_closed_form(std::span<const double> rhos,
                             std::span<const double> weights,
                             bool clamp_boundary, bool* clamped) {
  if (rhos.empty() || rhos.size() != weights.size()) {
    throw ValidationError("bivariate_closed_form: length mismatch");
  }
  if (clamped != nullptr) *clamped = false;
  double a = 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (std::abs(rhos[i]) >= 1.0) {
      throw ValidationError("bivariate_closed_form: |rho| must be < 1");
    }
    a += weights[i] * std::sqrt(1.0 + rhos[i]);
    d += weights[i] * std::sqrt(1.0 - rhos[i]);
  }
  if (a <= 0.0 || d <= 0.0) {
    if (!clamp_boundary) {
      std::ostringstream msg;
      msg << "bivariate_closed_form: no interior solution (A = " << a
          << ", D = " << d << "); the minimizer lies on the boundary";
      throw BoundaryError(msg.str());
    }
    if (clamped != nullptr) *clamped = true;
    return (a <= 0.0) ? -(1.0 - 1e-8) : (1.0 - 1e-8);
  }
  const double a2 = a * a;
  const double d2 = d * d;
  return (a2 - d2) / (a2 + d2);
}

std::pair<double, double> sphere_embed_bivariate(double rho) {
  if (std::abs(rho) > 1.0) {
    throw ValidationError("sphere_embed_bivariate: rho must be in [-1, 1]");
  }
  return {std::sqrt(1.0 + rho), std::sqrt(1.0 - rho)};
}

}  // namespace npt
