#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npt/bw_geometry.hpp"
#include "npt/nonparanormal.hpp"
#include "npt/quantile.hpp"

namespace npt {

// Predictor matrix with the cached pieces of the global Frechet weight
// function s_n(Z_i, z) = 1 + (Z_i - zbar)' cov_inv (z - zbar).
class PredictorTable {
 public:
  explicit PredictorTable(Eigen::MatrixXd z, double ridge = 0.0);

  // Reassembles a table from serialized parts without recomputation.
  static PredictorTable from_parts(Eigen::MatrixXd z, Eigen::VectorXd zbar,
                                   Eigen::MatrixXd cov_inv, double ridge);

  int n() const { return static_cast<int>(z_.rows()); }
  int p() const { return static_cast<int>(z_.cols()); }
  const Eigen::MatrixXd& z() const { return z_; }
  const Eigen::VectorXd& zbar() const { return zbar_; }
  const Eigen::MatrixXd& cov_inv() const { return cov_inv_; }
  double ridge() const { return ridge_; }

  // The n weights s_n(Z_i, z); their mean is 1 for every z.
  Eigen::VectorXd weights_at(const Eigen::VectorXd& z) const;

 private:
  PredictorTable() = default;

  Eigen::MatrixXd z_;
  Eigen::VectorXd zbar_;
  Eigen::MatrixXd cov_inv_;
  double ridge_ = 0.0;
};

// Paired predictors and distributional responses. sample_means/sample_covs
// are filled when responses were estimated from raw samples and are required
// by the Gaussian baseline.
struct DistributionalDataset {
  PredictorTable predictors;
  std::vector<Nonparanormal> responses;
  std::vector<Eigen::VectorXd> sample_means;  // empty when unavailable
  std::vector<Eigen::MatrixXd> sample_covs;   // empty when unavailable

  void validate() const;
  bool has_moments() const { return !sample_means.empty(); }
};

// Builds a dataset by estimating one nonparanormal response per raw sample;
// also records sample means and covariances for the Gaussian baseline.
DistributionalDataset make_dataset(
    PredictorTable predictors, const std::vector<RawSample>& samples,
    const QuantileGrid& grid,
    const std::vector<std::optional<Support>>& supports = {});

enum class Method { npt, marginal, gaussian };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct LatentSolveInfo {
  bool converged = true;
  int iterations = 0;
  double grad_norm = 0.0;
  bool boundary_clamped = false;
};

struct Prediction {
  Nonparanormal value;
  LatentSolveInfo latent;
  std::vector<std::string> warnings;
};

struct PredictOptions {
  // Clamp a bivariate boundary solution to +-(1 - 1e-8) and record a warning
  // instead of throwing BoundaryError.
  bool clamp_boundary = false;
};

// Fitted global Frechet regression. Immutable once constructed; predict may
// be called concurrently.
class NptFit {
 public:
  NptFit(DistributionalDataset data, GdConfig cfg, Method method);

  const DistributionalDataset& data() const { return data_; }
  const GdConfig& cfg() const { return cfg_; }
  Method method() const { return method_; }
  const Nonparanormal& mean_fit() const { return *mean_fit_; }
  int d() const { return data_.responses[0].d(); }
  const QuantileGrid& grid() const { return data_.responses[0].grid(); }

 private:
  DistributionalDataset data_;
  GdConfig cfg_;
  Method method_;
  std::optional<Nonparanormal> mean_fit_;
};

NptFit fit(DistributionalDataset ds, const GdConfig& cfg = {},
           Method method = Method::npt);

Nonparanormal predict(const NptFit& fit, const Eigen::VectorXd& z);
Prediction predict_detailed(const NptFit& fit, const Eigen::VectorXd& z,
                            const PredictOptions& opts = {});

// Component-wise and global goodness of fit, plus permutation p-values when
// produced by permutation_test. Component order: marginals 1..d, then the
// latent correlation component.
struct R2Report {
  Eigen::VectorXd marginal_r2;
  double latent_r2 = 0.0;
  double global_r2 = 0.0;

  Eigen::VectorXd raw_p;       // empty unless inference was run
  Eigen::VectorXd adjusted_p;  // empty unless inference was run
  int replicates_used = 0;
  int replicates_failed = 0;
};

R2Report r2_components(const NptFit& fit);

// Permutation test of no predictor effect per component, with Westfall-Young
// min-p adjustment across the d+1 components. Deterministic given the seed;
// failed replicates are dropped (more than 10% failing aborts).
R2Report permutation_test(const DistributionalDataset& ds, int B,
                          std::uint64_t seed, const GdConfig& cfg = {},
                          Method method = Method::npt, int threads = 1);

// Ground truth at test predictors: analytic marginal quantiles on the grid
// and the true latent correlation.
struct TrueDistribution {
  std::vector<Eigen::VectorXd> quantiles;  // d vectors of length M
  CorrelationMatrix latent;
};

struct TruthSet {
  Eigen::MatrixXd z;  // n_te x p
  QuantileGrid grid;
  std::vector<TrueDistribution> truths;
};

// Decoupled out-of-sample errors: mean over marginals and test points of the
// squared grid-L2 quantile error, and mean squared BW error of the latent.
std::pair<double, double> mspe(const NptFit& fit, const TruthSet& test);

}  // namespace npt
