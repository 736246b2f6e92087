#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "npt/bw_geometry.hpp"
#include "npt/quantile.hpp"
#include "npt/rng.hpp"

namespace npt {

// N x d matrix of raw observations, N >= 2, finite.
struct RawSample {
  Eigen::MatrixXd rows;

  explicit RawSample(Eigen::MatrixXd r);
  int n() const { return static_cast<int>(rows.rows()); }
  int d() const { return static_cast<int>(rows.cols()); }
};

// A multivariate distribution represented by d marginal quantile functions
// plus the latent Gaussian correlation matrix of its copula.
class Nonparanormal {
 public:
  Nonparanormal(std::vector<QuantileFunction> marginals,
                CorrelationMatrix latent);

  int d() const { return latent_.dim(); }
  const QuantileFunction& marginal(int j) const { return marginals_[j]; }
  const std::vector<QuantileFunction>& marginals() const { return marginals_; }
  const CorrelationMatrix& latent() const { return latent_; }
  const QuantileGrid& grid() const { return marginals_[0].grid(); }

 private:
  std::vector<QuantileFunction> marginals_;
  CorrelationMatrix latent_;
};

// Sine-transformed Kendall tau-a matrix: entry (j,k) = sin(pi tau_jk / 2),
// unit diagonal. Ties (zero-probability under continuous models) are counted
// as neither concordant nor discordant and reported through *ties_detected.
SymMatrix kendall_tau_matrix(const RawSample& s, bool* ties_detected = nullptr);

struct EstimateDiagnostics {
  bool ties_detected = false;
  bool psd_repaired = false;  // sine-Kendall matrix needed a spectral fix
};

// Plug-in estimator from raw samples: empirical grid quantiles per column,
// latent correlation from the sine-Kendall matrix (eigenvalues clipped at
// 1e-8 from below, then symmetric normalization; a no-op when already PSD).
Nonparanormal estimate(const RawSample& s, const QuantileGrid& grid,
                       const std::vector<std::optional<Support>>& supports = {},
                       EstimateDiagnostics* diag = nullptr);

// The nonparanormal transport metric:
// sqrt( sum_j w2(a_j, b_j)^2 + bw_distance(a.latent, b.latent)^2 ).
double npt_distance(const Nonparanormal& a, const Nonparanormal& b);

// N draws via the latent Gaussian pushforward: row k has entries
// q_j(Phi(Z_kj)) with Z ~ N(0, latent). Requires a strictly positive
// definite latent.
RawSample sample(const Nonparanormal& m, int n, Rng& rng);

// Standard normal CDF and inverse.
double phi(double x);
double phi_inv(double p);

// Closed-form Gaussian-Sobolev seminorms of the transport map from the
// standard normal, used as constants in the metric-equivalence bound.
double h1_seminorm_gaussian(double sd);
double h1_seminorm_lognormal(double mu0, double sd);

}  // namespace npt
