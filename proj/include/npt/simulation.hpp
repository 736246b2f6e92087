#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "npt/bw_geometry.hpp"
#include "npt/nonparanormal.hpp"
#include "npt/regression.hpp"
#include "npt/rng.hpp"

namespace npt {

enum class CorrelationModel { linear, tanh_model, matrix_exp };

std::string correlation_model_name(CorrelationModel m);

// One cell of the synthetic design grid. The linear and tanh correlation
// models are bivariate; the matrix-exponential model uses d = 10.
struct Scenario {
  int d = 2;
  CorrelationModel model = CorrelationModel::linear;
  int n = 50;
  int big_n = 100;  // observations per response distribution
  int reps = 100;
  int n_te = 500;
  std::uint64_t seed = 0;
  int grid_m = 200;

  void validate() const;
};

// Parses "d2-linear", "d2-tanh", or "d10".
Scenario scenario_from_name(const std::string& name);

// Inverse CDF of the Gamma(shape, scale) distribution, solved to
// |CDF(result) - p| <= 1e-10 by a safeguarded Newton iteration started from
// the Wilson-Hilferty approximation.
double gamma_quantile(double shape, double scale, double p);

// Regularized lower incomplete gamma P(shape, x); exposed as the oracle for
// gamma_quantile tests.
double gamma_cdf_regularized(double shape, double x);

// Eigendecomposition-based exponential of a symmetric matrix.
SpdMatrix matrix_exp(const SymMatrix& a);

// A single signed-Gamma marginal: sign * G with G ~ Gamma(shape, scale);
// sign = -1 reverses the quantile function as q(p) = -q_G(1 - p).
struct SignedGammaMarginal {
  double shape;
  double scale;
  int sign;

  double quantile(double p) const;
};

// The generating truth for one response distribution.
struct TrueResponse {
  std::vector<SignedGammaMarginal> marginals;
  CorrelationMatrix latent;
  Eigen::VectorXd z;

  QuantileFunction grid_quantile(int j, const QuantileGrid& grid) const;
  RawSample sample(int n, Rng& rng) const;
};

// Coefficients drawn once per experiment and held fixed across replicates.
struct ExperimentParams {
  std::vector<Eigen::Vector2d> betas;  // d entries
  Eigen::MatrixXd m1;                  // d x d, zero diagonal (d = 10 only)
  Eigen::MatrixXd m2;

  static ExperimentParams draw(const Scenario& sc, Rng& rng);
};

// i.i.d. predictors uniform on [-1, 1]^2.
Eigen::MatrixXd gen_predictors(int n, Rng& rng);

TrueResponse gen_response(const Eigen::VectorXd& z, const Scenario& sc,
                          const ExperimentParams& params, Rng& rng);

struct ExperimentRow {
  int rep;
  Method method;
  double mspe_marg;
  double mspe_corr;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  int failed_replicates = 0;
};

// Full Monte-Carlo comparison: per replicate, fit NPT / marginal / Gaussian
// regressions on estimated responses and evaluate decoupled test errors
// against the analytic truth. Deterministic given the scenario seed, for any
// thread count.
ExperimentResult run_experiment(const Scenario& sc, int threads = 1);

}  // namespace npt
