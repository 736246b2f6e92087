#include "npt/simulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "npt/parallel.hpp"

namespace npt {

std::string correlation_model_name(CorrelationModel m) {
  switch (m) {
    case CorrelationModel::linear: return "linear";
    case CorrelationModel::tanh_model: return "tanh";
    case CorrelationModel::matrix_exp: return "matrix-exp";
  }
  throw ValidationError("correlation_model_name: unknown model");
}

void Scenario::validate() const {
  if (d != 2 && d != 10) throw ValidationError("Scenario: d must be 2 or 10");
  const bool bivariate_model = model == CorrelationModel::linear ||
                               model == CorrelationModel::tanh_model;
  if (bivariate_model && d != 2) {
    throw ValidationError("Scenario: linear/tanh correlation models need d=2");
  }
  if (model == CorrelationModel::matrix_exp && d != 10) {
    throw ValidationError("Scenario: matrix-exp correlation model needs d=10");
  }
  if (n < 2 || big_n < 2 || reps < 1 || n_te < 1 || grid_m < 1) {
    throw ValidationError("Scenario: invalid sizes");
  }
}

Scenario scenario_from_name(const std::string& name) {
  Scenario sc;
  if (name == "d2-linear") {
    sc.d = 2;
    sc.model = CorrelationModel::linear;
  } else if (name == "d2-tanh") {
    sc.d = 2;
    sc.model = CorrelationModel::tanh_model;
  } else if (name == "d10") {
    sc.d = 10;
    sc.model = CorrelationModel::matrix_exp;
  } else {
    throw ValidationError("unknown scenario '" + name +
                          "' (expected d2-linear, d2-tanh, or d10)");
  }
  return sc;
}

namespace {

// Regularized lower incomplete gamma by series (x < shape + 1) or continued
// fraction (otherwise).
double gammp_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gammq_continued_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_cdf_regularized(double shape, double x) {
  if (!(shape > 0.0)) {
    throw ValidationError("gamma_cdf_regularized: shape must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x < shape + 1.0) return gammp_series(shape, x);
  return 1.0 - gammq_continued_fraction(shape, x);
}

double gamma_quantile(double shape, double scale, double p) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ValidationError("gamma_quantile: parameters must be positive");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("gamma_quantile: probability must lie in (0, 1)");
  }
  // Wilson-Hilferty start for the unit-scale quantile.
  const double z = phi_inv(p);
  const double u = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
  double x = shape * u * u * u;
  if (!(x > 0.0)) x = shape * std::exp(z / std::sqrt(shape));
  if (!(x > 0.0)) x = 1e-12;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  const double log_gamma = std::lgamma(shape);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma_cdf_regularized(shape, x) - p;
    if (std::abs(f) <= 1e-14) break;
    if (f > 0.0) {
      hi = std::min(hi, x);
    } else {
      lo = std::max(lo, x);
    }
    const double density =
        std::exp((shape - 1.0) * std::log(x) - x - log_gamma);
    double next = x - f / density;
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(x, 1.0);
    }
    if (next == x) break;
    x = next;
  }
  return scale * x;
}

SpdMatrix matrix_exp(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw NumericError("matrix_exp: eigendecomposition failed");
  }
  const Eigen::VectorXd lam = solver.eigenvalues().array().exp();
  Eigen::MatrixXd out = solver.eigenvectors() * lam.asDiagonal() *
                        solver.eigenvectors().transpose();
  return SpdMatrix(0.5 * (out + out.transpose()));
}

double SignedGammaMarginal::quantile(double p) const {
  if (sign >= 0) return gamma_quantile(shape, scale, p);
  return -gamma_quantile(shape, scale, 1.0 - p);
}

QuantileFunction TrueResponse::grid_quantile(int j,
                                             const QuantileGrid& grid) const {
  Eigen::VectorXd values(grid.m);
  for (int k = 0; k < grid.m; ++k) {
    values(k) = marginals[j].quantile(grid.point(k));
  }
  return QuantileFunction(grid, std::move(values));
}

RawSample TrueResponse::sample(int n, Rng& rng) const {
  const int d = latent.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(latent.mat());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("TrueResponse::sample: latent is not factorizable");
  }
  const Eigen::MatrixXd chol = llt.matrixL();
  Eigen::MatrixXd rows(n, d);
  Eigen::VectorXd g(d);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < d; ++j) g(j) = rng.normal();
    const Eigen::VectorXd z = chol * g;
    for (int j = 0; j < d; ++j) rows(k, j) = marginals[j].quantile(phi(z(j)));
  }
  return RawSample(std::move(rows));
}

ExperimentParams ExperimentParams::draw(const Scenario& sc, Rng& rng) {
  ExperimentParams params;
  params.betas.resize(sc.d);
  params.betas[0] << 0.5, 0.0;
  if (sc.d >= 2) params.betas[1] << 0.4, -0.3;
  for (int j = 2; j < sc.d; ++j) {
    params.betas[j] << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
  }
  if (sc.model == CorrelationModel::matrix_exp) {
    params.m1 = Eigen::MatrixXd::Zero(sc.d, sc.d);
    params.m2 = Eigen::MatrixXd::Zero(sc.d, sc.d);
    for (int i = 0; i < sc.d; ++i) {
      for (int j = i + 1; j < sc.d; ++j) {
        params.m1(i, j) = params.m1(j, i) = rng.uniform(-0.5, 0.5);
        params.m2(i, j) = params.m2(j, i) = rng.uniform(-0.5, 0.5);
      }
    }
  }
  return params;
}

Eigen::MatrixXd gen_predictors(int n, Rng& rng) {
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i) {
    z(i, 0) = rng.uniform(-1.0, 1.0);
    z(i, 1) = rng.uniform(-1.0, 1.0);
  }
  return z;
}

namespace {

CorrelationMatrix draw_latent(const Eigen::VectorXd& z, const Scenario& sc,
                              const ExperimentParams& params, Rng& rng) {
  switch (sc.model) {
    case CorrelationModel::linear: {
      const double eps = 0.1 * rng.normal();
      // The linear model can leave (-1, 1) with tiny probability; clamp so
      // the latent stays strictly positive definite.
      const double rho = std::clamp(0.3 * z(0) + eps, -0.999, 0.999);
      return CorrelationMatrix::bivariate(rho);
    }
    case CorrelationModel::tanh_model: {
      const double eps = 0.1 * rng.normal();
      return CorrelationMatrix::bivariate(std::tanh(2.0 * z(1) + eps));
    }
    case CorrelationModel::matrix_exp: {
      Eigen::MatrixXd exponent = z(0) * params.m1 + z(1) * params.m2;
      for (int i = 0; i < sc.d; ++i) {
        for (int j = i + 1; j < sc.d; ++j) {
          const double e = 0.1 * rng.normal();
          exponent(i, j) += e;
          exponent(j, i) += e;
        }
      }
      return project_correlation(matrix_exp(SymMatrix(std::move(exponent))));
    }
  }
  throw ValidationError("gen_response: unknown correlation model");
}

}  // namespace

TrueResponse gen_response(const Eigen::VectorXd& z, const Scenario& sc,
                          const ExperimentParams& params, Rng& rng) {
  constexpr double kSigma = 3.0;
  constexpr double kC = 1.0;
  std::vector<SignedGammaMarginal> marginals;
  marginals.reserve(sc.d);
  for (int j = 0; j < sc.d; ++j) {
    const double loc = kSigma + params.betas[j].dot(z.head(2));
    if (!(loc > 0.0)) {
      // Unreachable under the stated design ranges (|beta' z| < sigma).
      throw NumericError("gen_response: nonpositive scale parameter");
    }
    const double theta = gamma_quantile(loc * loc / kC, kC / loc, rng.uniform());
    const int sign = (j % 2 == 0) ? -1 : 1;  // (-1)^j with 1-based j
    marginals.push_back(SignedGammaMarginal{2.0, theta, sign});
  }
  CorrelationMatrix latent = draw_latent(z, sc, params, rng);
  return TrueResponse{std::move(marginals), std::move(latent), z};
}

namespace {

struct ReplicateOutput {
  std::array<std::pair<double, double>, 3> mspe;  // npt, marginal, gaussian
  bool ok = false;
};

constexpr std::array<Method, 3> kMethods = {Method::npt, Method::marginal,
                                            Method::gaussian};

ReplicateOutput run_replicate(const Scenario& sc,
                              const ExperimentParams& params,
                              std::uint64_t rep_index) {
  Rng rng = Rng::substream(sc.seed, rep_index + 1);
  const QuantileGrid grid{sc.grid_m};

  const Eigen::MatrixXd z_train = gen_predictors(sc.n, rng);
  std::vector<RawSample> samples;
  samples.reserve(sc.n);
  for (int i = 0; i < sc.n; ++i) {
    const TrueResponse truth =
        gen_response(z_train.row(i).transpose(), sc, params, rng);
    samples.push_back(truth.sample(sc.big_n, rng));
  }

  TruthSet test{gen_predictors(sc.n_te, rng), grid, {}};
  test.truths.reserve(sc.n_te);
  for (int l = 0; l < sc.n_te; ++l) {
    const TrueResponse truth =
        gen_response(test.z.row(l).transpose(), sc, params, rng);
    std::vector<Eigen::VectorXd> quantiles;
    quantiles.reserve(sc.d);
    for (int j = 0; j < sc.d; ++j) {
      quantiles.push_back(truth.grid_quantile(j, grid).values());
    }
    test.truths.push_back(TrueDistribution{std::move(quantiles), truth.latent});
  }

  ReplicateOutput out;
  DistributionalDataset ds =
      make_dataset(PredictorTable(z_train), samples, grid);
  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    out.mspe[m] = mspe(fit(ds, GdConfig{}, kMethods[m]), test);
  }
  out.ok = true;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const Scenario& sc, int threads) {
  sc.validate();
  Rng param_rng = Rng::substream(sc.seed, 0);
  const ExperimentParams params = ExperimentParams::draw(sc, param_rng);

  std::vector<ReplicateOutput> outputs(sc.reps);
  parallel_for(sc.reps, threads, [&](int rep) {
    try {
      outputs[rep] = run_replicate(sc, params, static_cast<std::uint64_t>(rep));
    } catch (const std::exception&) {
      outputs[rep].ok = false;
    }
  });

  ExperimentResult result;
  result.rows.reserve(static_cast<std::size_t>(sc.reps) * kMethods.size());
  for (int rep = 0; rep < sc.reps; ++rep) {
    if (!outputs[rep].ok) {
      ++result.failed_replicates;
      continue;
    }
    for (std::size_t m = 0; m < kMethods.size(); ++m) {
      result.rows.push_back(ExperimentRow{rep, kMethods[m],
                                          outputs[rep].mspe[m].first,
                                          outputs[rep].mspe[m].second});
    }
  }
  return result;
}

}  // namespace npt
