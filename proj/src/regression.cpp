#include "npt/regression.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "npt/parallel.hpp"
#include "npt/rng.hpp"

namespace npt {

PredictorTable::PredictorTable(Eigen::MatrixXd z, double ridge) {
  if (z.rows() < 2 || z.cols() < 1) {
    throw ValidationError("PredictorTable: need n >= 2 rows and p >= 1 columns");
  }
  if (!z.allFinite()) {
    throw ValidationError("PredictorTable: non-finite predictor entries");
  }
  if (ridge < 0.0) throw ValidationError("PredictorTable: ridge must be >= 0");
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  Eigen::VectorXd zbar = z.colwise().mean();
  Eigen::MatrixXd centered = z.rowwise() - zbar.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / n;
  cov += ridge * Eigen::MatrixXd::Identity(p, p);
  cov = 0.5 * (cov + cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("PredictorTable: covariance eigendecomposition failed");
  }
  const double lam_min = solver.eigenvalues().minCoeff();
  const double lam_max = solver.eigenvalues().maxCoeff();
  if (!(lam_min > 0.0) || lam_max / lam_min >= 1e12) {
    std::ostringstream msg;
    msg << "PredictorTable: predictor covariance is singular or "
           "ill-conditioned (condition number "
        << (lam_min > 0.0 ? lam_max / lam_min
                          : std::numeric_limits<double>::infinity())
        << "); set a positive ridge";
    throw ValidationError(msg.str());
  }
  Eigen::MatrixXd cov_inv = solver.eigenvectors() *
                            solver.eigenvalues().cwiseInverse().asDiagonal() *
                            solver.eigenvectors().transpose();
  z_ = std::move(z);
  zbar_ = std::move(zbar);
  cov_inv_ = 0.5 * (cov_inv + cov_inv.transpose()).eval();
  ridge_ = ridge;
}

PredictorTable PredictorTable::from_parts(Eigen::MatrixXd z,
                                          Eigen::VectorXd zbar,
                                          Eigen::MatrixXd cov_inv,
                                          double ridge) {
  if (zbar.size() != z.cols() || cov_inv.rows() != z.cols() ||
      cov_inv.cols() != z.cols()) {
    throw ValidationError("PredictorTable: inconsistent serialized parts");
  }
  PredictorTable t;
  t.z_ = std::move(z);
  t.zbar_ = std::move(zbar);
  t.cov_inv_ = std::move(cov_inv);
  t.ridge_ = ridge;
  return t;
}

Eigen::VectorXd PredictorTable::weights_at(const Eigen::VectorXd& z) const {
  if (z.size() != p()) {
    throw ValidationError("weights_at: evaluation point has wrong length");
  }
  if (!z.allFinite()) {
    throw ValidationError("weights_at: non-finite evaluation point");
  }
  const Eigen::VectorXd direction = cov_inv_ * (z - zbar_);
  Eigen::VectorXd w(n());
  for (int i = 0; i < n(); ++i) {
    w(i) = 1.0 + (z_.row(i).transpose() - zbar_).dot(direction);
  }
  return w;
}

void DistributionalDataset::validate() const {
  if (responses.empty() ||
      static_cast<int>(responses.size()) != predictors.n()) {
    throw ValidationError(
        "DistributionalDataset: response count differs from predictor rows");
  }
  const int d = responses[0].d();
  const QuantileGrid grid = responses[0].grid();
  for (std::size_t i = 1; i < responses.size(); ++i) {
    if (responses[i].d() != d || !(responses[i].grid() == grid)) {
      throw ValidationError(
          "DistributionalDataset: responses disagree on dimension or grid");
    }
  }
  if (!sample_means.empty() &&
      (sample_means.size() != responses.size() ||
       sample_covs.size() != responses.size())) {
    throw ValidationError("DistributionalDataset: incomplete sample moments");
  }
}

DistributionalDataset make_dataset(
    PredictorTable predictors, const std::vector<RawSample>& samples,
    const QuantileGrid& grid,
    const std::vector<std::optional<Support>>& supports) {
  DistributionalDataset ds{std::move(predictors), {}, {}, {}};
  ds.responses.reserve(samples.size());
  ds.sample_means.reserve(samples.size());
  ds.sample_covs.reserve(samples.size());
  for (const RawSample& s : samples) {
    ds.responses.push_back(estimate(s, grid, supports));
    Eigen::VectorXd mean = s.rows.colwise().mean();
    Eigen::MatrixXd centered = s.rows.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / s.n();
    ds.sample_means.push_back(std::move(mean));
    ds.sample_covs.push_back(0.5 * (cov + cov.transpose()));
  }
  ds.validate();
  return ds;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::npt: return "npt";
    case Method::marginal: return "marginal";
    case Method::gaussian: return "gaussian";
  }
  throw ValidationError("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "npt") return Method::npt;
  if (name == "marginal") return Method::marginal;
  if (name == "gaussian") return Method::gaussian;
  throw ValidationError("unknown method '" + name + "'");
}

namespace {

QuantileFunction fit_marginal(const DistributionalDataset& data, int j,
                              std::span<const double> weights) {
  const QuantileGrid grid = data.responses[0].grid();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.m);
  for (std::size_t i = 0; i < data.responses.size(); ++i) {
    mean += weights[i] * data.responses[i].marginal(j).values();
  }
  const std::span<const double> mean_span(mean.data(),
                                          static_cast<std::size_t>(mean.size()));
  QuantileFunction fitted = isotonic_project(
      grid, mean_span, data.responses[0].marginal(j).support());
  if (fitted.degenerate()) {
    std::ostringstream msg;
    msg << "predict: fitted marginal " << j
        << " has zero grid variance; no valid distribution exists here";
    throw DegenerateError(msg.str());
  }
  return fitted;
}

Prediction predict_impl(const DistributionalDataset& data, const GdConfig& cfg,
                        Method method, const Eigen::VectorXd& z,
                        const PredictOptions& opts) {
  const int n = data.predictors.n();
  const int d = data.responses[0].d();
  const Eigen::VectorXd s = data.predictors.weights_at(z);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = s(i) / n;

  std::vector<QuantileFunction> marginals;
  marginals.reserve(d);

  if (method == Method::gaussian) {
    if (!data.has_moments()) {
      throw ValidationError(
          "predict: gaussian method needs per-response sample moments");
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) mean += w[i] * data.sample_means[i];
    std::vector<SpdMatrix> covs;
    covs.reserve(n);
    for (int i = 0; i < n; ++i) covs.emplace_back(data.sample_covs[i]);
    const CovarianceFitResult cov_fit = fit_covariance_frechet(covs, w, cfg);
    const QuantileGrid grid = data.responses[0].grid();
    for (int j = 0; j < d; ++j) {
      const double var = cov_fit.value.mat()(j, j);
      if (var <= cfg.eigen_floor) {
        std::ostringstream msg;
        msg << "predict: fitted covariance has degenerate variance for "
               "marginal "
            << j;
        throw DegenerateError(msg.str());
      }
      const double sd = std::sqrt(var);
      Eigen::VectorXd values(grid.m);
      for (int k = 0; k < grid.m; ++k) {
        values(k) = mean(j) + sd * phi_inv(grid.point(k));
      }
      const auto support = data.responses[0].marginal(j).support();
      if (support) {
        for (int k = 0; k < grid.m; ++k) {
          values(k) = std::clamp(values(k), support->lo, support->hi);
        }
      }
      marginals.emplace_back(grid, std::move(values), support);
    }
    Prediction out{Nonparanormal(std::move(marginals),
                                 project_correlation(cov_fit.value,
                                                     cfg.eigen_floor)),
                   LatentSolveInfo{cov_fit.converged, cov_fit.iterations,
                                   cov_fit.grad_norm, false},
                   {}};
    if (!cov_fit.converged) {
      out.warnings.push_back("covariance solve did not converge");
    }
    return out;
  }

  for (int j = 0; j < d; ++j) marginals.push_back(fit_marginal(data, j, w));

  if (method == Method::marginal) {
    return Prediction{Nonparanormal(std::move(marginals),
                                    CorrelationMatrix::identity(d)),
                      LatentSolveInfo{},
                      {}};
  }

  // NPT: weighted BW Frechet mean of the latent correlations. In the
  // bivariate case the interior-solution condition A, D > 0 is checked
  // up front; a boundary hit is an error unless the caller asked to clamp.
  std::vector<CorrelationMatrix> latents;
  latents.reserve(n);
  for (const auto& r : data.responses) latents.push_back(r.latent());
  if (d == 2) {
    double a = 0.0;
    double dd = 0.0;
    for (int i = 0; i < n; ++i) {
      const double rho = latents[i].mat()(0, 1);
      a += w[i] * std::sqrt(1.0 + rho);
      dd += w[i] * std::sqrt(1.0 - rho);
    }
    if (a <= 0.0 || dd <= 0.0) {
      if (!opts.clamp_boundary) {
        std::ostringstream msg;
        msg << "predict: bivariate correlation fit has a boundary solution "
               "(A = "
            << a << ", D = " << dd << ")";
        throw BoundaryError(msg.str());
      }
      const double rho = (a <= 0.0) ? -(1.0 - 1e-8) : (1.0 - 1e-8);
      Prediction out{Nonparanormal(std::move(marginals),
                                   CorrelationMatrix::bivariate(rho)),
                     LatentSolveInfo{true, 0, 0.0, true},
                     {}};
      out.warnings.push_back(
          "bivariate correlation solution lies on the boundary; clamped to "
          "rho = " +
          std::to_string(rho));
      return out;
    }
  }
  CorrelationFitResult latent_fit = fit_correlation_frechet(latents, w, cfg);
  Prediction out{Nonparanormal(std::move(marginals),
                               std::move(latent_fit.value)),
                 LatentSolveInfo{latent_fit.converged, latent_fit.iterations,
                                 latent_fit.grad_norm, false},
                 {}};
  if (!out.latent.converged) {
    out.warnings.push_back("correlation solve did not converge");
  }
  return out;
}

}  // namespace

NptFit::NptFit(DistributionalDataset data, GdConfig cfg, Method method)
    : data_(std::move(data)), cfg_(cfg), method_(method) {
  cfg_.validate();
  data_.validate();
  if (method_ == Method::gaussian && !data_.has_moments()) {
    throw ValidationError("fit: gaussian method needs sample moments");
  }
  mean_fit_ =
      predict_impl(data_, cfg_, method_, data_.predictors.zbar(), {}).value;
}

NptFit fit(DistributionalDataset ds, const GdConfig& cfg, Method method) {
  return NptFit(std::move(ds), cfg, method);
}

Nonparanormal predict(const NptFit& fit, const Eigen::VectorXd& z) {
  return predict_impl(fit.data(), fit.cfg(), fit.method(), z, {}).value;
}

Prediction predict_detailed(const NptFit& fit, const Eigen::VectorXd& z,
                            const PredictOptions& opts) {
  return predict_impl(fit.data(), fit.cfg(), fit.method(), z, opts);
}

R2Report r2_components(const NptFit& fit) {
  const auto& data = fit.data();
  const int n = data.predictors.n();
  const int d = fit.d();
  const Nonparanormal& null_fit = fit.mean_fit();

  Eigen::VectorXd num = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(d + 1);
  for (int i = 0; i < n; ++i) {
    const Nonparanormal pred =
        predict(fit, data.predictors.z().row(i).transpose());
    for (int j = 0; j < d; ++j) {
      const double r = w2(data.responses[i].marginal(j), pred.marginal(j));
      const double r0 = w2(data.responses[i].marginal(j), null_fit.marginal(j));
      num(j) += r * r;
      den(j) += r0 * r0;
    }
    const double b = bw_distance(data.responses[i].latent().spd(),
                                 pred.latent().spd());
    const double b0 = bw_distance(data.responses[i].latent().spd(),
                                  null_fit.latent().spd());
    num(d) += b * b;
    den(d) += b0 * b0;
  }

  R2Report report;
  report.marginal_r2.resize(d);
  for (int j = 0; j <= d; ++j) {
    if (den(j) <= 0.0) {
      std::ostringstream msg;
      msg << "r2_components: null Frechet variance of "
          << (j < d ? "marginal " + std::to_string(j) : std::string("latent"))
          << " component is zero";
      throw DegenerateError(msg.str());
    }
  }
  for (int j = 0; j < d; ++j) report.marginal_r2(j) = 1.0 - num(j) / den(j);
  report.latent_r2 = 1.0 - num(d) / den(d);
  report.global_r2 = 1.0 - num.sum() / den.sum();
  return report;
}

namespace {

Eigen::VectorXd r2_vector(const R2Report& r) {
  Eigen::VectorXd v(r.marginal_r2.size() + 1);
  v.head(r.marginal_r2.size()) = r.marginal_r2;
  v(r.marginal_r2.size()) = r.latent_r2;
  return v;
}

}  // namespace

R2Report permutation_test(const DistributionalDataset& ds, int B,
                          std::uint64_t seed, const GdConfig& cfg,
                          Method method, int threads) {
  if (B < 1) throw ValidationError("permutation_test: B must be >= 1");
  ds.validate();
  const int n = ds.predictors.n();
  const int d = ds.responses[0].d();
  const int c = d + 1;

  R2Report report = r2_components(fit(ds, cfg, method));
  const Eigen::VectorXd observed = r2_vector(report);

  // Null replicates with independently seeded substreams: results do not
  // depend on thread count or execution order.
  std::vector<Eigen::VectorXd> null_r2(B);
  std::vector<char> ok(B, 0);
  parallel_for(B, threads, [&](int b) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(b));
    const std::vector<int> perm = rng.permutation(n);
    Eigen::MatrixXd z_perm(n, ds.predictors.p());
    for (int i = 0; i < n; ++i) z_perm.row(i) = ds.predictors.z().row(perm[i]);
    try {
      DistributionalDataset permuted{
          PredictorTable(std::move(z_perm), ds.predictors.ridge()),
          ds.responses, ds.sample_means, ds.sample_covs};
      null_r2[b] = r2_vector(r2_components(fit(std::move(permuted), cfg, method)));
      ok[b] = 1;
    } catch (const NumericError&) {
      ok[b] = 0;
    }
  });

  std::vector<Eigen::VectorXd> nulls;
  nulls.reserve(B);
  for (int b = 0; b < B; ++b) {
    if (ok[b]) nulls.push_back(std::move(null_r2[b]));
  }
  const int used = static_cast<int>(nulls.size());
  const int failed = B - used;
  if (failed * 10 > B) {
    std::ostringstream msg;
    msg << "permutation_test: " << failed << " of " << B
        << " replicates failed to fit";
    throw NumericError(msg.str());
  }

  // Raw p-values against the null distribution of each component.
  Eigen::VectorXd raw_p(c);
  std::vector<std::vector<double>> sorted(c);
  for (int k = 0; k < c; ++k) {
    sorted[k].reserve(used);
    for (const auto& v : nulls) sorted[k].push_back(v(k));
    std::sort(sorted[k].begin(), sorted[k].end());
  }
  const auto count_geq = [&](int k, double value) {
    return static_cast<int>(sorted[k].end() -
                            std::lower_bound(sorted[k].begin(),
                                             sorted[k].end(), value));
  };
  for (int k = 0; k < c; ++k) {
    raw_p(k) = (1.0 + count_geq(k, observed(k))) / (used + 1.0);
  }

  // Westfall-Young min-p adjustment. Each replicate's statistic is ranked
  // within its own null (leave-one-out with add-one smoothing, the same
  // formula as the raw p-value), so the per-replicate p-values are on a
  // common scale across components before taking the minimum.
  std::vector<double> min_p(used);
  for (int b = 0; b < used; ++b) {
    double m = 1.0;
    for (int k = 0; k < c; ++k) {
      const double pk = count_geq(k, nulls[b](k)) / (used + 1.0);
      m = std::min(m, pk);
    }
    min_p[b] = m;
  }
  Eigen::VectorXd adjusted_p(c);
  for (int k = 0; k < c; ++k) {
    int cnt = 0;
    for (int b = 0; b < used; ++b) {
      if (min_p[b] <= raw_p(k)) ++cnt;
    }
    adjusted_p(k) = (1.0 + cnt) / (used + 1.0);
  }

  report.raw_p = std::move(raw_p);
  report.adjusted_p = std::move(adjusted_p);
  report.replicates_used = used;
  report.replicates_failed = failed;
  return report;
}

std::pair<double, double> mspe(const NptFit& fit, const TruthSet& test) {
  if (!(test.grid == fit.grid())) throw ValidationError("mspe: grid mismatch");
  if (test.z.rows() != static_cast<Eigen::Index>(test.truths.size()) ||
      test.z.cols() != fit.data().predictors.p()) {
    throw ValidationError("mspe: truth set shape mismatch");
  }
  const int d = fit.d();
  const int m = test.grid.m;
  const int n_te = static_cast<int>(test.truths.size());
  double marg = 0.0;
  double corr = 0.0;
  for (int l = 0; l < n_te; ++l) {
    const Nonparanormal pred = predict(fit, test.z.row(l).transpose());
    for (int j = 0; j < d; ++j) {
      marg += (pred.marginal(j).values() - test.truths[l].quantiles[j])
                  .squaredNorm() /
              m;
    }
    const double b =
        bw_distance(pred.latent().spd(), test.truths[l].latent.spd());
    corr += b * b;
  }
  return {marg / (static_cast<double>(d) * n_te), corr / n_te};
}

}  // namespace npt
