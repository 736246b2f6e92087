// Acceptance suite: one check per shipped guarantee, each printed as a
// single PASS/FAIL line with its runtime. Exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "npt/bw_geometry.hpp"
#include "npt/csv.hpp"
#include "npt/nonparanormal.hpp"
#include "npt/ot_oracle.hpp"
#include "npt/quantile.hpp"
#include "npt/regression.hpp"
#include "npt/rng.hpp"
#include "npt/simulation.hpp"

using namespace npt;
namespace fs = std::filesystem;

namespace {

int g_hardware_threads = 4;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

Eigen::MatrixXd random_spd2(Rng& rng) {
  Eigen::MatrixXd m(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  Eigen::MatrixXd a = m * m.transpose() + 0.05 * Eigen::MatrixXd::Identity(2, 2);
  return 0.5 * (a + a.transpose());
}

double bw2_closed_form_2x2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double tr_ab = (a * b).trace();
  const double det_ab = a.determinant() * b.determinant();
  const double cross =
      std::sqrt(std::max(tr_ab + 2.0 * std::sqrt(std::max(det_ab, 0.0)), 0.0));
  return a.trace() + b.trace() - 2.0 * cross;
}

// ---------------------------------------------------------------------------
// 1. Bivariate BW closed form.
Check criterion_bivariate_bw() {
  Check c;
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const double r = rng.uniform(-0.999, 0.999);
    const double rho = rng.uniform(-0.999, 0.999);
    const double b = bw_distance(CorrelationMatrix::bivariate(r).spd(),
                                 CorrelationMatrix::bivariate(rho).spd());
    const double closed = 4.0 - 2.0 * (std::sqrt((1.0 + r) * (1.0 + rho)) +
                                       std::sqrt((1.0 - r) * (1.0 - rho)));
    c.require(std::abs(b * b - closed) <= 1e-10,
              "closed form mismatch at r=" + std::to_string(r));
  }
  return c;
}

// 2. The symmetric normalization is the BW-nearest correlation matrix.
Check criterion_projection_optimality() {
  Check c;
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd sigma = random_spd2(rng);
    const double projected = project_correlation(SpdMatrix(sigma)).mat()(0, 1);
    double best_rho = 0.0;
    double best = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd cand = Eigen::MatrixXd::Identity(2, 2);
    for (int g = -999; g <= 999; ++g) {
      const double rho = g * 1e-3;
      cand(0, 1) = cand(1, 0) = rho;
      const double obj = bw2_closed_form_2x2(sigma, cand);
      if (obj < best) {
        best = obj;
        best_rho = rho;
      }
    }
    c.require(std::abs(projected - best_rho) < 2e-3,
              "grid argmin " + std::to_string(best_rho) + " vs projection " +
                  std::to_string(projected));
  }
  return c;
}

// 3. One projected-descent iteration solves the bivariate problem exactly.
Check criterion_one_step_bivariate() {
  Check c;
  Rng rng(303);
  GdConfig one_step;
  one_step.max_iter = 1;
  int tested = 0;
  while (tested < 1000) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 7);
    std::vector<double> rhos(n), weights(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      rhos[i] = rng.uniform(-0.95, 0.95);
      weights[i] = rng.uniform(-0.3, 1.0);
      total += weights[i];
    }
    if (std::abs(total) < 0.05) continue;
    for (double& w : weights) w /= total;
    double a = 0.0, d = 0.0;
    for (int i = 0; i < n; ++i) {
      a += weights[i] * std::sqrt(1.0 + rhos[i]);
      d += weights[i] * std::sqrt(1.0 - rhos[i]);
    }
    if (a <= 0.0 || d <= 0.0) continue;
    ++tested;

    std::vector<CorrelationMatrix> mats;
    mats.reserve(n);
    for (double rho : rhos) mats.push_back(CorrelationMatrix::bivariate(rho));
    const auto result = fit_correlation_frechet(mats, weights, one_step);
    const double closed = bivariate_closed_form(rhos, weights);
    c.require(std::abs(result.value.mat()(0, 1) - closed) <= 1e-10,
              "one-step result differs from the closed form");
    const double deriv = -a / std::sqrt(1.0 + closed) + d / std::sqrt(1.0 - closed);
    c.require(std::abs(deriv) <= 1e-8, "closed form is not stationary");
  }
  return c;
}

// 4. Gaussian subfamily: NPT equals / bounds the exact Gaussian Wasserstein.
Check criterion_gaussian_subfamily() {
  Check c;
  const QuantileGrid grid{200};
  const double grid_error = 2.0 / grid.m;
  Rng rng(404);

  Eigen::VectorXd std_normal(grid.m);
  for (int k = 0; k < grid.m; ++k) std_normal(k) = phi_inv(grid.point(k));

  const auto gaussian_npn = [&](const Eigen::VectorXd& mean,
                                const CorrelationMatrix& latent) {
    std::vector<QuantileFunction> marginals;
    for (int j = 0; j < mean.size(); ++j) {
      marginals.emplace_back(grid, (std_normal.array() + mean(j)).matrix());
    }
    return Nonparanormal(std::move(marginals), latent);
  };

  const auto random_corr3 = [&] {
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    Eigen::MatrixXd a = m * m.transpose() + 0.2 * Eigen::MatrixXd::Identity(3, 3);
    return project_correlation(SpdMatrix(0.5 * (a + a.transpose())));
  };

  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd m1(3), m2(3);
    for (int j = 0; j < 3; ++j) {
      m1(j) = rng.uniform(-2.0, 2.0);
      m2(j) = rng.uniform(-2.0, 2.0);
    }
    const CorrelationMatrix s1 = random_corr3();
    const CorrelationMatrix s2 = random_corr3();

    if (trial < 200) {
      // Equal latents: the two metrics coincide.
      const double npt_d = npt_distance(gaussian_npn(m1, s1), gaussian_npn(m2, s1));
      const double exact = gaussian_w2(m1, s1.spd(), m2, s1.spd());
      c.require(std::abs(npt_d - exact) <= 2.0 * grid_error,
                "equal-latent metrics differ beyond grid error");
    }
    const double npt_d = npt_distance(gaussian_npn(m1, s1), gaussian_npn(m2, s2));
    const double exact = gaussian_w2(m1, s1.spd(), m2, s2.spd());
    c.require(exact <= std::numbers::sqrt2 * npt_d + grid_error,
              "upper bound violated on the Gaussian subfamily");
  }
  return c;
}

// 5. Exact OT oracles agree with brute force and the marginal lower bound.
Check criterion_ot_oracle() {
  Check c;
  Rng rng(505);
  const auto random_cloud = [&](int n, int d) {
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform(-2.0, 2.0);
    }
    return PointCloud(std::move(pts));
  };

  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const PointCloud a = random_cloud(n, 2);
      const PointCloud b = random_cloud(n, 2);
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      double best = std::numeric_limits<double>::infinity();
      do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
          total += (a.pts.row(i) - b.pts.row(perm[i])).squaredNorm();
        }
        best = std::min(best, total);
      } while (std::next_permutation(perm.begin(), perm.end()));
      c.require(std::abs(assignment_w2(a, b) - std::sqrt(best / n)) <= 1e-12,
                "assignment does not match brute force");
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 30);
    const PointCloud a = random_cloud(n, 1);
    const PointCloud b = random_cloud(n, 1);
    const std::vector<double> xs(a.pts.col(0).data(), a.pts.col(0).data() + n);
    const std::vector<double> ys(b.pts.col(0).data(), b.pts.col(0).data() + n);
    c.require(std::abs(assignment_w2(a, b) - sorted_w2(xs, ys)) <= 1e-12,
              "univariate assignment differs from sorted matching");
  }

  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 15);
    const PointCloud a = random_cloud(n, 3);
    const PointCloud b = random_cloud(n, 3);
    double marginal_sq = 0.0;
    for (int j = 0; j < 3; ++j) {
      const std::vector<double> xs(a.pts.col(j).data(), a.pts.col(j).data() + n);
      const std::vector<double> ys(b.pts.col(j).data(), b.pts.col(j).data() + n);
      const double w = sorted_w2(xs, ys);
      marginal_sq += w * w;
    }
    const double joint = assignment_w2(a, b);
    c.require(joint * joint >= marginal_sq - 1e-10,
              "marginal lower bound violated");
  }
  return c;
}

// 6. Element-wise concentration of the sine-Kendall latent estimator.
Check criterion_kendall_concentration() {
  Check c;
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1.0, 0.5, 0.2, 0.5, 1.0, -0.3, 0.2, -0.3, 1.0;
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  const QuantileGrid grid{100};

  int within = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng = Rng::substream(606, seed);
    Eigen::MatrixXd rows(2000, 3);
    Eigen::VectorXd g(3);
    for (int k = 0; k < 2000; ++k) {
      for (int j = 0; j < 3; ++j) g(j) = rng.normal();
      rows.row(k) = (chol * g).transpose();
    }
    const Nonparanormal est = estimate(RawSample(std::move(rows)), grid);
    const double err = (est.latent().mat() - sigma).cwiseAbs().maxCoeff();
    if (err <= 0.15) ++within;
  }
  c.require(within >= 48, "only " + std::to_string(within) +
                              "/50 seeds within 0.15 of the true latent");
  return c;
}

// 7. Noiseless linear responses are recovered at held-out predictors.
Check criterion_noiseless_recovery() {
  Check c;
  const QuantileGrid grid{200};
  Rng rng(707);
  const int n = 50;
  Eigen::MatrixXd z(n, 1);
  std::vector<Nonparanormal> responses;
  for (int i = 0; i < n; ++i) {
    z(i, 0) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd v(grid.m);
    for (int k = 0; k < grid.m; ++k) v(k) = z(i, 0) + grid.point(k);
    responses.emplace_back(
        std::vector<QuantileFunction>{QuantileFunction(grid, v),
                                      QuantileFunction(grid, 2.0 * v)},
        CorrelationMatrix::bivariate(0.37));
  }
  const NptFit fitted =
      fit(DistributionalDataset{PredictorTable(std::move(z)),
                                std::move(responses),
                                {},
                                {}});
  for (double at : {-0.8, -0.15, 0.3, 0.77}) {
    Eigen::VectorXd zq(1);
    zq << at;
    const Nonparanormal pred = predict(fitted, zq);
    double sup = 0.0;
    for (int k = 0; k < grid.m; ++k) {
      sup = std::max(sup, std::abs(pred.marginal(0).values()(k) -
                                   (at + grid.point(k))));
      sup = std::max(sup, std::abs(pred.marginal(1).values()(k) -
                                   2.0 * (at + grid.point(k))));
    }
    c.require(sup <= 1e-8, "sup quantile error " + std::to_string(sup));
    c.require(std::abs(pred.latent().mat()(0, 1) - 0.37) <= 1e-10,
              "constant latent not recovered");
  }
  return c;
}

// 8. Empirical rate decay of the latent regression error in n.
Check criterion_rate_decay() {
  Check c;
  const Scenario base = scenario_from_name("d2-linear");
  Rng param_rng(1);
  const ExperimentParams params = ExperimentParams::draw(base, param_rng);
  const QuantileGrid grid{200};

  const auto mean_corr_error = [&](int n, int seed) {
    Rng rng = Rng::substream(808 + seed, static_cast<std::uint64_t>(n));
    const Eigen::MatrixXd z = gen_predictors(n, rng);
    std::vector<RawSample> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) {
      const TrueResponse truth =
          gen_response(z.row(i).transpose(), base, params, rng);
      samples.push_back(truth.sample(5000, rng));
    }
    const NptFit fitted =
        fit(make_dataset(PredictorTable(z), samples, grid));
    double total = 0.0;
    const int n_eval = 25;
    for (int t = 0; t < n_eval; ++t) {
      Eigen::VectorXd at(2);
      at << -0.9 + 1.8 * t / (n_eval - 1), 0.0;
      const Nonparanormal pred = predict(fitted, at);
      const double b =
          bw_distance(pred.latent().spd(),
                      CorrelationMatrix::bivariate(0.3 * at(0)).spd());
      total += b * b;
    }
    return total / n_eval;
  };

  double mean50 = 0.0;
  double mean200 = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    mean50 += mean_corr_error(50, seed) / seeds;
    mean200 += mean_corr_error(200, seed) / seeds;
  }
  const double ratio = mean50 / mean200;
  // n^{-1} squared-error scaling predicts a ratio of 4; require at least a
  // halving and stay within a factor 3 of the prediction.
  c.require(ratio >= 2.0, "error at n=200 is not half of n=50 (ratio " +
                              std::to_string(ratio) + ")");
  c.require(ratio <= 12.0,
            "decay implausibly fast (ratio " + std::to_string(ratio) + ")");
  return c;
}

// 9. Qualitative method orderings of the comparison experiment.
Check criterion_method_orderings() {
  Check c;
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const auto collect = [&](const ExperimentResult& result, Method m,
                           bool corr) {
    std::vector<double> v;
    for (const auto& row : result.rows) {
      if (row.method == m) v.push_back(corr ? row.mspe_corr : row.mspe_marg);
    }
    return v;
  };

  Scenario tanh_sc = scenario_from_name("d2-tanh");
  tanh_sc.n = 200;
  tanh_sc.big_n = 1000;
  tanh_sc.reps = 20;
  tanh_sc.n_te = 500;
  tanh_sc.seed = 909;
  const ExperimentResult tanh_result = run_experiment(tanh_sc, g_hardware_threads);
  c.require(tanh_result.failed_replicates == 0, "tanh replicates failed");
  c.require(median(collect(tanh_result, Method::marginal, true)) >
                median(collect(tanh_result, Method::npt, true)),
            "marginal method does not lose on tanh correlation error");

  Scenario lin_sc = scenario_from_name("d2-linear");
  lin_sc.n = 200;
  lin_sc.big_n = 1000;
  lin_sc.reps = 20;
  lin_sc.n_te = 500;
  lin_sc.seed = 910;
  const ExperimentResult lin_result = run_experiment(lin_sc, g_hardware_threads);
  c.require(lin_result.failed_replicates == 0, "linear replicates failed");
  c.require(median(collect(lin_result, Method::gaussian, false)) >
                median(collect(lin_result, Method::npt, false)),
            "gaussian method does not lose on marginal error");

  for (const ExperimentResult* result : {&tanh_result, &lin_result}) {
    const auto npt_marg = collect(*result, Method::npt, false);
    const auto marginal_marg = collect(*result, Method::marginal, false);
    c.require(npt_marg.size() == marginal_marg.size(), "row count mismatch");
    for (std::size_t i = 0; i < npt_marg.size(); ++i) {
      c.require(npt_marg[i] == marginal_marg[i],
                "marginal errors are not identical between npt and marginal");
    }
  }

  // Mean correlation error shrinks with the training size.
  Scenario small_sc = lin_sc;
  small_sc.n = 50;
  const ExperimentResult small_result = run_experiment(small_sc, g_hardware_threads);
  const auto mean_of = [](const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
  };
  c.require(mean_of(collect(lin_result, Method::npt, true)) <
                mean_of(collect(small_result, Method::npt, true)),
            "correlation error does not decrease from n=50 to n=200");
  return c;
}

// 10. Family-wise error control of the adjusted permutation p-values.
Check criterion_inference_calibration() {
  Check c;
  const QuantileGrid grid{200};
  const Scenario base = scenario_from_name("d2-linear");
  Rng param_rng(2);
  const ExperimentParams params = ExperimentParams::draw(base, param_rng);
  const Eigen::VectorXd z_null = Eigen::VectorXd::Zero(2);
  const int n = 60;
  const int b = 199;

  int rejections = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng = Rng::substream(1010, seed);
    Eigen::MatrixXd z = gen_predictors(n, rng);
    std::vector<Nonparanormal> responses;
    responses.reserve(n);
    for (int i = 0; i < n; ++i) {
      // Responses drawn independently of the predictors.
      const TrueResponse truth = gen_response(z_null, base, params, rng);
      std::vector<QuantileFunction> marginals{truth.grid_quantile(0, grid),
                                              truth.grid_quantile(1, grid)};
      responses.emplace_back(std::move(marginals), truth.latent);
    }
    const DistributionalDataset ds{PredictorTable(std::move(z)),
                                   std::move(responses),
                                   {},
                                   {}};
    const R2Report report = permutation_test(ds, b, 5000 + seed, GdConfig{},
                                             Method::npt, g_hardware_threads);
    for (int k = 0; k < report.raw_p.size(); ++k) {
      c.require(report.raw_p(k) >= 1.0 / (b + 1) && report.raw_p(k) <= 1.0,
                "raw p-value out of range");
      c.require(report.adjusted_p(k) >= report.raw_p(k) - 1e-15,
                "adjusted p smaller than raw p");
      c.require(report.adjusted_p(k) <= 1.0, "adjusted p above 1");
    }
    if (report.adjusted_p.minCoeff() <= 0.05) ++rejections;
  }
  c.require(rejections <= 5, "null FWER " + std::to_string(rejections) +
                                 "/50 exceeds 0.10");
  return c;
}

// 11. PAVA equals the exhaustive monotone QP and is a contraction.
Check criterion_isotonic() {
  Check c;
  const auto exhaustive = [](const std::vector<double>& ys) {
    const int m = static_cast<int>(ys.size());
    std::vector<double> best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << (m - 1)); ++mask) {
      std::vector<double> candidate(m);
      int start = 0;
      bool feasible = true;
      double prev = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        if (k != m - 1 && !((mask >> k) & 1)) continue;
        double mean = 0.0;
        for (int i = start; i <= k; ++i) mean += ys[i];
        mean /= (k - start + 1);
        if (mean < prev) {
          feasible = false;
          break;
        }
        for (int i = start; i <= k; ++i) candidate[i] = mean;
        prev = mean;
        start = k + 1;
      }
      if (!feasible) continue;
      double sse = 0.0;
      for (int i = 0; i < m; ++i) sse += (ys[i] - candidate[i]) * (ys[i] - candidate[i]);
      if (sse < best_sse) {
        best_sse = sse;
        best = candidate;
      }
    }
    return best;
  };

  for (int m = 1; m <= 6; ++m) {
    for (int pattern = 0; pattern < (1 << m); ++pattern) {
      std::vector<double> ys(m);
      for (int k = 0; k < m; ++k) ys[k] = ((pattern >> k) & 1) ? 1.0 : -1.0;
      std::vector<double> pava = ys;
      pava_inplace(pava);
      const auto oracle = exhaustive(ys);
      for (int k = 0; k < m; ++k) {
        c.require(std::abs(pava[k] - oracle[k]) <= 1e-12,
                  "PAVA differs from the exhaustive solve");
      }
    }
  }

  Rng rng(1111);
  const QuantileGrid grid{40};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y1(40), y2(40);
    for (int k = 0; k < 40; ++k) {
      y1[k] = rng.uniform(-3.0, 3.0);
      y2[k] = rng.uniform(-3.0, 3.0);
    }
    const auto p1 = isotonic_project(grid, y1);
    const auto p2 = isotonic_project(grid, y2);
    const std::vector<double> p1v(p1.values().data(), p1.values().data() + 40);
    c.require((isotonic_project(grid, p1v).values() - p1.values()).norm() <= 1e-13,
              "projection is not idempotent");
    double input_sq = 0.0;
    for (int k = 0; k < 40; ++k) input_sq += (y1[k] - y2[k]) * (y1[k] - y2[k]);
    c.require((p1.values() - p2.values()).squaredNorm() <= input_sq + 1e-12,
              "projection is not a contraction");
  }
  return c;
}

// 12. CLI determinism across reruns and thread counts.
Check criterion_cli_determinism() {
  Check c;
  const std::string cli = NPT_CLI_PATH;
  const fs::path dir =
      fs::temp_directory_path() / ("npt_acceptance_" + std::to_string(std::rand()));
  fs::create_directories(dir);
  const auto file = [&](const std::string& name) { return (dir / name).string(); };
  const auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  Rng rng(1212);
  std::string pred = "id,z1,z2\n";
  std::string samp = "id,y1,y2\n";
  for (int i = 0; i < 8; ++i) {
    const double z1 = rng.uniform(-1.0, 1.0);
    const double z2 = rng.uniform(-1.0, 1.0);
    pred += "p" + std::to_string(i) + "," + format_double(z1) + "," +
            format_double(z2) + "\n";
    for (int k = 0; k < 40; ++k) {
      const double u = rng.normal();
      samp += "p" + std::to_string(i) + "," + format_double(z1 + u) + "," +
              format_double(0.6 * u + rng.normal()) + "\n";
    }
  }
  std::ofstream(file("pred.csv")) << pred;
  std::ofstream(file("samp.csv")) << samp;
  std::ofstream(file("at.csv")) << "z1,z2\n0,0\n0.4,-0.2\n";

  const std::string fit_args = "fit --predictors " + file("pred.csv") +
                               " --samples " + file("samp.csv") + " --grid 64 --out ";
  c.require(run(fit_args + file("m1.json")) == 0, "fit failed");
  c.require(run(fit_args + file("m2.json")) == 0, "refit failed");
  c.require(read_text(file("m1.json")) == read_text(file("m2.json")),
            "model files differ between identical fits");

  const std::string predict_args = "predict --model " + file("m1.json") +
                                   " --at " + file("at.csv") + " --out ";
  c.require(run(predict_args + file("p1.json")) == 0, "predict failed");
  c.require(run(predict_args + file("p2.json")) == 0, "re-predict failed");
  c.require(read_text(file("p1.json")) == read_text(file("p2.json")),
            "prediction files differ between identical runs");

  const std::string sim_args = "simulate --scenario d2-tanh --n 25 --N 100 "
                               "--reps 2 --n-te 20 --seed 3 --out ";
  c.require(run(sim_args + file("s1.csv")) == 0, "simulate failed");
  c.require(run(sim_args + file("s2.csv")) == 0, "re-simulate failed");
  c.require(run("--threads 8 " + sim_args + file("s3.csv")) == 0,
            "threaded simulate failed");
  c.require(read_text(file("s1.csv")) == read_text(file("s2.csv")),
            "simulation output differs between identical runs");
  c.require(read_text(file("s1.csv")) == read_text(file("s3.csv")),
            "simulation output depends on the thread count");

  fs::remove_all(dir);
  return c;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Check()> fn;
};

}  // namespace

int main() {
  g_hardware_threads =
      std::max(1, static_cast<int>(std::thread::hardware_concurrency()));

  const std::vector<Criterion> criteria = {
      {1, "bivariate-bw-closed-form", 1.0, criterion_bivariate_bw},
      {2, "correlation-projection-optimality", 10.0, criterion_projection_optimality},
      {3, "one-step-bivariate-solve", 60.0, criterion_one_step_bivariate},
      {4, "gaussian-subfamily-bounds", 10.0, criterion_gaussian_subfamily},
      {5, "ot-oracle-consistency", 60.0, criterion_ot_oracle},
      {6, "kendall-concentration", 30.0, criterion_kendall_concentration},
      {7, "noiseless-recovery", 60.0, criterion_noiseless_recovery},
      {8, "latent-error-rate-decay", 300.0, criterion_rate_decay},
      {9, "method-orderings", 600.0, criterion_method_orderings},
      {10, "inference-calibration", 600.0, criterion_inference_calibration},
      {11, "isotonic-projection", 60.0, criterion_isotonic},
      {12, "cli-determinism", 120.0, criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check check;
    try {
      check = criterion.fn();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed >= criterion.time_limit_s) {
      check.ok = false;
      check.detail = "runtime " + std::to_string(elapsed) + "s exceeds limit";
    }
    std::printf("%s  %2d  %-36s (%.2f s)%s%s\n", check.ok ? "PASS" : "FAIL",
                criterion.id, criterion.name, elapsed,
                check.ok ? "" : "  -- ", check.ok ? "" : check.detail.c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu acceptance criteria failed\n", failures,
                criteria.size());
    return 1;
  }
  std::printf("all %zu acceptance criteria passed\n", criteria.size());
  return 0;
}
