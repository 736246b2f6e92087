// Command-line surface for nonparanormal Frechet regression: fit, predict,
// permutation inference, the simulation harness, and distance computation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "npt/csv.hpp"
#include "npt/model_io.hpp"
#include "npt/nonparanormal.hpp"
#include "npt/ot_oracle.hpp"
#include "npt/regression.hpp"
#include "npt/simulation.hpp"

namespace {

using nlohmann::json;

std::vector<std::string> indexed_header(const std::string& prefix, int count,
                                        bool with_id) {
  std::vector<std::string> h;
  if (with_id) h.push_back("id");
  for (int i = 1; i <= count; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

// Validates a header of the form [id,]prefix1..prefixK and returns K.
int parse_indexed_header(const npt::CsvTable& table, const std::string& path,
                         const std::string& prefix, bool with_id) {
  const std::size_t fixed = with_id ? 1 : 0;
  if (table.header.size() <= fixed ||
      (with_id && table.header[0] != "id")) {
    throw npt::ValidationError(path + ": malformed header; expected " +
                               (with_id ? "id," : "") + prefix + "1,...");
  }
  const int count = static_cast<int>(table.header.size() - fixed);
  const auto expected = indexed_header(prefix, count, with_id);
  if (table.header != expected) {
    throw npt::ValidationError(path + ": malformed header; expected " +
                               (with_id ? "id," : "") + prefix + "1..." +
                               prefix + std::to_string(count));
  }
  return count;
}

struct FitInputs {
  npt::DistributionalDataset dataset;
  std::vector<std::string> ids;
};

FitInputs load_fit_inputs(const std::string& predictors_path,
                          const std::string& samples_path, int grid_m,
                          double ridge,
                          const std::vector<std::string>& support_flags) {
  const npt::CsvTable pred = npt::read_csv(predictors_path);
  const int p = parse_indexed_header(pred, predictors_path, "z", true);
  std::vector<std::string> ids;
  Eigen::MatrixXd z(pred.rows.size(), p);
  std::map<std::string, int> id_index;
  for (std::size_t r = 0; r < pred.rows.size(); ++r) {
    const std::string& id = pred.rows[r][0];
    if (!id_index.emplace(id, static_cast<int>(r)).second) {
      throw npt::ValidationError(predictors_path + ": duplicate id '" + id + "'");
    }
    ids.push_back(id);
    for (int c = 0; c < p; ++c) {
      z(static_cast<Eigen::Index>(r), c) = npt::parse_double(
          pred.rows[r][c + 1], predictors_path + " id " + id);
    }
  }

  const npt::CsvTable samp = npt::read_csv(samples_path);
  const int d = parse_indexed_header(samp, samples_path, "y", true);
  std::vector<std::vector<Eigen::VectorXd>> grouped(ids.size());
  for (std::size_t r = 0; r < samp.rows.size(); ++r) {
    const std::string& id = samp.rows[r][0];
    const auto it = id_index.find(id);
    if (it == id_index.end()) {
      throw npt::ValidationError(samples_path + ": id '" + id +
                                 "' has no predictor row");
    }
    Eigen::VectorXd row(d);
    for (int c = 0; c < d; ++c) {
      row(c) =
          npt::parse_double(samp.rows[r][c + 1], samples_path + " id " + id);
    }
    grouped[it->second].push_back(std::move(row));
  }

  std::vector<npt::RawSample> samples;
  samples.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (grouped[i].size() < 2) {
      throw npt::ValidationError("id '" + ids[i] + "' has fewer than 2 sample rows");
    }
    Eigen::MatrixXd rows(grouped[i].size(), d);
    for (std::size_t k = 0; k < grouped[i].size(); ++k) {
      rows.row(static_cast<Eigen::Index>(k)) = grouped[i][k];
    }
    samples.emplace_back(std::move(rows));
  }

  std::vector<std::optional<npt::Support>> supports;
  if (!support_flags.empty()) {
    if (support_flags.size() != 1 &&
        support_flags.size() != static_cast<std::size_t>(d)) {
      throw npt::ValidationError(
          "--support must be given once (applied to all marginals) or once "
          "per marginal");
    }
    supports.resize(d);
    for (int j = 0; j < d; ++j) {
      const std::string& flag =
          support_flags[support_flags.size() == 1 ? 0 : j];
      const auto comma = flag.find(',');
      if (comma == std::string::npos) {
        throw npt::ValidationError("--support expects 'lo,hi', got '" + flag + "'");
      }
      supports[j] = npt::Support{
          npt::parse_double(flag.substr(0, comma), "--support"),
          npt::parse_double(flag.substr(comma + 1), "--support")};
    }
  }

  return FitInputs{npt::make_dataset(npt::PredictorTable(std::move(z), ridge),
                                     samples, npt::QuantileGrid{grid_m},
                                     supports),
                   std::move(ids)};
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

int cmd_fit(const std::string& predictors, const std::string& samples,
            int grid_m, const std::string& method, double ridge,
            const std::vector<std::string>& supports, const std::string& out) {
  FitInputs inputs = load_fit_inputs(predictors, samples, grid_m, ridge, supports);
  const npt::Method m = npt::method_from_name(method);
  npt::ModelFile model{m, npt::GdConfig{}, std::move(inputs.ids),
                       std::move(inputs.dataset)};
  model.to_fit();  // reject unfittable input before persisting anything
  npt::save_model(model, out);
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& at_path,
                const std::string& out) {
  const npt::ModelFile model = npt::load_model(model_path);
  const npt::NptFit fitted = model.to_fit();
  const Eigen::MatrixXd zs = npt::read_numeric_csv(
      at_path, indexed_header("z", fitted.data().predictors.p(), false));

  json predictions = json::array();
  for (Eigen::Index r = 0; r < zs.rows(); ++r) {
    const npt::Prediction pred = npt::predict_detailed(
        fitted, zs.row(r).transpose(), npt::PredictOptions{true});
    json block;
    block["z"] = vector_json(zs.row(r).transpose());
    json marginals = json::array();
    for (int j = 0; j < pred.value.d(); ++j) {
      marginals.push_back(vector_json(pred.value.marginal(j).values()));
    }
    block["marginals"] = std::move(marginals);
    block["latent"] = matrix_json(pred.value.latent().mat());
    block["latent_solve"] = {{"converged", pred.latent.converged},
                             {"iterations", pred.latent.iterations},
                             {"grad_norm", pred.latent.grad_norm},
                             {"boundary_clamped", pred.latent.boundary_clamped}};
    block["warnings"] = pred.warnings;
    predictions.push_back(std::move(block));
  }
  json doc;
  doc["method"] = npt::method_name(fitted.method());
  doc["grid_m"] = fitted.grid().m;
  doc["d"] = fitted.d();
  doc["predictions"] = std::move(predictions);
  npt::write_text_atomic(out, doc.dump(1) + "\n");
  return 0;
}

int cmd_permtest(const std::string& predictors, const std::string& samples,
                 int grid_m, const std::string& method, double ridge,
                 const std::vector<std::string>& supports, int b,
                 std::uint64_t seed, int threads, const std::string& out) {
  FitInputs inputs = load_fit_inputs(predictors, samples, grid_m, ridge, supports);
  const npt::R2Report report =
      npt::permutation_test(inputs.dataset, b, seed, npt::GdConfig{},
                            npt::method_from_name(method), threads);
  const int d = static_cast<int>(report.marginal_r2.size());
  json components = json::array();
  for (int j = 0; j <= d; ++j) {
    json c;
    c["name"] = (j < d) ? "marginal_" + std::to_string(j + 1)
                        : std::string("latent");
    c["r2"] = (j < d) ? report.marginal_r2(j) : report.latent_r2;
    c["raw_p"] = report.raw_p(j);
    c["adjusted_p"] = report.adjusted_p(j);
    components.push_back(std::move(c));
  }
  json doc;
  doc["method"] = method;
  doc["B"] = b;
  doc["seed"] = seed;
  doc["global_r2"] = report.global_r2;
  doc["components"] = std::move(components);
  doc["replicates_used"] = report.replicates_used;
  doc["replicates_failed"] = report.replicates_failed;
  npt::write_text_atomic(out, doc.dump(1) + "\n");
  return 0;
}

int cmd_simulate(const std::string& scenario_name, int n, int big_n, int reps,
                 int n_te, std::uint64_t seed, int threads,
                 const std::string& out) {
  npt::Scenario sc = npt::scenario_from_name(scenario_name);
  sc.n = n;
  sc.big_n = big_n;
  sc.reps = reps;
  sc.n_te = n_te;
  sc.seed = seed;
  sc.validate();
  const npt::ExperimentResult result = npt::run_experiment(sc, threads);

  std::string csv = "rep,method,mspe_marg,mspe_corr\n";
  for (const auto& row : result.rows) {
    csv += std::to_string(row.rep) + "," + npt::method_name(row.method) + "," +
           npt::format_double(row.mspe_marg) + "," +
           npt::format_double(row.mspe_corr) + "\n";
  }
  npt::write_text_atomic(out, csv);

  json meta;
  meta["scenario"] = {{"name", scenario_name},
                      {"d", sc.d},
                      {"correlation_model", correlation_model_name(sc.model)},
                      {"n", sc.n},
                      {"N", sc.big_n},
                      {"reps", sc.reps},
                      {"n_te", sc.n_te},
                      {"seed", sc.seed},
                      {"grid_m", sc.grid_m}};
  meta["failed_replicates"] = result.failed_replicates;
  meta["rows"] = result.rows.size();
  npt::write_text_atomic(out + ".meta.json", meta.dump(1) + "\n");
  return 0;
}

int cmd_distance(const std::string& metric, const std::string& a_path,
                 const std::string& b_path, int grid_m) {
  double value = 0.0;
  if (metric == "npt") {
    const auto load = [&](const std::string& path) {
      const npt::CsvTable t = npt::read_csv(path);
      const int d = parse_indexed_header(t, path, "y", false);
      Eigen::MatrixXd rows(t.rows.size(), d);
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (int c = 0; c < d; ++c) {
          rows(static_cast<Eigen::Index>(r), c) =
              npt::parse_double(t.rows[r][c], path);
        }
      }
      return npt::estimate(npt::RawSample(std::move(rows)),
                           npt::QuantileGrid{grid_m});
    };
    value = npt::npt_distance(load(a_path), load(b_path));
  } else if (metric == "bw") {
    const auto load = [&](const std::string& path) {
      const npt::CsvTable t = npt::read_csv(path);
      const int d = parse_indexed_header(t, path, "c", false);
      if (static_cast<int>(t.rows.size()) != d) {
        throw npt::ValidationError(path + ": matrix must be square");
      }
      Eigen::MatrixXd m(d, d);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          m(r, c) = npt::parse_double(t.rows[r][c], path);
        }
      }
      return npt::SpdMatrix(std::move(m));
    };
    value = npt::bw_distance(load(a_path), load(b_path));
  } else if (metric == "w2") {
    const auto load = [&](const std::string& path) {
      const npt::CsvTable t = npt::read_csv(path);
      const int d = parse_indexed_header(t, path, "y", false);
      Eigen::MatrixXd pts(t.rows.size(), d);
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (int c = 0; c < d; ++c) {
          pts(static_cast<Eigen::Index>(r), c) =
              npt::parse_double(t.rows[r][c], path);
        }
      }
      return npt::PointCloud(std::move(pts));
    };
    value = npt::assignment_w2(load(a_path), load(b_path));
  } else {
    throw npt::ValidationError("unknown metric '" + metric +
                               "' (expected npt, bw, or w2)");
  }
  std::printf("%.12g\n", value);
  return 0;
}

std::uint64_t initial_seed() {
  if (const char* env = std::getenv("NPT_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparanormal Frechet regression for multivariate "
               "distributional responses"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for replicated work")
      ->check(CLI::PositiveNumber);

  std::string predictors, samples, model_path, at_path, out_path;
  std::string method = "npt";
  std::string scenario, metric, a_path, b_path;
  std::vector<std::string> supports;
  int grid_m = 200;
  double ridge = 0.0;
  int b = 2000;
  int n = 50, big_n = 100, reps = 100, n_te = 500;
  std::uint64_t seed = initial_seed();

  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate responses and fit the regression");
  fit_cmd->add_option("--predictors", predictors, "CSV with header id,z1..zp")->required();
  fit_cmd->add_option("--samples", samples, "Long-format CSV with header id,y1..yd")->required();
  fit_cmd->add_option("--grid", grid_m, "Quantile grid size M");
  fit_cmd->add_option("--method", method, "npt | marginal | gaussian");
  fit_cmd->add_option("--ridge", ridge, "Ridge added to the predictor covariance");
  fit_cmd->add_option("--support", supports, "Marginal support bounds lo,hi");
  fit_cmd->add_option("--out", out_path, "Output model JSON")->required();

  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict at new points");
  predict_cmd->add_option("--model", model_path, "Model JSON from fit")->required();
  predict_cmd->add_option("--at", at_path, "CSV with header z1..zp")->required();
  predict_cmd->add_option("--out", out_path, "Output prediction JSON")->required();

  CLI::App* permtest_cmd = app.add_subcommand(
      "permtest", "Permutation test of no predictor effect per component");
  permtest_cmd->add_option("--predictors", predictors)->required();
  permtest_cmd->add_option("--samples", samples)->required();
  permtest_cmd->add_option("--grid", grid_m);
  permtest_cmd->add_option("--method", method);
  permtest_cmd->add_option("--ridge", ridge);
  permtest_cmd->add_option("--support", supports);
  permtest_cmd->add_option("--B", b, "Permutation replicates");
  permtest_cmd->add_option("--seed", seed, "Master seed");
  permtest_cmd->add_option("--out", out_path, "Output report JSON")->required();

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo comparison harness");
  simulate_cmd->add_option("--scenario", scenario, "d2-linear | d2-tanh | d10")->required();
  simulate_cmd->add_option("--n", n, "Training pairs per replicate");
  simulate_cmd->add_option("--N", big_n, "Observations per response");
  simulate_cmd->add_option("--reps", reps, "Monte-Carlo replicates");
  simulate_cmd->add_option("--n-te", n_te, "Test points per replicate");
  simulate_cmd->add_option("--seed", seed, "Master seed");
  simulate_cmd->add_option("--out", out_path, "Output results CSV")->required();

  CLI::App* distance_cmd = app.add_subcommand("distance", "Distance between two files");
  distance_cmd->add_option("--metric", metric, "npt | bw | w2")->required();
  distance_cmd->add_option("--a", a_path, "First input file")->required();
  distance_cmd->add_option("--b", b_path, "Second input file")->required();
  distance_cmd->add_option("--grid", grid_m, "Grid size for the npt metric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (fit_cmd->parsed()) {
      return cmd_fit(predictors, samples, grid_m, method, ridge, supports, out_path);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(model_path, at_path, out_path);
    }
    if (permtest_cmd->parsed()) {
      return cmd_permtest(predictors, samples, grid_m, method, ridge, supports,
                          b, seed, threads, out_path);
    }
    if (simulate_cmd->parsed()) {
      return cmd_simulate(scenario, n, big_n, reps, n_te, seed, threads, out_path);
    }
    if (distance_cmd->parsed()) {
      return cmd_distance(metric, a_path, b_path, grid_m);
    }
  } catch (const npt::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const npt::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
