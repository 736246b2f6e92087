#include "npt/model_io.hpp"

#include <json.hpp>

#include "npt/csv.hpp"

namespace npt {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows > 0 ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) {
      throw ValidationError("model file: ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

std::string serialize_model(const ModelFile& model) {
  const auto& ds = model.dataset;
  json j;
  j["format_version"] = ModelFile::kFormatVersion;
  j["method"] = method_name(model.method);
  j["grid_m"] = ds.responses.empty() ? 0 : ds.responses[0].grid().m;
  j["gd_config"] = {{"step", model.cfg.step},
                    {"max_iter", model.cfg.max_iter},
                    {"tol", model.cfg.tol},
                    {"eigen_floor", model.cfg.eigen_floor}};
  j["predictors"] = {{"z", matrix_to_json(ds.predictors.z())},
                     {"zbar", vector_to_json(ds.predictors.zbar())},
                     {"cov_inv", matrix_to_json(ds.predictors.cov_inv())},
                     {"ridge", ds.predictors.ridge()}};
  json subjects = json::array();
  for (std::size_t i = 0; i < ds.responses.size(); ++i) {
    const auto& r = ds.responses[i];
    json subj;
    subj["id"] = model.subject_ids.at(i);
    json quantiles = json::array();
    json supports = json::array();
    for (int d = 0; d < r.d(); ++d) {
      quantiles.push_back(vector_to_json(r.marginal(d).values()));
      if (r.marginal(d).support()) {
        supports.push_back(
            {r.marginal(d).support()->lo, r.marginal(d).support()->hi});
      } else {
        supports.push_back(nullptr);
      }
    }
    subj["quantiles"] = std::move(quantiles);
    subj["supports"] = std::move(supports);
    subj["latent"] = matrix_to_json(r.latent().mat());
    if (ds.has_moments()) {
      subj["mean"] = vector_to_json(ds.sample_means[i]);
      subj["cov"] = matrix_to_json(ds.sample_covs[i]);
    }
    subjects.push_back(std::move(subj));
  }
  j["subjects"] = std::move(subjects);
  return j.dump(1);
}

ModelFile deserialize_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != ModelFile::kFormatVersion) {
      throw ValidationError("model file: unsupported format version");
    }
    const QuantileGrid grid{j.at("grid_m").get<int>()};
    GdConfig cfg;
    cfg.step = j.at("gd_config").at("step").get<double>();
    cfg.max_iter = j.at("gd_config").at("max_iter").get<int>();
    cfg.tol = j.at("gd_config").at("tol").get<double>();
    cfg.eigen_floor = j.at("gd_config").at("eigen_floor").get<double>();

    const json& pred = j.at("predictors");
    PredictorTable table = PredictorTable::from_parts(
        matrix_from_json(pred.at("z")), vector_from_json(pred.at("zbar")),
        matrix_from_json(pred.at("cov_inv")), pred.at("ridge").get<double>());

    DistributionalDataset ds{std::move(table), {}, {}, {}};
    std::vector<std::string> ids;
    for (const json& subj : j.at("subjects")) {
      ids.push_back(subj.at("id").get<std::string>());
      std::vector<QuantileFunction> marginals;
      const json& quantiles = subj.at("quantiles");
      const json& supports = subj.at("supports");
      for (std::size_t d = 0; d < quantiles.size(); ++d) {
        std::optional<Support> support;
        if (!supports[d].is_null()) {
          support = Support{supports[d][0].get<double>(),
                            supports[d][1].get<double>()};
        }
        marginals.emplace_back(grid, vector_from_json(quantiles[d]), support);
      }
      ds.responses.emplace_back(
          std::move(marginals),
          CorrelationMatrix(matrix_from_json(subj.at("latent"))));
      if (subj.contains("mean")) {
        ds.sample_means.push_back(vector_from_json(subj.at("mean")));
        ds.sample_covs.push_back(matrix_from_json(subj.at("cov")));
      }
    }
    ds.validate();
    return ModelFile{method_from_name(j.at("method").get<std::string>()), cfg,
                     std::move(ids), std::move(ds)};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: missing or malformed field: ") +
                          e.what());
  }
}

void save_model(const ModelFile& model, const std::string& path) {
  write_text_atomic(path, serialize_model(model) + "\n");
}

ModelFile load_model(const std::string& path) {
  return deserialize_model(read_text(path));
}

}  // namespace npt
