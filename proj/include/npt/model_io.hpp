#pragma once

#include <string>
#include <vector>

#include "npt/regression.hpp"

namespace npt {

// A fitted model plus the subject ids it was built from, as persisted to the
// JSON model file. Save -> load -> predict is bit-identical to in-memory
// prediction because every float survives the round trip exactly.
struct ModelFile {
  static constexpr int kFormatVersion = 1;

  Method method = Method::npt;
  GdConfig cfg;
  std::vector<std::string> subject_ids;
  DistributionalDataset dataset;

  NptFit to_fit() const { return fit(dataset, cfg, method); }
};

std::string serialize_model(const ModelFile& model);
ModelFile deserialize_model(const std::string& json_text);

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace npt
