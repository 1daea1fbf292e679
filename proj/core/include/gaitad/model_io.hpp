#pragma once

// ModelBundle: one self-describing JSON document holding the configuration
// echo, normalization statistics and every trained parameter array.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

#include "gaitad/cnn.hpp"
#include "gaitad/config.hpp"
#include "gaitad/cycles.hpp"
#include "gaitad/seq2seq.hpp"
#include "gaitad/svm.hpp"

namespace gaitad {

inline constexpr int kBundleFormatVersion = 1;

struct ModelBundle {
  PipelineConfig config;
  std::optional<NormStats> norm;
  std::optional<Seq2SeqParams> autoencoder;
  std::optional<CnnParams> cnn;
  std::optional<SvmModel> svm;
};

nlohmann::json bundle_to_json(const ModelBundle& bundle);
/// Throws FormatError on a version mismatch or missing / misshapen arrays.
ModelBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace gaitad
