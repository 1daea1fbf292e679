#include "gaitad/model_io.hpp"

#include "gaitad/error.hpp"
#include "gaitad/io.hpp"

namespace gaitad {

using nlohmann::json;

namespace {

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json tensors_json(std::vector<ParamRef> tensors) {
  json out = json::object();
  for (const auto& t : tensors) out[t.name] = vector_json(t.values);
  return out;
}

void tensors_from_json(const json& j, std::vector<ParamRef> tensors, const std::string& section) {
  for (auto& t : tensors) {
    const auto it = j.find(t.name);
    if (it == j.end()) fail(ErrorCode::kFormatError, section + ": missing array " + t.name);
    const auto values = it->get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != t.values.size()) {
      fail(ErrorCode::kFormatError, section + ": array " + t.name + " has " + std::to_string(values.size()) +
                                        " values, expected " + std::to_string(t.values.size()));
    }
    t.values = Eigen::Map<const Eigen::VectorXd>(values.data(), t.values.size());
  }
}

}  // namespace

json bundle_to_json(const ModelBundle& bundle) {
  json j;
  j["format"] = "gaitad-model-bundle";
  j["format_version"] = kBundleFormatVersion;
  j["config"] = config_to_json(bundle.config);
  if (bundle.norm) j["norm_stats"] = norm_stats_to_json(*bundle.norm);
  if (bundle.autoencoder) {
    Seq2SeqParams p = *bundle.autoencoder;
    j["autoencoder"] = {{"layers", p.config.layers},
                        {"hidden_size", p.config.hidden_size},
                        {"bidirectional", p.config.bidirectional},
                        {"input_size", p.config.input_size},
                        {"parameters", tensors_json(p.tensors())}};
  }
  if (bundle.cnn) {
    CnnParams p = *bundle.cnn;
    const auto& c = p.config;
    j["cnn"] = {{"dims", {c.width, c.height, c.depth}},
                {"kernel", {c.kernel_h, c.kernel_w, c.depth, c.out_channels}},
                {"conv_stride", c.conv_stride},
                {"pool_size", c.pool_size},
                {"pool_stride", c.pool_stride},
                {"parameters", tensors_json(p.tensors())}};
  }
  if (bundle.svm) {
    const SvmModel& m = *bundle.svm;
    json sv = json::array();
    for (Eigen::Index r = 0; r < m.support_vectors.rows(); ++r) {
      sv.push_back(vector_json(m.support_vectors.row(r).transpose()));
    }
    j["svm"] = {{"gamma", m.gamma},
                {"c", m.c},
                {"bias", m.bias},
                {"dual_coefficients", vector_json(m.coefficients)},
                {"support_vectors", sv}};
  }
  return j;
}

ModelBundle bundle_from_json(const json& j) {
  try {
    if (j.value("format_version", -1) != kBundleFormatVersion) {
      fail(ErrorCode::kFormatError, "unsupported model bundle version");
    }
    ModelBundle b;
    b.config = config_from_json(j.at("config"));
    if (j.contains("norm_stats")) b.norm = norm_stats_from_json(j.at("norm_stats"));
    if (j.contains("autoencoder")) {
      const auto& s = j.at("autoencoder");
      EncoderConfig cfg = b.config.encoder;
      cfg.layers = s.at("layers").get<int>();
      cfg.hidden_size = s.at("hidden_size").get<int>();
      cfg.bidirectional = s.at("bidirectional").get<bool>();
      cfg.input_size = s.at("input_size").get<int>();
      Seq2SeqParams p = Seq2SeqParams::zeros(cfg);
      tensors_from_json(s.at("parameters"), p.tensors(), "autoencoder");
      b.autoencoder = std::move(p);
    }
    if (j.contains("cnn")) {
      const auto& s = j.at("cnn");
      CnnConfig cfg = b.config.cnn;
      const auto dims = s.at("dims").get<std::vector<Eigen::Index>>();
      const auto kernel = s.at("kernel").get<std::vector<Eigen::Index>>();
      if (dims.size() != 3 || kernel.size() != 4) fail(ErrorCode::kFormatError, "cnn: bad dims");
      cfg.width = dims[0];
      cfg.height = dims[1];
      cfg.depth = dims[2];
      cfg.kernel_h = kernel[0];
      cfg.kernel_w = kernel[1];
      cfg.out_channels = kernel[3];
      cfg.conv_stride = s.at("conv_stride").get<Eigen::Index>();
      cfg.pool_size = s.at("pool_size").get<Eigen::Index>();
      cfg.pool_stride = s.at("pool_stride").get<Eigen::Index>();
      CnnParams p = CnnParams::zeros(cfg);
      tensors_from_json(s.at("parameters"), p.tensors(), "cnn");
      b.cnn = std::move(p);
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      SvmModel m;
      m.gamma = s.at("gamma").get<double>();
      m.c = s.at("c").get<double>();
      m.bias = s.at("bias").get<double>();
      const auto coef = s.at("dual_coefficients").get<std::vector<double>>();
      m.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
      const auto& sv = s.at("support_vectors");
      if (sv.size() != coef.size()) fail(ErrorCode::kFormatError, "svm: coefficient count mismatch");
      const auto d = sv.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(sv[0].size());
      m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), d);
      for (std::size_t r = 0; r < sv.size(); ++r) {
        const auto row = sv[r].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != d) fail(ErrorCode::kFormatError, "svm: ragged support vectors");
        m.support_vectors.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(row.data(), d);
      }
      b.svm = std::move(m);
    }
    return b;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError, std::string("model bundle: ") + e.what());
  }
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_text(path, bundle_to_json(bundle).dump() + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& path) { return bundle_from_json(read_json(path)); }

}  // namespace gaitad
