// gaitad: command line front end for the gait anomaly detection pipeline.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gaitad/config.hpp"
#include "gaitad/dataset.hpp"
#include "gaitad/error.hpp"
#include "gaitad/io.hpp"
#include "gaitad/model_io.hpp"
#include "gaitad/protocol.hpp"
#include "gaitad/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gaitad;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  fs::path out_dir = "out";
  bool quiet = false;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c;
  if (!g.config_path.empty()) c = config_from_json(read_json(g.config_path));
  if (g.seed) c.set_seed(*g.seed);
  return c;
}

std::ostream* log_stream(const Globals& g) { return g.quiet ? nullptr : &std::cerr; }

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

json split_json(const SplitIndices& s) {
  return {{"encoder_train", s.encoder_train.size()},
          {"encoder_test", s.encoder_test.size()},
          {"classifier_train", s.classifier_train.size()},
          {"classifier_test", s.classifier_test.size()},
          {"unused", s.unused.size()}};
}

json synth_command(const Globals& g, std::optional<int> walks, std::optional<int> anomalous, bool correspondences) {
  PipelineConfig c = load_config(g);
  if (walks) c.synth.walks = *walks;
  if (anomalous) c.synth.anomalous_walks = *anomalous;
  if (correspondences) c.synth.correspondences = true;
  const fs::path dir = g.out_dir / "walks";
  const auto generated = generate_synthetic(c.synth);
  write_synthetic(generated, dir);
  int anomalous_count = 0;
  for (const auto& w : generated) anomalous_count += w.label == Label::kAnomalous ? 1 : 0;
  return {{"walks", generated.size()},
          {"anomalous", anomalous_count},
          {"manifests", (dir / "manifests.json").string()},
          {"ground_truth", (dir / "ground_truth.json").string()}};
}

json write_dataset(const Dataset& ds, const fs::path& out_dir) {
  write_cycles(out_dir / "cycles.jsonl", ds.cycles);
  write_json(out_dir / "norm_stats.json", norm_stats_to_json(ds.stats));
  json walks = json::array();
  std::size_t failed = 0;
  for (const auto& w : ds.walks) {
    json entry = {{"id", w.id}, {"cycles", w.cycles}};
    if (!w.error.empty()) {
      entry["error"] = {{"code", w.error}, {"message", w.message}};
      ++failed;
    }
    walks.push_back(entry);
  }
  write_json(out_dir / "build_log.json", walks);
  return {{"cycles", ds.cycles.size()},
          {"walks_ok", ds.walks.size() - failed},
          {"walks_failed", failed},
          {"cycles_file", (out_dir / "cycles.jsonl").string()},
          {"norm_stats", (out_dir / "norm_stats.json").string()}};
}

json build_dataset_command(const Globals& g, const std::string& manifests, std::optional<double> frame_rate) {
  PipelineConfig c = load_config(g);
  if (frame_rate) c.egomotion.frame_rate = *frame_rate;
  const Dataset ds = build_dataset(load_manifests(manifests), c, log_stream(g));
  return write_dataset(ds, g.out_dir);
}

json train_encoder_command(const Globals& g, const std::string& data, const std::string& out) {
  const PipelineConfig c = load_config(g);
  const PreparedData prepared = prepare_data(read_cycles(data), c);
  const EncoderStage stage = train_encoder_stage(prepared, c, log_stream(g));
  ModelBundle bundle;
  bundle.config = c;
  bundle.norm = prepared.norm;
  bundle.autoencoder = stage.params;
  const fs::path path = or_default(out, g.out_dir / "encoder.json");
  save_bundle(path, bundle);
  return {{"model", path.string()},
          {"split", split_json(prepared.split)},
          {"steps", stage.loss_history.size()},
          {"final_batch_loss", stage.loss_history.empty() ? 0.0 : stage.loss_history.back()},
          {"encoder_test_loss", stage.test_loss}};
}

// The split and encoder shape must match the ones the encoder was trained with.
PipelineConfig config_for_bundle(const Globals& g, const ModelBundle& bundle) {
  PipelineConfig c = g.config_path.empty() && !g.seed ? bundle.config : load_config(g);
  c.split = bundle.config.split;
  c.encoder = bundle.config.encoder;
  return c;
}

json train_classifier_command(const Globals& g, const std::string& encoder, const std::string& data,
                              const std::string& out) {
  ModelBundle bundle = load_bundle(encoder);
  if (!bundle.autoencoder || !bundle.norm) {
    fail(ErrorCode::kInvalidArgument, "train-classifier: " + encoder + " holds no trained encoder");
  }
  const PipelineConfig c = config_for_bundle(g, bundle);
  const PreparedData prepared = prepare_data(read_cycles(data), c, *bundle.norm);
  bundle.cnn = train_cnn_stage(prepared, *bundle.autoencoder, c, log_stream(g));
  bundle.config = c;
  const fs::path path = or_default(out, g.out_dir / "model.json");
  save_bundle(path, bundle);
  return {{"model", path.string()}, {"split", split_json(prepared.split)}};
}

json train_svm_command(const Globals& g, const std::string& data, const std::string& model, const std::string& out) {
  const auto cycles = read_cycles(data);
  ModelBundle bundle;
  PipelineConfig c;
  std::optional<PreparedData> prepared;
  if (!model.empty()) {
    bundle = load_bundle(model);
    c = config_for_bundle(g, bundle);
    if (bundle.norm) prepared = prepare_data(cycles, c, *bundle.norm);
  } else {
    c = load_config(g);
  }
  if (!prepared) prepared = prepare_data(cycles, c);
  bundle.config = c;
  bundle.norm = prepared->norm;
  bundle.svm = train_svm_stage(*prepared, c, log_stream(g));
  const fs::path path = or_default(out, g.out_dir / (model.empty() ? "svm.json" : "model.json"));
  save_bundle(path, bundle);
  return {{"model", path.string()},
          {"support_vectors", bundle.svm->support_vectors.rows()},
          {"gamma", bundle.svm->gamma},
          {"split", split_json(prepared->split)}};
}

json evaluate_command(const Globals& g, const std::string& model, const std::string& data) {
  const ModelBundle bundle = load_bundle(model);
  if (!bundle.norm) fail(ErrorCode::kInvalidArgument, "evaluate: model holds no normalization statistics");
  const PreparedData prepared = prepare_data(read_cycles(data), bundle.config, *bundle.norm);
  json reports = json::array();
  std::string table;
  if (bundle.autoencoder && bundle.cnn) {
    const EvalReport r = evaluate_cnn(prepared, *bundle.autoencoder, *bundle.cnn);
    reports.push_back(report_to_json(r));
    table += format_report(r) + "\n";
  }
  if (bundle.svm) {
    const EvalReport r = evaluate_svm(prepared, *bundle.svm);
    reports.push_back(report_to_json(r));
    table += format_report(r) + "\n";
  }
  if (reports.empty()) fail(ErrorCode::kInvalidArgument, "evaluate: model holds no classifier");
  const json summary = {{"split", split_json(prepared.split)}, {"reports", reports}};
  write_json(g.out_dir / "eval_report.json", summary);
  write_text(g.out_dir / "report.txt", table);
  if (!g.quiet) std::cerr << table;
  json accuracies = json::object();
  for (const auto& r : reports) accuracies[r.at("model").get<std::string>()] = r.at("accuracy");
  return {{"report", (g.out_dir / "eval_report.json").string()}, {"accuracy", accuracies}};
}

json run_all_command(const Globals& g, const std::string& manifests, std::optional<double> frame_rate) {
  PipelineConfig c = load_config(g);
  if (frame_rate) c.egomotion.frame_rate = *frame_rate;
  std::ostream* log = log_stream(g);
  Stopwatch clock;
  json out;
  std::vector<WalkManifest> walks;
  if (manifests.empty()) {
    const fs::path dir = g.out_dir / "walks";
    walks = write_synthetic(generate_synthetic(c.synth), dir);
    out["manifests"] = (dir / "manifests.json").string();
    if (log) *log << "synth: " << walks.size() << " walks (" << clock.seconds() << " s)\n";
  } else {
    walks = load_manifests(manifests);
    out["manifests"] = manifests;
  }
  const Dataset ds = build_dataset(walks, c, log);
  out["dataset"] = write_dataset(ds, g.out_dir);
  if (log) *log << "build-dataset: " << ds.cycles.size() << " cycles (" << clock.seconds() << " s)\n";

  const ProtocolResult result = run_protocol(ds.cycles, c, log);
  const fs::path model = g.out_dir / "model.json";
  save_bundle(model, result.bundle);
  write_json(g.out_dir / "eval_report.json", protocol_summary(result));
  const std::string table = format_report(result.cnn_report) + "\n" + format_report(result.svm_report);
  write_text(g.out_dir / "report.txt", table);
  if (log) *log << table << "run-all: " << clock.seconds() << " s\n";

  out["model"] = model.string();
  out["report"] = (g.out_dir / "eval_report.json").string();
  out["split"] = split_json(result.split);
  out["accuracy"] = {{"rnn-cnn", result.cnn_report.accuracy()}, {"svm", result.svm_report.accuracy()}};
  out["encoder_test_loss"] = result.encoder.test_loss;
  return out;
}

void print_error(const std::string& code, const std::string& message) {
  std::cout << json{{"status", "error"}, {"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait anomaly detection: synthetic data, dataset building, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::string out_dir = "out";
  app.add_option("--seed", g.seed, "Seed for every seeded stage (overrides the config)");
  app.add_option("--config", g.config_path, "JSON configuration document")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "Directory for outputs")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress output on stderr");

  std::optional<int> walks;
  std::optional<int> anomalous;
  bool correspondences = false;
  auto* synth = app.add_subcommand("synth", "Generate synthetic walks with manifests");
  synth->add_option("--walks", walks, "Number of walks");
  synth->add_option("--anomalous", anomalous, "Number of anomalous walks");
  synth->add_flag("--correspondences", correspondences, "Emit point correspondences instead of angles");

  std::string manifests;
  std::optional<double> frame_rate;
  auto* build = app.add_subcommand("build-dataset", "Condition and segment walks into gait cycles");
  build->add_option("--manifests", manifests, "Manifest file, manifest list or directory")->required();
  build->add_option("--frame-rate", frame_rate, "Frame rate of correspondence streams (default 30)");

  std::string data;
  std::string out;
  auto* enc = app.add_subcommand("train-encoder", "Train the sequence autoencoder on normal cycles");
  enc->add_option("--data", data, "Cycles JSONL")->required();
  enc->add_option("--out", out, "Model bundle to write");

  std::string encoder;
  auto* cls = app.add_subcommand("train-classifier", "Train the CNN on encoder states");
  cls->add_option("--encoder", encoder, "Model bundle holding the trained encoder")->required();
  cls->add_option("--data", data, "Cycles JSONL")->required();
  cls->add_option("--out", out, "Model bundle to write");

  std::string model;
  auto* svm = app.add_subcommand("train-svm", "Train the RBF SVM baseline on flattened cycles");
  svm->add_option("--data", data, "Cycles JSONL")->required();
  svm->add_option("--model", model, "Existing bundle whose split and statistics are reused");
  svm->add_option("--out", out, "Model bundle to write");

  auto* eval = app.add_subcommand("evaluate", "Evaluate trained classifiers on the held-out split");
  eval->add_option("--model", model, "Model bundle")->required();
  eval->add_option("--data", data, "Cycles JSONL")->required();

  auto* all = app.add_subcommand("run-all", "Synthesize, build, train and evaluate end to end");
  all->add_option("--manifests", manifests, "Use existing manifests instead of synthetic walks");
  all->add_option("--frame-rate", frame_rate, "Frame rate of correspondence streams (default 30)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 2;
  }
  g.out_dir = out_dir;

  try {
    json result;
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "synth") {
      result = synth_command(g, walks, anomalous, correspondences);
    } else if (command == "build-dataset") {
      result = build_dataset_command(g, manifests, frame_rate);
    } else if (command == "train-encoder") {
      result = train_encoder_command(g, data, out);
    } else if (command == "train-classifier") {
      result = train_classifier_command(g, encoder, data, out);
    } else if (command == "train-svm") {
      result = train_svm_command(g, data, model, out);
    } else if (command == "evaluate") {
      result = evaluate_command(g, model, data);
    } else {
      result = run_all_command(g, manifests, frame_rate);
    }
    std::cout << json{{"status", "ok"}, {"command", command}, {"result", result}}.dump() << std::endl;
    return 0;
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what());
  } catch (const fs::filesystem_error& e) {
    print_error("IoError", e.what());
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
  }
  return 1;
}
