// Copyright 2026 The LQR Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lqrlab/cli.h"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "lqrlab/audio_io.h"
#include "lqrlab/degrade.h"
#include "lqrlab/encoder.h"
#include "lqrlab/harness.h"
#include "lqrlab/lqr.h"
#include "lqrlab/rvq.h"

namespace lqrlab {
namespace {

using Json = nlohmann::ordered_json;

// Encoder flags shared by every subcommand that ingests audio. Unset values
// fall back to the encoder settings recorded in the model's provenance, then
// to the library defaults.
struct EncoderFlags {
  std::optional<size_t> frame_len;
  std::optional<size_t> hop;
  std::optional<size_t> n_bands;
  std::optional<int> sample_rate;
  std::optional<double> log_floor;

  void Register(CLI::App& app, bool with_bands) {
    app.add_option("--frame", frame_len, "Frame length in samples");
    app.add_option("--hop", hop, "Hop in samples");
    if (with_bands) app.add_option("--bands", n_bands, "Number of mel bands (D)");
    app.add_option("--sample-rate", sample_rate, "Encoder sample rate in Hz");
    app.add_option("--log-floor", log_floor, "Floor added before the log");
  }

  EncoderConfig Resolve(const EncoderConfig& base) const {
    EncoderConfig cfg = base;
    if (frame_len) cfg.frame_len = *frame_len;
    if (hop) cfg.hop = *hop;
    if (n_bands) cfg.n_bands = *n_bands;
    if (sample_rate) cfg.sample_rate = *sample_rate;
    if (log_floor) cfg.log_floor = *log_floor;
    return cfg;
  }
};

Json EncoderToJson(const EncoderConfig& cfg) {
  Json j;
  j["frame_len"] = cfg.frame_len;
  j["hop"] = cfg.hop;
  j["n_bands"] = cfg.n_bands;
  j["sample_rate"] = cfg.sample_rate;
  j["log_floor"] = cfg.log_floor;
  return j;
}

// Encoder settings stored by `train` in the model provenance, if any.
EncoderConfig EncoderFromModel(const RvqModel& model) {
  EncoderConfig cfg;
  const Json j = Json::parse(model.trained_on, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("encoder")) {
    const Json& e = j["encoder"];
    cfg.frame_len = e.value("frame_len", cfg.frame_len);
    cfg.hop = e.value("hop", cfg.hop);
    cfg.n_bands = e.value("n_bands", cfg.n_bands);
    cfg.sample_rate = e.value("sample_rate", cfg.sample_rate);
    cfg.log_floor = e.value("log_floor", cfg.log_floor);
  }
  cfg.n_bands = model.dim();
  return cfg;
}

std::string RatioOrderName(RatioOrder order) {
  return order == RatioOrder::kAverageOfRatios ? "average_of_ratios"
                                               : "ratio_of_averages";
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw LqrError(ErrorCode::kIoFailure, "cannot write " + path);
}

std::shared_ptr<spdlog::logger> MakeLogger(std::ostream& err,
                                           const std::string& level) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("lqrlab", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level.empty() ? "warn" : level));
  return logger;
}

struct TrainArgs {
  std::string manifest;
  std::string out;
  size_t stages = 8;
  size_t codebook_size = 256;
  uint64_t seed = 0;
  int max_iters = 50;
  int restarts = 1;
  std::string variance_mode = "variance";
  bool zero_codeword = false;
  EncoderFlags encoder;
};

int RunTrain(const TrainArgs& args, std::ostream& out, spdlog::logger& log) {
  const EncoderConfig cfg = args.encoder.Resolve(EncoderConfig{});
  ValidateEncoderConfig(cfg);
  const Manifest manifest = LoadManifest(args.manifest, /*require_scores=*/false);

  std::vector<LatentSequence> corpus;
  for (const ManifestEntry& entry : manifest.entries) {
    try {
      corpus.push_back(LoadMediaLatents(entry.media_path, cfg).latents);
      log.debug("loaded {} ({} frames)", entry.media_path,
                corpus.back().num_frames());
    } catch (const LqrError& e) {
      log.warn("skipping {}: {}", entry.media_path, e.what());
    }
  }
  if (corpus.empty()) {
    throw LqrError(ErrorCode::kTooFewVectors, "no training item could be loaded");
  }

  Json config;
  config["command"] = "train";
  config["manifest"] = args.manifest;
  config["encoder"] = EncoderToJson(cfg);
  config["stages"] = args.stages;
  config["codebook_size"] = args.codebook_size;
  config["seed"] = args.seed;
  config["max_iters"] = args.max_iters;
  config["restarts"] = args.restarts;
  config["variance_mode"] = args.variance_mode;
  config["zero_codeword"] = args.zero_codeword;
  config["items"] = corpus.size();

  TrainOptions options;
  options.n_stages = args.stages;
  options.codebook_size = args.codebook_size;
  options.seed = args.seed;
  options.max_iters = args.max_iters;
  options.n_restarts = args.restarts;
  options.variance_mode =
      args.variance_mode == "power" ? VarianceMode::kPower : VarianceMode::kVariance;
  options.zero_codeword = args.zero_codeword;
  options.trained_on = config.dump();
  const RvqModel model = TrainCodebooks(corpus, options);
  SaveModel(model, args.out);
  log.info("wrote {} stage model to {}", model.num_stages(), args.out);
  out << config.dump(2) << "\n";
  return kExitOk;
}

struct ScoreArgs {
  std::string model;
  std::string input;
  bool db = false;
  bool json = false;
  std::string ratio_order = "ratio_of_averages";
  EncoderFlags encoder;
};

int RunScore(const ScoreArgs& args, std::ostream& out) {
  const RvqModel model = LoadModel(args.model);
  const EncoderConfig cfg = args.encoder.Resolve(EncoderFromModel(model));
  LqrOptions options;
  options.ratio_order = args.ratio_order == "average_of_ratios"
                            ? RatioOrder::kAverageOfRatios
                            : RatioOrder::kRatioOfAverages;
  const LqrReport report = ScoreMedia(args.input, model, cfg, options);

  Json config;
  config["command"] = "score";
  config["model"] = args.model;
  config["input"] = args.input;
  config["encoder"] = EncoderToJson(cfg);
  config["ratio_order"] = RatioOrderName(options.ratio_order);
  config["decibels"] = args.db;

  if (args.json) {
    Json j;
    j["config"] = config;
    j["report"] = Json::parse(ReportToJson(report));
    if (args.db) {
      j["display_db"] = {{"mean_lqr", RatioToDb(report.mean_lqr)},
                         {"input_to_final", RatioToDb(report.input_to_final)}};
    }
    out << j.dump(2) << "\n";
  } else {
    out << "# config " << config.dump() << "\n";
    out << ReportToKeyValue(report, args.db);
  }
  return kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string out;
  std::string aggregation = "per_item";
  std::string format = "csv";
  std::string ratio_order = "ratio_of_averages";
  int jobs = 1;
  EncoderFlags encoder;
};

int RunEval(const EvalArgs& args, std::ostream& out, spdlog::logger& log) {
  const RvqModel model = LoadModel(args.model);
  EvalConfig cfg;
  cfg.encoder = args.encoder.Resolve(EncoderFromModel(model));
  cfg.aggregation = args.aggregation == "per_system" ? Aggregation::kPerSystem
                                                      : Aggregation::kPerItem;
  cfg.lqr.ratio_order = args.ratio_order == "average_of_ratios"
                            ? RatioOrder::kAverageOfRatios
                            : RatioOrder::kRatioOfAverages;
  cfg.jobs = args.jobs;
  const Manifest manifest = LoadManifest(args.manifest);

  Json config;
  config["command"] = "eval";
  config["model"] = args.model;
  config["manifest"] = args.manifest;
  config["encoder"] = EncoderToJson(cfg.encoder);
  config["aggregation"] = AggregationName(cfg.aggregation);
  config["ratio_order"] = RatioOrderName(cfg.lqr.ratio_order);
  config["variance_mode"] = std::string(VarianceModeName(model.variance_mode));

  CorrelationReport report = Evaluate(manifest, model, cfg);
  report.config_echo = config.dump();
  WriteReport(report, args.out,
              args.format == "json" ? ReportFormat::kStructured : ReportFormat::kCsv);

  // Sidecar with everything the CSV has no room for.
  Json meta;
  meta["config"] = config;
  meta["model_provenance"] = model.trained_on;
  meta["total_items"] = report.total_items;
  meta["exclusions"] = Json::array();
  for (const auto& [id, reason] : report.exclusions) {
    meta["exclusions"].push_back({{"item_id", id}, {"reason", reason}});
    log.warn("excluded {}: {}", id, reason);
  }
  WriteText(args.out + ".meta.json", meta.dump(2) + "\n");

  out << FormatReportCsv(report);
  const size_t failed = report.exclusions.size();
  if (2 * failed > report.total_items) {
    log.error("{} of {} items failed", failed, report.total_items);
    return kExitFailure;
  }
  return kExitOk;
}

struct DegradeArgs {
  std::string input;
  std::string out;
  std::string kind = "noise";
  std::optional<double> snr;
  std::string noise = "white";
  std::optional<double> threshold;
  std::optional<double> cutoff;
  uint64_t seed = 0;
};

int RunDegrade(const DegradeArgs& args, std::ostream& out) {
  DegradationSpec spec;
  spec.seed = args.seed;
  if (args.kind == "noise") {
    if (!args.snr) throw CLI::ValidationError("--snr", "required for --kind noise");
    spec.kind = DegradationKind::kAdditiveNoise;
    spec.snr_db = *args.snr;
    spec.noise_kind = args.noise == "pink" ? NoiseKind::kPink : NoiseKind::kWhite;
  } else if (args.kind == "clip") {
    if (!args.threshold) {
      throw CLI::ValidationError("--threshold", "required for --kind clip");
    }
    spec.kind = DegradationKind::kPeakClip;
    spec.threshold = *args.threshold;
  } else {
    if (!args.cutoff) throw CLI::ValidationError("--cutoff", "required for --kind lowpass");
    spec.kind = DegradationKind::kLowpass;
    spec.cutoff_hz = *args.cutoff;
  }
  const AudioClip clip = LoadWav(args.input);
  double gain = 1.0;
  const AudioClip degraded = ApplyDegradation(clip, spec, &gain);
  WriteWav(args.out, degraded);

  std::string meta = "input " + args.input + "\n" + DescribeDegradation(spec);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "peak_gain %.17g\n", gain);
  meta += buf;
  meta += "sample_rate " + std::to_string(degraded.sample_rate) + "\n";
  WriteText(args.out + ".txt", meta);
  out << meta;
  return kExitOk;
}

int RunExportInfo(const std::string& input, std::ostream& out) {
  const LatentBundle bundle = LoadLatents(input);
  Json j;
  j["input"] = input;
  j["sample_rate"] = bundle.sample_rate;
  j["hop"] = bundle.hop;
  j["frame_rate"] = bundle.latents.frame_rate;
  j["frames"] = bundle.latents.num_frames();
  j["dim"] = bundle.latents.dim();
  j["stages"] = bundle.stage_outputs.size();
  if (!bundle.stage_outputs.empty()) {
    const QuantizationTrace trace = TraceFromStageOutputs(
        bundle.latents, bundle.stage_outputs, VarianceMode::kVariance);
    j["report"] = Json::parse(ReportToJson(ComputeReport(trace)));
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"LQR speech-quality metrics from residual vector quantization"};
  app.require_subcommand(1);
  std::string log_level;
  if (const char* env = std::getenv("LQRLAB_LOG")) log_level = env;
  app.add_option("--log-level", log_level,
                 "trace|debug|info|warn|error|off (default: $LQRLAB_LOG or warn)");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train RVQ codebooks");
  train_cmd->add_option("--manifest", train.manifest, "CSV with a path column")
      ->required();
  train_cmd->add_option("--out", train.out, "Output .rvqm model")->required();
  train_cmd->add_option("--stages", train.stages, "Number of stages K");
  train_cmd->add_option("--codebook-size", train.codebook_size, "Codewords N");
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--max-iters", train.max_iters, "Lloyd iterations");
  train_cmd->add_option("--restarts", train.restarts, "k-means++ restarts");
  train_cmd->add_option("--variance-mode", train.variance_mode)
      ->check(CLI::IsMember({"variance", "power"}));
  train_cmd->add_flag("--zero-codeword", train.zero_codeword,
                      "Reserve the last codeword of each stage for zero");
  train.encoder.Register(*train_cmd, /*with_bands=*/true);

  ScoreArgs score;
  CLI::App* score_cmd = app.add_subcommand("score", "Score one WAV or LTNT file");
  score_cmd->add_option("--model", score.model)->required();
  score_cmd->add_option("--input", score.input)->required();
  score_cmd->add_flag("--db", score.db, "Show ratios in dB");
  score_cmd->add_flag("--json", score.json, "Emit JSON");
  score_cmd->add_option("--ratio-order", score.ratio_order)
      ->check(CLI::IsMember({"ratio_of_averages", "average_of_ratios"}));
  score.encoder.Register(*score_cmd, /*with_bands=*/false);

  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Correlate LQR with subjective scores");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--manifest", eval.manifest)->required();
  eval_cmd->add_option("--out", eval.out)->required();
  eval_cmd->add_option("--aggregation", eval.aggregation)
      ->check(CLI::IsMember({"per_item", "per_system"}));
  eval_cmd->add_option("--format", eval.format)
      ->check(CLI::IsMember({"csv", "json"}));
  eval_cmd->add_option("--ratio-order", eval.ratio_order)
      ->check(CLI::IsMember({"ratio_of_averages", "average_of_ratios"}));
  eval_cmd->add_option("--jobs", eval.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  eval.encoder.Register(*eval_cmd, /*with_bands=*/false);

  DegradeArgs degrade;
  CLI::App* degrade_cmd =
      app.add_subcommand("degrade", "Write a degraded copy of a WAV file");
  degrade_cmd->add_option("--input", degrade.input)->required();
  degrade_cmd->add_option("--out", degrade.out)->required();
  degrade_cmd->add_option("--kind", degrade.kind)
      ->check(CLI::IsMember({"noise", "clip", "lowpass"}));
  degrade_cmd->add_option("--snr", degrade.snr, "SNR in dB (inf for none)");
  degrade_cmd->add_option("--noise", degrade.noise)
      ->check(CLI::IsMember({"white", "pink"}));
  degrade_cmd->add_option("--threshold", degrade.threshold, "Clip level");
  degrade_cmd->add_option("--cutoff", degrade.cutoff, "Lowpass cutoff in Hz");
  degrade_cmd->add_option("--seed", degrade.seed);

  std::string export_input;
  CLI::App* info_cmd =
      app.add_subcommand("export-info", "Describe an LTNT latent container");
  info_cmd->add_option("--input", export_input)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  std::shared_ptr<spdlog::logger> log = MakeLogger(err, log_level);
  try {
    if (*train_cmd) return RunTrain(train, out, *log);
    if (*score_cmd) return RunScore(score, out);
    if (*eval_cmd) return RunEval(eval, out, *log);
    if (*degrade_cmd) return RunDegrade(degrade, out);
    if (*info_cmd) return RunExportInfo(export_input, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lqrlab
