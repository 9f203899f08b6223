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

#include "lqrlab/lqr.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "nlohmann/json.hpp"

namespace lqrlab {
namespace {

double FlooredRatio(double num, double den, bool* clamped) {
  if (den < kLqrEpsilon) {
    if (clamped != nullptr) *clamped = true;
    den = kLqrEpsilon;
  }
  return num / den;
}

void CheckSigmas(std::span<const double> sigmas) {
  if (sigmas.size() < 2) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "need sigma_0..sigma_K with K >= 1");
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double FrameSigma(std::span<const double> frame, VarianceMode mode) {
  const size_t d = frame.size();
  if (mode == VarianceMode::kPower) {
    if (d < 1) {
      throw LqrError(ErrorCode::kDimensionTooSmall, "power mode needs D >= 1");
    }
    double sum = 0.0;
    for (double v : frame) sum += v * v;
    return sum / static_cast<double>(d);
  }
  if (d < 2) {
    throw LqrError(ErrorCode::kDimensionTooSmall, "variance mode needs D >= 2");
  }
  double mean = 0.0;
  for (double v : frame) mean += v;
  mean /= static_cast<double>(d);
  double sum = 0.0;
  for (double v : frame) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(d);
}

std::vector<double> FrameSigmas(const Matrix& frames, VarianceMode mode) {
  std::vector<double> out(frames.rows());
  for (size_t t = 0; t < frames.rows(); ++t) {
    out[t] = FrameSigma(frames.row(t), mode);
  }
  return out;
}

std::vector<double> StageSigmas(std::span<const Matrix> residuals,
                                VarianceMode mode) {
  std::vector<double> sigmas;
  sigmas.reserve(residuals.size());
  for (const Matrix& e : residuals) {
    if (e.rows() == 0) {
      throw LqrError(ErrorCode::kInvalidArgument, "residual with no frames");
    }
    double sum = 0.0;
    for (size_t t = 0; t < e.rows(); ++t) sum += FrameSigma(e.row(t), mode);
    sigmas.push_back(sum / static_cast<double>(e.rows()));
  }
  return sigmas;
}

std::vector<double> StageSigmas(const QuantizationTrace& trace,
                                VarianceMode mode) {
  return StageSigmas(trace.residuals, mode);
}

double LqrStage(std::span<const double> sigmas, size_t k, bool* clamped) {
  if (k < 1 || k >= sigmas.size()) {
    throw LqrError(ErrorCode::kIndexOutOfRange,
                   "stage " + std::to_string(k) + " outside 1.." +
                       std::to_string(sigmas.empty() ? 0 : sigmas.size() - 1));
  }
  return FlooredRatio(sigmas[k - 1], sigmas[k], clamped);
}

double LqrMean(std::span<const double> sigmas, bool* clamped) {
  CheckSigmas(sigmas);
  const size_t k_total = sigmas.size() - 1;
  double sum = 0.0;
  for (size_t k = 1; k <= k_total; ++k) sum += LqrStage(sigmas, k, clamped);
  return sum / static_cast<double>(k_total);
}

double LqrInputToFinal(std::span<const double> sigmas, bool* clamped) {
  CheckSigmas(sigmas);
  return FlooredRatio(sigmas.front(), sigmas.back(), clamped);
}

LqrReport ReportFromSigmas(std::span<const double> sigmas, VarianceMode mode) {
  CheckSigmas(sigmas);
  LqrReport report;
  report.variance_mode = mode;
  report.stage_sigma.assign(sigmas.begin(), sigmas.end());
  for (size_t k = 1; k < sigmas.size(); ++k) {
    report.stage_lqr.push_back(LqrStage(sigmas, k, &report.clamped));
  }
  report.mean_lqr = LqrMean(sigmas, &report.clamped);
  report.input_to_final = LqrInputToFinal(sigmas, &report.clamped);
  return report;
}

LqrReport ComputeReport(const QuantizationTrace& trace,
                        const LqrOptions& options) {
  if (trace.num_stages() < 1) {
    throw LqrError(ErrorCode::kInvalidArgument, "trace has no stages");
  }
  const VarianceMode mode = trace.variance_mode;
  std::vector<double> sigmas = trace.stage_sigma.size() == trace.residuals.size()
                                   ? trace.stage_sigma
                                   : StageSigmas(trace.residuals, mode);
  if (options.ratio_order == RatioOrder::kRatioOfAverages) {
    return ReportFromSigmas(sigmas, mode);
  }

  // Per-frame ratios averaged over frames.
  const size_t k_total = trace.num_stages();
  const size_t n_frames = trace.num_frames();
  std::vector<std::vector<double>> per_frame;
  per_frame.reserve(k_total + 1);
  for (const Matrix& e : trace.residuals) per_frame.push_back(FrameSigmas(e, mode));

  LqrReport report;
  report.variance_mode = mode;
  report.stage_sigma = std::move(sigmas);
  double stage_sum = 0.0;
  for (size_t k = 1; k <= k_total; ++k) {
    double acc = 0.0;
    for (size_t t = 0; t < n_frames; ++t) {
      acc += FlooredRatio(per_frame[k - 1][t], per_frame[k][t], &report.clamped);
    }
    report.stage_lqr.push_back(acc / static_cast<double>(n_frames));
    stage_sum += report.stage_lqr.back();
  }
  report.mean_lqr = stage_sum / static_cast<double>(k_total);
  double acc = 0.0;
  for (size_t t = 0; t < n_frames; ++t) {
    acc += FlooredRatio(per_frame.front()[t], per_frame.back()[t], &report.clamped);
  }
  report.input_to_final = acc / static_cast<double>(n_frames);
  return report;
}

LqrReport ScoreLatents(const RvqModel& model, const LatentSequence& latents,
                       const LqrOptions& options) {
  return ComputeReport(Quantize(model, latents), options);
}

LqrReport ScoreClip(const RvqModel& model, const EncoderConfig& cfg,
                    const AudioClip& clip, const LqrOptions& options) {
  ValidateModel(model);
  if (cfg.n_bands != model.dim()) {
    throw LqrError(ErrorCode::kDimensionMismatch,
                   "encoder produces " + std::to_string(cfg.n_bands) +
                       " bands, model expects " + std::to_string(model.dim()));
  }
  return ScoreLatents(model, EncodeSpectral(clip, cfg), options);
}

double RatioToDb(double ratio) { return 10.0 * std::log10(ratio); }

std::string ReportToKeyValue(const LqrReport& report, bool decibels) {
  auto ratio = [decibels](double r) {
    return FormatDouble(decibels ? RatioToDb(r) : r);
  };
  std::string out;
  out += "mean_lqr " + ratio(report.mean_lqr) + "\n";
  out += "input_to_final " + ratio(report.input_to_final) + "\n";
  for (size_t k = 0; k < report.stage_lqr.size(); ++k) {
    out += "stage_lqr_" + std::to_string(k + 1) + " " +
           ratio(report.stage_lqr[k]) + "\n";
  }
  for (size_t k = 0; k < report.stage_sigma.size(); ++k) {
    out += "stage_sigma_" + std::to_string(k) + " " +
           FormatDouble(report.stage_sigma[k]) + "\n";
  }
  out += std::string("clamped ") + (report.clamped ? "true" : "false") + "\n";
  out += "variance_mode " + std::string(VarianceModeName(report.variance_mode)) + "\n";
  if (decibels) out += "units dB\n";
  return out;
}

std::string ReportToJson(const LqrReport& report, int indent) {
  nlohmann::ordered_json j;
  j["stage_lqr"] = report.stage_lqr;
  j["mean_lqr"] = report.mean_lqr;
  j["input_to_final"] = report.input_to_final;
  j["stage_sigma"] = report.stage_sigma;
  j["clamped"] = report.clamped;
  j["variance_mode"] = std::string(VarianceModeName(report.variance_mode));
  return j.dump(indent);
}

}  // namespace lqrlab
