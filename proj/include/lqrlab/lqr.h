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

#ifndef LQRLAB_LQR_H_
#define LQRLAB_LQR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lqrlab/audio_io.h"
#include "lqrlab/common.h"
#include "lqrlab/encoder.h"
#include "lqrlab/rvq.h"

namespace lqrlab {

// Denominator floor for every ratio.
inline constexpr double kLqrEpsilon = 1e-12;

// Order in which frames and stages are reduced.
//   kRatioOfAverages: sigma averaged over frames per stage, then ratios.
//   kAverageOfRatios: per-frame ratios, then averaged over frames.
enum class RatioOrder { kRatioOfAverages, kAverageOfRatios };

struct LqrOptions {
  RatioOrder ratio_order = RatioOrder::kRatioOfAverages;
};

struct LqrReport {
  std::vector<double> stage_lqr;    // LQR_1..LQR_K
  double mean_lqr = 0.0;            // mean over k of LQR_k
  double input_to_final = 0.0;      // LQR_{0,K}
  std::vector<double> stage_sigma;  // sigma_0..sigma_K
  bool clamped = false;
  VarianceMode variance_mode = VarianceMode::kVariance;

  bool operator==(const LqrReport& other) const = default;
};

// Population variance across components (kVariance, needs D >= 2) or mean of
// squared components (kPower, needs D >= 1). Throws DimensionTooSmall.
double FrameSigma(std::span<const double> frame, VarianceMode mode);

// FrameSigma of every row.
std::vector<double> FrameSigmas(const Matrix& frames, VarianceMode mode);

// sigma_k = (1/T) sum_t FrameSigma(e_k[t]) for every residual matrix.
std::vector<double> StageSigmas(std::span<const Matrix> residuals,
                                VarianceMode mode);
std::vector<double> StageSigmas(const QuantizationTrace& trace,
                                VarianceMode mode);

// sigma_{k-1} / max(sigma_k, eps) for 1 <= k <= K, where K = sigmas.size() - 1.
// Sets *clamped when the floor engages. Throws IndexOutOfRange.
double LqrStage(std::span<const double> sigmas, size_t k,
                bool* clamped = nullptr);
double LqrMean(std::span<const double> sigmas, bool* clamped = nullptr);
double LqrInputToFinal(std::span<const double> sigmas, bool* clamped = nullptr);

LqrReport ReportFromSigmas(std::span<const double> sigmas, VarianceMode mode);

LqrReport ComputeReport(const QuantizationTrace& trace,
                        const LqrOptions& options = {});

// Quantizes with the model and reports both metrics.
LqrReport ScoreLatents(const RvqModel& model, const LatentSequence& latents,
                       const LqrOptions& options = {});

// Encode, quantize, reduce. The clip must already be at cfg.sample_rate and
// cfg.n_bands must equal the model dimension.
LqrReport ScoreClip(const RvqModel& model, const EncoderConfig& cfg,
                    const AudioClip& clip, const LqrOptions& options = {});

// One "key value" pair per line. With `decibels`, ratios are shown as
// 10 log10(ratio).
std::string ReportToKeyValue(const LqrReport& report, bool decibels = false);

// JSON object with exactly the LqrReport fields.
std::string ReportToJson(const LqrReport& report, int indent = 2);

double RatioToDb(double ratio);

}  // namespace lqrlab

#endif  // LQRLAB_LQR_H_
