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

#ifndef LQRLAB_DEGRADE_H_
#define LQRLAB_DEGRADE_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lqrlab/audio_io.h"

namespace lqrlab {

enum class DegradationKind { kAdditiveNoise, kPeakClip, kLowpass };
enum class NoiseKind { kWhite, kPink };

struct DegradationSpec {
  DegradationKind kind = DegradationKind::kAdditiveNoise;
  // +inf means "no noise" and returns the input unchanged.
  double snr_db = std::numeric_limits<double>::infinity();
  NoiseKind noise_kind = NoiseKind::kWhite;
  double threshold = 1.0;
  double cutoff_hz = 0.0;
  uint64_t seed = 0;
};

// Unit-variance-ish noise of the requested colour; sample i depends only on
// (seed, i).
std::vector<double> GenerateNoise(size_t length, NoiseKind kind, uint64_t seed);

// Mixes in seeded noise scaled so that 10 log10(P_signal / P_noise) equals
// snr_db. If the mixture would leave [-1, 1] it is scaled down by its peak;
// the applied gain (1 when untouched) is written to *peak_gain.
// Throws ZeroPowerSignal.
AudioClip AddNoiseSnr(const AudioClip& clip, const DegradationSpec& spec,
                      double* peak_gain = nullptr);

// Clamps every sample to [-threshold, threshold]; threshold in (0, 1].
AudioClip PeakClip(const AudioClip& clip, double threshold);

// Normalized biquad, a0 = 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Second-order Butterworth lowpass via the bilinear transform.
Biquad ButterworthLowpass(double cutoff_hz, int sample_rate);

// Zero-phase forward-backward application of ButterworthLowpass. Both passes
// start from the steady state of the edge sample, so a constant input passes
// unchanged. Throws CutoffOutOfRange unless 0 < cutoff < sample_rate / 2.
AudioClip Lowpass(const AudioClip& clip, double cutoff_hz);

AudioClip ApplyDegradation(const AudioClip& clip, const DegradationSpec& spec,
                           double* peak_gain = nullptr);

std::string DegradationKindName(DegradationKind kind);
std::string NoiseKindName(NoiseKind kind);

// "key value" lines describing a degradation, for sidecar metadata.
std::string DescribeDegradation(const DegradationSpec& spec);

}  // namespace lqrlab

#endif  // LQRLAB_DEGRADE_H_
