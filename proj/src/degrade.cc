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

#include "lqrlab/degrade.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "lqrlab/random.h"

namespace lqrlab {
namespace {

double MeanPower(const std::vector<double>& x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return sum / static_cast<double>(x.size());
}

// Direct form II transposed, primed with the steady state for `x0`.
void FilterInPlace(const Biquad& f, std::vector<double>& x, bool reverse) {
  if (x.empty()) return;
  const double x0 = reverse ? x.back() : x.front();
  double z2 = (f.b2 - f.a2) * x0;
  double z1 = (f.b1 - f.a1) * x0 + z2;
  auto step = [&](double& v) {
    const double in = v;
    const double out = f.b0 * in + z1;
    z1 = f.b1 * in - f.a1 * out + z2;
    z2 = f.b2 * in - f.a2 * out;
    v = out;
  };
  if (reverse) {
    std::for_each(x.rbegin(), x.rend(), step);
  } else {
    std::for_each(x.begin(), x.end(), step);
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> GenerateNoise(size_t length, NoiseKind kind, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> out(length);
  for (double& v : out) v = rng.Gaussian();
  if (kind == NoiseKind::kPink) {
    // Paul Kellet's economy pinking filter, about -3 dB/octave above 10 Hz
    // at 44.1 kHz.
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    for (double& v : out) {
      const double white = v;
      b0 = 0.99765 * b0 + white * 0.0990460;
      b1 = 0.96300 * b1 + white * 0.2965164;
      b2 = 0.57000 * b2 + white * 1.0526913;
      v = b0 + b1 + b2 + white * 0.1848;
    }
  }
  return out;
}

AudioClip AddNoiseSnr(const AudioClip& clip, const DegradationSpec& spec,
                      double* peak_gain) {
  ValidateClip(clip);
  if (peak_gain != nullptr) *peak_gain = 1.0;
  if (clip.samples.empty()) {
    throw LqrError(ErrorCode::kEmptyAudio, "cannot add noise to an empty clip");
  }
  const double signal_power = MeanPower(clip.samples);
  if (!(signal_power > 0.0)) {
    throw LqrError(ErrorCode::kZeroPowerSignal, "signal power is zero");
  }
  if (std::isnan(spec.snr_db)) {
    throw LqrError(ErrorCode::kInvalidArgument, "SNR is NaN");
  }
  if (spec.snr_db == std::numeric_limits<double>::infinity()) return clip;

  std::vector<double> noise =
      GenerateNoise(clip.size(), spec.noise_kind, spec.seed);
  const double noise_power = MeanPower(noise);
  const double scale = std::sqrt(signal_power /
                                 (noise_power * std::pow(10.0, spec.snr_db / 10.0)));
  AudioClip out = clip;
  double peak = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out.samples[i] += scale * noise[i];
    peak = std::max(peak, std::abs(out.samples[i]));
  }
  if (peak > 1.0) {
    const double gain = 1.0 / peak;
    for (double& v : out.samples) v *= gain;
    if (peak_gain != nullptr) *peak_gain = gain;
  }
  return out;
}

AudioClip PeakClip(const AudioClip& clip, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw LqrError(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1]");
  }
  AudioClip out = clip;
  for (double& v : out.samples) v = std::clamp(v, -threshold, threshold);
  return out;
}

Biquad ButterworthLowpass(double cutoff_hz, int sample_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0)) {
    throw LqrError(ErrorCode::kCutoffOutOfRange,
                   "cutoff " + FormatDouble(cutoff_hz) + " Hz outside (0, " +
                       FormatDouble(sample_rate / 2.0) + ")");
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return f;
}

AudioClip Lowpass(const AudioClip& clip, double cutoff_hz) {
  ValidateClip(clip);
  const Biquad f = ButterworthLowpass(cutoff_hz, clip.sample_rate);
  AudioClip out = clip;
  FilterInPlace(f, out.samples, /*reverse=*/false);
  FilterInPlace(f, out.samples, /*reverse=*/true);
  return out;
}

AudioClip ApplyDegradation(const AudioClip& clip, const DegradationSpec& spec,
                           double* peak_gain) {
  if (peak_gain != nullptr) *peak_gain = 1.0;
  switch (spec.kind) {
    case DegradationKind::kAdditiveNoise:
      return AddNoiseSnr(clip, spec, peak_gain);
    case DegradationKind::kPeakClip:
      return PeakClip(clip, spec.threshold);
    case DegradationKind::kLowpass:
      return Lowpass(clip, spec.cutoff_hz);
  }
  return clip;
}

std::string DegradationKindName(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::kAdditiveNoise: return "additive_noise";
    case DegradationKind::kPeakClip: return "peak_clip";
    case DegradationKind::kLowpass: return "lowpass";
  }
  return "unknown";
}

std::string NoiseKindName(NoiseKind kind) {
  return kind == NoiseKind::kPink ? "pink" : "white";
}

std::string DescribeDegradation(const DegradationSpec& spec) {
  std::string out = "kind " + DegradationKindName(spec.kind) + "\n";
  switch (spec.kind) {
    case DegradationKind::kAdditiveNoise:
      out += "snr_db " + FormatDouble(spec.snr_db) + "\n";
      out += "noise_kind " + NoiseKindName(spec.noise_kind) + "\n";
      break;
    case DegradationKind::kPeakClip:
      out += "threshold " + FormatDouble(spec.threshold) + "\n";
      break;
    case DegradationKind::kLowpass:
      out += "cutoff_hz " + FormatDouble(spec.cutoff_hz) + "\n";
      break;
  }
  out += "seed " + std::to_string(spec.seed) + "\n";
  return out;
}

}  // namespace lqrlab
