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

#ifndef LQRLAB_ENCODER_H_
#define LQRLAB_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "lqrlab/audio_io.h"
#include "lqrlab/common.h"

namespace lqrlab {

struct EncoderConfig {
  size_t frame_len = 1024;
  size_t hop = 256;
  size_t n_bands = 32;
  int sample_rate = 16000;
  double log_floor = 1e-10;
};

// Throws InvalidArgument when n_bands < 2, frame_len < 2 * n_bands, hop == 0,
// sample_rate <= 0 or log_floor <= 0.
void ValidateEncoderConfig(const EncoderConfig& cfg);

// T x D matrix of latent frames.
struct LatentSequence {
  Matrix frames;
  double frame_rate = 0.0;

  size_t num_frames() const { return frames.rows(); }
  size_t dim() const { return frames.cols(); }
};

// Throws InconsistentDims for an empty sequence and NonFiniteInput for any
// non-finite entry.
void ValidateLatents(const LatentSequence& latents);

// Mel-spaced triangular filterbank. Band b rises from edge b to edge b+1 and
// falls to edge b+2, where the n_bands + 2 edges are equally spaced on the
// mel scale over [0, sample_rate / 2]. Each band is half-open: a bin at
// frequency f contributes to band b iff lower <= f < upper.
class MelFilterbank {
 public:
  MelFilterbank(size_t n_bands, size_t frame_len, int sample_rate);

  size_t n_bands() const { return n_bands_; }
  size_t n_bins() const { return n_bins_; }
  // Band edges in Hz, n_bands + 2 of them.
  const std::vector<double>& edges_hz() const { return edges_hz_; }
  double center_hz(size_t band) const { return edges_hz_[band + 1]; }
  double weight(size_t band, size_t bin) const {
    return weights_(band, bin);
  }

  // Accumulates per-band energy from a one-sided power spectrum.
  void Apply(std::span<const double> power, std::span<double> bands) const;

 private:
  size_t n_bands_;
  size_t n_bins_;
  std::vector<double> edges_hz_;
  Matrix weights_;  // n_bands x n_bins
  // Nonzero bin range per band, [first, last).
  std::vector<std::pair<size_t, size_t>> support_;
};

double HzToMel(double hz);
double MelToHz(double mel);

// Periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / length).
std::vector<double> HannWindow(size_t length);

// Deterministic log-mel encoder: Hann window, |DFT|^2, mel band energies,
// log(energy + log_floor). The number of frames equals
// FrameCount(clip.size(), frame_len, hop).
LatentSequence EncodeSpectral(const AudioClip& clip, const EncoderConfig& cfg);

// Latents plus the per-stage quantized outputs q_1..q_K produced by an
// external codec, as stored in an LTNT container.
struct LatentBundle {
  LatentSequence latents;
  std::vector<Matrix> stage_outputs;
  uint32_t sample_rate = 0;
  uint32_t hop = 0;
};

// LTNT container, little-endian:
//   "LTNT" | u32 version=1 | u32 tensor_count | u32 dim | u32 sample_rate |
//   u32 hop | tensor_count x (u8 role | u32 T | T*dim float32)
// Role 0 is the latent x (exactly one), role 1 are stage outputs in order.
LatentBundle ParseLtnt(std::span<const uint8_t> bytes);
LatentBundle LoadLatents(const std::filesystem::path& path);

std::vector<uint8_t> SerializeLtnt(const LatentBundle& bundle);
void WriteLtnt(const std::filesystem::path& path, const LatentBundle& bundle);

}  // namespace lqrlab

#endif  // LQRLAB_ENCODER_H_
