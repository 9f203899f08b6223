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

#ifndef LQRLAB_AUDIO_IO_H_
#define LQRLAB_AUDIO_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lqrlab/common.h"

namespace lqrlab {

// Mono sample buffer. Amplitudes are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws InvalidArgument unless sample_rate > 0 and every sample is finite.
void ValidateClip(const AudioClip& clip);

// Reads a RIFF/WAVE file holding PCM16, PCM24 or IEEE float32 samples.
// Multichannel input is downmixed by the arithmetic mean of the channels;
// integer samples are scaled by 1/2^(bits-1).
AudioClip LoadWav(const std::filesystem::path& path);

// Parses an in-memory WAV image; LoadWav is a thin wrapper around this.
AudioClip ParseWav(std::span<const uint8_t> bytes);

// Writes a mono IEEE float32 WAV file.
void WriteWav(const std::filesystem::path& path, const AudioClip& clip);

// Builds an interleaved PCM16 WAV image from equal-length channels.
std::vector<uint8_t> EncodeWavPcm16(std::span<const std::vector<double>> channels,
                                    int sample_rate);

// Linear-interpolation resampler. Output length is
// round(input_length * target / source); output sample j reads the input at
// position j * source / target, holding the last sample past the end.
AudioClip ResampleLinear(const AudioClip& clip, int target_rate);

// Number of full frames produced by FrameSignal for the given geometry, or 0
// when the signal is shorter than one frame.
size_t FrameCount(size_t length, size_t frame_len, size_t hop);

// Slices the clip into T = floor((len - frame_len) / hop) + 1 frames without
// padding; frame t covers samples [t * hop, t * hop + frame_len).
Matrix FrameSignal(const AudioClip& clip, size_t frame_len, size_t hop);

}  // namespace lqrlab

#endif  // LQRLAB_AUDIO_IO_H_
