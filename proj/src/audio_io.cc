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

#include "lqrlab/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

namespace lqrlab {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void AppendU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void AppendU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void AppendTag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct WavFormat {
  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t block_align = 0;
  uint16_t bits = 0;
};

WavFormat ParseFmtChunk(const uint8_t* p, uint32_t size) {
  if (size < 16) {
    throw LqrError(ErrorCode::kMalformedHeader, "fmt chunk shorter than 16 bytes");
  }
  WavFormat fmt;
  fmt.format = ReadU16(p);
  fmt.channels = ReadU16(p + 2);
  fmt.sample_rate = ReadU32(p + 4);
  fmt.block_align = ReadU16(p + 12);
  fmt.bits = ReadU16(p + 14);
  if (fmt.format == kFormatExtensible) {
    if (size < 40) {
      throw LqrError(ErrorCode::kMalformedHeader,
                     "extensible fmt chunk shorter than 40 bytes");
    }
    // First two bytes of the SubFormat GUID carry the real format tag.
    fmt.format = ReadU16(p + 24);
  }
  return fmt;
}

double DecodeSample(const uint8_t* p, const WavFormat& fmt) {
  if (fmt.format == kFormatFloat) {
    float f;
    uint32_t bits = ReadU32(p);
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }
  if (fmt.bits == 16) {
    return static_cast<int16_t>(ReadU16(p)) / 32768.0;
  }
  // 24-bit signed little-endian, sign-extended through the top byte.
  int32_t v = static_cast<int32_t>(static_cast<uint32_t>(p[0]) << 8 |
                                   static_cast<uint32_t>(p[1]) << 16 |
                                   static_cast<uint32_t>(p[2]) << 24) >>
              8;
  return v / 8388608.0;
}

}  // namespace

void ValidateClip(const AudioClip& clip) {
  if (clip.sample_rate <= 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "sample rate must be positive");
  }
  for (double s : clip.samples) {
    if (!std::isfinite(s)) {
      throw LqrError(ErrorCode::kNonFiniteInput, "clip contains non-finite samples");
    }
  }
}

AudioClip ParseWav(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw LqrError(ErrorCode::kMalformedHeader, "not a RIFF/WAVE container");
  }

  std::optional<WavFormat> fmt;
  std::optional<std::span<const uint8_t>> data;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    if (size > bytes.size() - pos - 8) {
      throw LqrError(ErrorCode::kMalformedHeader,
                     "chunk '" + std::string(chunk, chunk + 4) +
                         "' runs past the end of the file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      fmt = ParseFmtChunk(chunk + 8, size);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.subspan(pos + 8, size);
    }
    pos += 8 + size + (size & 1);
  }
  if (!fmt || !data) {
    throw LqrError(ErrorCode::kMalformedHeader, "missing fmt or data chunk");
  }

  const bool supported =
      (fmt->format == kFormatPcm && (fmt->bits == 16 || fmt->bits == 24)) ||
      (fmt->format == kFormatFloat && fmt->bits == 32);
  if (!supported) {
    throw LqrError(ErrorCode::kUnsupportedEncoding,
                   "format tag " + std::to_string(fmt->format) + " with " +
                       std::to_string(fmt->bits) + " bits");
  }
  if (fmt->channels == 0 || fmt->sample_rate == 0) {
    throw LqrError(ErrorCode::kMalformedHeader, "zero channels or sample rate");
  }
  const size_t bytes_per_sample = fmt->bits / 8;
  const size_t frame_bytes = bytes_per_sample * fmt->channels;
  if (fmt->block_align != 0 && fmt->block_align != frame_bytes) {
    throw LqrError(ErrorCode::kMalformedHeader, "block align disagrees with format");
  }
  const size_t n_frames = data->size() / frame_bytes;
  if (n_frames == 0) {
    throw LqrError(ErrorCode::kEmptyAudio, "data chunk holds no samples");
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.samples.resize(n_frames);
  const double inv_channels = 1.0 / fmt->channels;
  for (size_t i = 0; i < n_frames; ++i) {
    const uint8_t* frame = data->data() + i * frame_bytes;
    double sum = 0.0;
    for (size_t c = 0; c < fmt->channels; ++c) {
      sum += DecodeSample(frame + c * bytes_per_sample, *fmt);
    }
    clip.samples[i] = fmt->channels == 1 ? sum : sum * inv_channels;
  }
  ValidateClip(clip);
  return clip;
}

AudioClip LoadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LqrError(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ParseWav(bytes);
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  ValidateClip(clip);
  const uint32_t data_bytes = static_cast<uint32_t>(clip.size() * 4);
  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  AppendTag(out, "RIFF");
  AppendU32(out, 36 + data_bytes);
  AppendTag(out, "WAVE");
  AppendTag(out, "fmt ");
  AppendU32(out, 16);
  AppendU16(out, kFormatFloat);
  AppendU16(out, 1);
  AppendU32(out, static_cast<uint32_t>(clip.sample_rate));
  AppendU32(out, static_cast<uint32_t>(clip.sample_rate) * 4);
  AppendU16(out, 4);
  AppendU16(out, 32);
  AppendTag(out, "data");
  AppendU32(out, data_bytes);
  for (double s : clip.samples) {
    const float f = static_cast<float>(s);
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    AppendU32(out, bits);
  }
  std::ofstream file(path, std::ios::binary);
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) {
    throw LqrError(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

std::vector<uint8_t> EncodeWavPcm16(std::span<const std::vector<double>> channels,
                                    int sample_rate) {
  const size_t n_channels = channels.size();
  const size_t n_frames = n_channels ? channels.front().size() : 0;
  const uint32_t data_bytes = static_cast<uint32_t>(n_frames * n_channels * 2);
  std::vector<uint8_t> out;
  AppendTag(out, "RIFF");
  AppendU32(out, 36 + data_bytes);
  AppendTag(out, "WAVE");
  AppendTag(out, "fmt ");
  AppendU32(out, 16);
  AppendU16(out, kFormatPcm);
  AppendU16(out, static_cast<uint16_t>(n_channels));
  AppendU32(out, static_cast<uint32_t>(sample_rate));
  AppendU32(out, static_cast<uint32_t>(sample_rate * n_channels * 2));
  AppendU16(out, static_cast<uint16_t>(n_channels * 2));
  AppendU16(out, 16);
  AppendTag(out, "data");
  AppendU32(out, data_bytes);
  for (size_t i = 0; i < n_frames; ++i) {
    for (const auto& ch : channels) {
      const double scaled = std::round(std::clamp(ch[i], -1.0, 1.0) * 32768.0);
      AppendU16(out, static_cast<uint16_t>(static_cast<int16_t>(
                         std::clamp(scaled, -32768.0, 32767.0))));
    }
  }
  return out;
}

AudioClip ResampleLinear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "target rate must be positive");
  }
  if (clip.samples.empty()) {
    throw LqrError(ErrorCode::kEmptyAudio, "cannot resample an empty clip");
  }
  ValidateClip(clip);
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const size_t out_len = static_cast<size_t>(std::llround(
      static_cast<double>(clip.size()) * target_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const size_t last = clip.size() - 1;
  for (size_t j = 0; j < out_len; ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const size_t i0 = std::min(static_cast<size_t>(pos), last);
    const size_t i1 = std::min(i0 + 1, last);
    const double frac = std::min(pos - static_cast<double>(i0), 1.0);
    const double a = clip.samples[i0];
    const double b = clip.samples[i1];
    out.samples[j] = a == b ? a : a + frac * (b - a);
  }
  return out;
}

size_t FrameCount(size_t length, size_t frame_len, size_t hop) {
  if (frame_len == 0 || hop == 0 || length < frame_len) return 0;
  return (length - frame_len) / hop + 1;
}

Matrix FrameSignal(const AudioClip& clip, size_t frame_len, size_t hop) {
  if (frame_len < 2 || hop < 1) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "frame length must be >= 2 and hop >= 1");
  }
  const size_t n_frames = FrameCount(clip.size(), frame_len, hop);
  if (n_frames == 0) {
    throw LqrError(ErrorCode::kSignalTooShort,
                   std::to_string(clip.size()) + " samples < frame length " +
                       std::to_string(frame_len));
  }
  Matrix frames(n_frames, frame_len);
  for (size_t t = 0; t < n_frames; ++t) {
    std::copy_n(clip.samples.begin() + static_cast<ptrdiff_t>(t * hop),
                frame_len, frames.row(t).begin());
  }
  return frames;
}

}  // namespace lqrlab
