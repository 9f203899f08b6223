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

#include <cmath>
#include <cstring>
#include <vector>

#include "gtest/gtest.h"
#include "lqrlab/random.h"
#include "support/temp_dir.h"

namespace lqrlab {
namespace {

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back(v >> 8);
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

// Hand-rolled WAV image with a raw data payload.
std::vector<uint8_t> MakeWav(uint16_t format, uint16_t channels, uint32_t rate,
                             uint16_t bits, const std::vector<uint8_t>& payload,
                             uint32_t declared_data_size) {
  std::vector<uint8_t> out = {'R', 'I', 'F', 'F'};
  PutU32(out, 36 + static_cast<uint32_t>(payload.size()));
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, format);
  PutU16(out, channels);
  PutU32(out, rate);
  PutU32(out, rate * channels * bits / 8);
  PutU16(out, static_cast<uint16_t>(channels * bits / 8));
  PutU16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, declared_data_size);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

TEST(LoadWavTest, Pcm16FullScaleIsScaledByTwoToFifteen) {
  std::vector<uint8_t> payload;
  PutU16(payload, 32767);
  PutU16(payload, static_cast<uint16_t>(-32768));
  const AudioClip clip = ParseWav(MakeWav(1, 1, 8000, 16, payload, 4));
  ASSERT_EQ(clip.size(), 2u);
  EXPECT_EQ(clip.samples[0], 32767.0 / 32768.0);
  EXPECT_NEAR(clip.samples[0], 0.999969, 1e-6);
  EXPECT_EQ(clip.samples[1], -1.0);
  EXPECT_EQ(clip.sample_rate, 8000);
}

TEST(LoadWavTest, StereoOppositeChannelsDownmixToSilence) {
  const std::vector<double> left(100, 0.5), right(100, -0.5);
  const std::vector<std::vector<double>> channels = {left, right};
  const AudioClip clip = ParseWav(EncodeWavPcm16(channels, 16000));
  ASSERT_EQ(clip.size(), 100u);
  for (double s : clip.samples) EXPECT_EQ(s, 0.0);
}

TEST(LoadWavTest, Pcm24SignExtension) {
  const std::vector<uint8_t> payload = {0xFF, 0xFF, 0x7F, 0x00, 0x00, 0x80,
                                        0x01, 0x00, 0x00};
  const AudioClip clip = ParseWav(MakeWav(1, 1, 48000, 24, payload, 9));
  ASSERT_EQ(clip.size(), 3u);
  EXPECT_EQ(clip.samples[0], 8388607.0 / 8388608.0);
  EXPECT_EQ(clip.samples[1], -1.0);
  EXPECT_EQ(clip.samples[2], 1.0 / 8388608.0);
}

TEST(LoadWavTest, Float32RoundTripThroughWriter) {
  testing::TempDir dir;
  AudioClip clip;
  clip.sample_rate = 24000;
  clip.samples = {0.0, 0.25, -0.5, 0.125, -1.0};
  WriteWav(dir / "x.wav", clip);
  const AudioClip back = LoadWav(dir / "x.wav");
  EXPECT_EQ(back.sample_rate, 24000);
  EXPECT_EQ(back.samples, clip.samples);
}

TEST(LoadWavTest, SkipsUnknownChunksAndHonoursPadding) {
  std::vector<uint8_t> payload;
  PutU16(payload, 16384);
  std::vector<uint8_t> wav = MakeWav(1, 1, 8000, 16, payload, 2);
  // Insert an odd-sized LIST chunk (plus pad byte) before fmt.
  const std::vector<uint8_t> list = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  wav.insert(wav.begin() + 12, list.begin(), list.end());
  const AudioClip clip = ParseWav(wav);
  ASSERT_EQ(clip.size(), 1u);
  EXPECT_EQ(clip.samples[0], 0.5);
}

TEST(LoadWavTest, DataChunkLongerThanFileIsMalformed) {
  std::vector<uint8_t> payload(8, 0);
  try {
    ParseWav(MakeWav(1, 1, 8000, 16, payload, 4096));
    FAIL() << "expected MalformedHeader";
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedHeader);
  }
}

TEST(LoadWavTest, RejectsNonRiff) {
  const std::vector<uint8_t> junk = {'R', 'I', 'F', 'X', 0, 0, 0, 0,
                                     'W', 'A', 'V', 'E'};
  try {
    ParseWav(junk);
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedHeader);
  }
}

TEST(LoadWavTest, CompressedFormatIsUnsupported) {
  std::vector<uint8_t> payload(8, 0);
  try {
    ParseWav(MakeWav(2, 1, 8000, 4, payload, 8));  // MS ADPCM
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedEncoding);
  }
  try {
    ParseWav(MakeWav(1, 1, 8000, 8, payload, 8));  // 8-bit PCM
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedEncoding);
  }
}

TEST(LoadWavTest, EmptyDataIsEmptyAudio) {
  try {
    ParseWav(MakeWav(1, 1, 8000, 16, {}, 0));
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAudio);
  }
}

TEST(LoadWavTest, MissingFileIsIoFailure) {
  try {
    LoadWav("/nonexistent/definitely/missing.wav");
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

// Downmix is linear: scaling each channel then downmixing equals downmixing
// then scaling.
TEST(LoadWavTest, DownmixCommutesWithScaling) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = 0.1 + rng.Uniform();
    std::vector<double> a(64), b(64), a_scaled(64), b_scaled(64);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = std::round((rng.Uniform() - 0.5) * 65536.0) / 32768.0 * 0.5;
      b[i] = std::round((rng.Uniform() - 0.5) * 65536.0) / 32768.0 * 0.5;
    }
    // Float32 carries the scaled values without quantization loss.
    auto float_wav = [](const std::vector<double>& l, const std::vector<double>& r) {
      std::vector<uint8_t> payload;
      for (size_t i = 0; i < l.size(); ++i) {
        for (double v : {l[i], r[i]}) {
          const float f = static_cast<float>(v);
          uint32_t raw;
          std::memcpy(&raw, &f, 4);
          PutU32(payload, raw);
        }
      }
      return MakeWav(3, 2, 8000, 32, payload, static_cast<uint32_t>(payload.size()));
    };
    const AudioClip mixed = ParseWav(float_wav(a, b));
    for (size_t i = 0; i < a.size(); ++i) {
      a_scaled[i] = static_cast<float>(a[i]) * alpha;
      b_scaled[i] = static_cast<float>(b[i]) * alpha;
    }
    for (size_t i = 0; i < a.size(); ++i) {
      const double scale_then_mix = (a_scaled[i] + b_scaled[i]) / 2.0;
      EXPECT_NEAR(mixed.samples[i] * alpha, scale_then_mix, 1e-12);
    }
  }
}

TEST(ResampleLinearTest, SameRateIsIdentity) {
  SplitMix64 rng(1);
  AudioClip clip;
  clip.sample_rate = 48000;
  for (int i = 0; i < 1000; ++i) clip.samples.push_back(rng.Uniform() - 0.5);
  const AudioClip out = ResampleLinear(clip, 48000);
  EXPECT_EQ(out.samples, clip.samples);
  EXPECT_EQ(out.sample_rate, 48000);
}

TEST(ResampleLinearTest, ConstantStaysConstant) {
  AudioClip clip;
  clip.sample_rate = 44100;
  clip.samples.assign(4410, 0.3);
  for (int target : {8000, 16000, 48000, 96000}) {
    const AudioClip out = ResampleLinear(clip, target);
    EXPECT_EQ(out.size(), static_cast<size_t>(std::llround(4410.0 * target / 44100)));
    for (double s : out.samples) ASSERT_EQ(s, 0.3);
  }
}

TEST(ResampleLinearTest, HandEvaluatedDownAndUpsampling) {
  AudioClip clip;
  clip.sample_rate = 4;
  clip.samples = {0.0, 1.0, 0.0, -1.0};
  const AudioClip down = ResampleLinear(clip, 2);
  EXPECT_EQ(down.samples, (std::vector<double>{0.0, 0.0}));
  // Positions 0, .5, 1, ..., 3.5; the last one holds the final sample.
  const AudioClip up = ResampleLinear(clip, 8);
  EXPECT_EQ(up.samples,
            (std::vector<double>{0.0, 0.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.0}));
}

TEST(ResampleLinearTest, Errors) {
  AudioClip empty;
  empty.sample_rate = 8000;
  try {
    ResampleLinear(empty, 16000);
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAudio);
  }
  AudioClip clip{{0.0}, 8000};
  EXPECT_THROW(ResampleLinear(clip, 0), LqrError);
}

TEST(FrameSignalTest, FrameCountFormula) {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(1024, 0.0);
  EXPECT_EQ(FrameSignal(clip, 1024, 256).rows(), 1u);
  clip.samples.assign(2048, 0.0);
  EXPECT_EQ(FrameSignal(clip, 1024, 256).rows(), 5u);
  clip.samples.assign(1023, 0.0);
  try {
    FrameSignal(clip, 1024, 256);
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSignalTooShort);
  }
}

TEST(FrameSignalTest, FramesAreExactSlices) {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    AudioClip clip;
    clip.sample_rate = 8000;
    const size_t len = 50 + rng.Below(500);
    for (size_t i = 0; i < len; ++i) clip.samples.push_back(rng.Uniform());
    const size_t frame = 2 + rng.Below(48);
    const size_t hop = 1 + rng.Below(30);
    const Matrix frames = FrameSignal(clip, frame, hop);
    EXPECT_EQ(frames.rows(), (len - frame) / hop + 1);
    for (size_t t = 0; t < frames.rows(); ++t) {
      for (size_t i = 0; i < frame; ++i) {
        ASSERT_EQ(frames(t, i), clip.samples[t * hop + i]);
      }
    }
  }
}

TEST(FrameSignalTest, RejectsDegenerateGeometry) {
  AudioClip clip{std::vector<double>(10, 0.0), 8000};
  EXPECT_THROW(FrameSignal(clip, 1, 1), LqrError);
  EXPECT_THROW(FrameSignal(clip, 4, 0), LqrError);
}

}  // namespace
}  // namespace lqrlab
