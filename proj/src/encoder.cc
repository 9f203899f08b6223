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

#include "lqrlab/encoder.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <string>

namespace lqrlab {
namespace {

constexpr char kLtntMagic[4] = {'L', 'T', 'N', 'T'};
constexpr uint32_t kLtntVersion = 1;
constexpr size_t kLtntHeaderBytes = 24;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& FftwPlannerMutex() {
  static std::mutex mu;
  return mu;
}

// Owns the buffers and plan for a real-to-complex transform of one length.
class RealFft {
 public:
  explicit RealFft(size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(FftwPlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }

  // Writes |X_k|^2 for k = 0..n/2.
  void PowerSpectrum(std::span<double> power) {
    fftw_execute(plan_);
    for (size_t k = 0; k < n_ / 2 + 1; ++k) {
      power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

void AppendU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void ValidateEncoderConfig(const EncoderConfig& cfg) {
  if (cfg.n_bands < 2) {
    throw LqrError(ErrorCode::kInvalidArgument, "n_bands must be >= 2");
  }
  if (cfg.frame_len < 2 * cfg.n_bands) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "frame_len must be >= 2 * n_bands");
  }
  if (cfg.hop == 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "hop must be >= 1");
  }
  if (cfg.sample_rate <= 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "sample_rate must be positive");
  }
  if (!(cfg.log_floor > 0.0) || !std::isfinite(cfg.log_floor)) {
    throw LqrError(ErrorCode::kInvalidArgument, "log_floor must be positive");
  }
}

void ValidateLatents(const LatentSequence& latents) {
  if (latents.frames.rows() == 0 || latents.frames.cols() == 0) {
    throw LqrError(ErrorCode::kInconsistentDims, "latent sequence is empty");
  }
  for (double v : latents.frames.data()) {
    if (!std::isfinite(v)) {
      throw LqrError(ErrorCode::kNonFiniteInput, "latents contain non-finite values");
    }
  }
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> HannWindow(size_t length) {
  std::vector<double> w(length);
  for (size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  }
  return w;
}

MelFilterbank::MelFilterbank(size_t n_bands, size_t frame_len, int sample_rate)
    : n_bands_(n_bands),
      n_bins_(frame_len / 2 + 1),
      weights_(n_bands, frame_len / 2 + 1),
      support_(n_bands, {0, 0}) {
  const double nyquist = sample_rate / 2.0;
  const double mel_max = HzToMel(nyquist);
  edges_hz_.resize(n_bands + 2);
  for (size_t i = 0; i < n_bands + 2; ++i) {
    edges_hz_[i] = MelToHz(mel_max * static_cast<double>(i) /
                           static_cast<double>(n_bands + 1));
  }
  edges_hz_.front() = 0.0;
  edges_hz_.back() = nyquist;

  const double bin_hz = static_cast<double>(sample_rate) /
                        static_cast<double>(frame_len);
  for (size_t b = 0; b < n_bands; ++b) {
    const double lo = edges_hz_[b];
    const double center = edges_hz_[b + 1];
    const double hi = edges_hz_[b + 2];
    size_t first = n_bins_;
    size_t last = 0;
    for (size_t k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f >= lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f >= center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      if (w > 0.0) {
        weights_(b, k) = w;
        first = std::min(first, k);
        last = k + 1;
      }
    }
    support_[b] = first < last ? std::make_pair(first, last)
                               : std::make_pair<size_t, size_t>(0, 0);
  }
}

void MelFilterbank::Apply(std::span<const double> power,
                          std::span<double> bands) const {
  for (size_t b = 0; b < n_bands_; ++b) {
    const auto row = weights_.row(b);
    double e = 0.0;
    for (size_t k = support_[b].first; k < support_[b].second; ++k) {
      e += row[k] * power[k];
    }
    bands[b] = e;
  }
}

LatentSequence EncodeSpectral(const AudioClip& clip, const EncoderConfig& cfg) {
  ValidateEncoderConfig(cfg);
  ValidateClip(clip);
  if (clip.sample_rate != cfg.sample_rate) {
    throw LqrError(ErrorCode::kSampleRateMismatch,
                   "clip at " + std::to_string(clip.sample_rate) +
                       " Hz, encoder expects " + std::to_string(cfg.sample_rate));
  }
  const size_t n_frames = FrameCount(clip.size(), cfg.frame_len, cfg.hop);
  if (n_frames == 0) {
    throw LqrError(ErrorCode::kSignalTooShort,
                   std::to_string(clip.size()) + " samples < frame length " +
                       std::to_string(cfg.frame_len));
  }

  const std::vector<double> window = HannWindow(cfg.frame_len);
  const MelFilterbank filterbank(cfg.n_bands, cfg.frame_len, cfg.sample_rate);
  RealFft fft(cfg.frame_len);
  std::vector<double> power(filterbank.n_bins());
  std::vector<double> bands(cfg.n_bands);

  LatentSequence out;
  out.frame_rate = static_cast<double>(cfg.sample_rate) /
                   static_cast<double>(cfg.hop);
  out.frames = Matrix(n_frames, cfg.n_bands);
  for (size_t t = 0; t < n_frames; ++t) {
    std::span<double> in = fft.input();
    const double* src = clip.samples.data() + t * cfg.hop;
    for (size_t i = 0; i < cfg.frame_len; ++i) in[i] = src[i] * window[i];
    fft.PowerSpectrum(power);
    filterbank.Apply(power, bands);
    auto row = out.frames.row(t);
    for (size_t b = 0; b < cfg.n_bands; ++b) {
      row[b] = std::log(bands[b] + cfg.log_floor);
    }
  }
  return out;
}

LatentBundle ParseLtnt(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kLtntMagic, 4) != 0) {
    throw LqrError(ErrorCode::kBadMagic, "not an LTNT container");
  }
  if (bytes.size() < kLtntHeaderBytes) {
    throw LqrError(ErrorCode::kTruncatedTensor, "LTNT header truncated");
  }
  const uint32_t version = ReadU32(bytes.data() + 4);
  if (version != kLtntVersion) {
    throw LqrError(ErrorCode::kVersionUnsupported,
                   "LTNT version " + std::to_string(version));
  }
  const uint32_t count = ReadU32(bytes.data() + 8);
  const uint32_t dim = ReadU32(bytes.data() + 12);
  LatentBundle bundle;
  bundle.sample_rate = ReadU32(bytes.data() + 16);
  bundle.hop = ReadU32(bytes.data() + 20);
  if (dim == 0) {
    throw LqrError(ErrorCode::kInconsistentDims, "LTNT dim is zero");
  }

  bool have_latent = false;
  size_t pos = kLtntHeaderBytes;
  for (uint32_t i = 0; i < count; ++i) {
    if (bytes.size() - pos < 5) {
      throw LqrError(ErrorCode::kTruncatedTensor,
                     "tensor record " + std::to_string(i) + " header truncated");
    }
    const uint8_t role = bytes[pos];
    const uint32_t frames = ReadU32(bytes.data() + pos + 1);
    pos += 5;
    const uint64_t n_values = static_cast<uint64_t>(frames) * dim;
    if ((bytes.size() - pos) / 4 < n_values) {
      throw LqrError(ErrorCode::kTruncatedTensor,
                     "tensor record " + std::to_string(i) + " payload truncated");
    }
    Matrix m(frames, dim);
    for (uint64_t j = 0; j < n_values; ++j) {
      const uint32_t raw = ReadU32(bytes.data() + pos + 4 * j);
      float f;
      std::memcpy(&f, &raw, sizeof(f));
      m.data()[j] = f;
    }
    pos += n_values * 4;

    if (role == 0) {
      if (have_latent) {
        throw LqrError(ErrorCode::kInconsistentDims,
                       "more than one role-0 tensor");
      }
      have_latent = true;
      bundle.latents.frames = std::move(m);
    } else if (role == 1) {
      bundle.stage_outputs.push_back(std::move(m));
    } else {
      throw LqrError(ErrorCode::kInconsistentDims,
                     "unknown tensor role " + std::to_string(role));
    }
  }
  if (!have_latent) {
    throw LqrError(ErrorCode::kInconsistentDims, "no role-0 latent tensor");
  }
  const size_t t = bundle.latents.frames.rows();
  if (t == 0) {
    throw LqrError(ErrorCode::kInconsistentDims, "latent tensor has no frames");
  }
  for (const Matrix& q : bundle.stage_outputs) {
    if (q.rows() != t) {
      throw LqrError(ErrorCode::kInconsistentDims,
                     "stage tensor has T=" + std::to_string(q.rows()) +
                         ", latent has T=" + std::to_string(t));
    }
  }
  bundle.latents.frame_rate =
      bundle.hop > 0 ? static_cast<double>(bundle.sample_rate) / bundle.hop
                     : 0.0;
  ValidateLatents(bundle.latents);
  return bundle;
}

LatentBundle LoadLatents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LqrError(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ParseLtnt(bytes);
}

std::vector<uint8_t> SerializeLtnt(const LatentBundle& bundle) {
  const size_t dim = bundle.latents.dim();
  for (const Matrix& q : bundle.stage_outputs) {
    if (q.cols() != dim || q.rows() != bundle.latents.num_frames()) {
      throw LqrError(ErrorCode::kInconsistentDims,
                     "stage tensor shape disagrees with latents");
    }
  }
  std::vector<uint8_t> out(kLtntMagic, kLtntMagic + 4);
  AppendU32(out, kLtntVersion);
  AppendU32(out, static_cast<uint32_t>(1 + bundle.stage_outputs.size()));
  AppendU32(out, static_cast<uint32_t>(dim));
  AppendU32(out, bundle.sample_rate);
  AppendU32(out, bundle.hop);
  auto append_tensor = [&out](uint8_t role, const Matrix& m) {
    out.push_back(role);
    AppendU32(out, static_cast<uint32_t>(m.rows()));
    for (double v : m.data()) {
      const float f = static_cast<float>(v);
      uint32_t raw;
      std::memcpy(&raw, &f, sizeof(raw));
      AppendU32(out, raw);
    }
  };
  append_tensor(0, bundle.latents.frames);
  for (const Matrix& q : bundle.stage_outputs) append_tensor(1, q);
  return out;
}

void WriteLtnt(const std::filesystem::path& path, const LatentBundle& bundle) {
  const std::vector<uint8_t> bytes = SerializeLtnt(bundle);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw LqrError(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

}  // namespace lqrlab
