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

#ifndef LQRLAB_RVQ_H_
#define LQRLAB_RVQ_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lqrlab/common.h"
#include "lqrlab/encoder.h"

namespace lqrlab {

// N x D matrix of codewords.
struct Codebook {
  Matrix codewords;

  size_t size() const { return codewords.rows(); }
  size_t dim() const { return codewords.cols(); }
};

// Index of the codeword nearest to `v` in squared Euclidean distance; ties go
// to the lowest index. If `distance` is non-null it receives the distance.
size_t NearestCodeword(const Codebook& codebook, std::span<const double> v,
                       double* distance = nullptr);

// Sum over rows of the squared distance to the nearest codeword.
double TotalDistortion(const Codebook& codebook, const Matrix& vectors);

struct KMeansOptions {
  size_t n_codewords = 1;
  uint64_t seed = 0;
  int max_iters = 100;
  // Independent k-means++ initializations; the lowest-distortion run wins.
  int n_restarts = 1;
  // Stop once an iteration lowers the distortion by less than this fraction.
  double relative_tolerance = 1e-10;
};

struct KMeansResult {
  Codebook codebook;
  double distortion = 0.0;
  // Distortion after the initial assignment and after every Lloyd iteration
  // of the winning restart.
  std::vector<double> distortion_history;
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded with
// the vector farthest from its assigned centroid.
// Throws TooFewVectors (rows < n_codewords), NonFiniteInput, InvalidArgument.
KMeansResult RunKMeans(const Matrix& vectors, const KMeansOptions& options);

Codebook KMeans(const Matrix& vectors, size_t n_codewords, uint64_t seed,
                int max_iters);

struct RvqModel {
  std::vector<Codebook> stages;
  VarianceMode variance_mode = VarianceMode::kVariance;
  // When set, the last codeword of every stage is the zero vector, so no
  // stage can increase a frame's residual norm.
  bool zero_codeword = false;
  std::string trained_on;

  size_t num_stages() const { return stages.size(); }
  size_t dim() const { return stages.empty() ? 0 : stages.front().dim(); }
  size_t codebook_size() const {
    return stages.empty() ? 0 : stages.front().size();
  }
};

// Throws InvalidArgument unless K >= 1 and all stages share N and D.
void ValidateModel(const RvqModel& model);

struct TrainOptions {
  size_t n_stages = 8;
  size_t codebook_size = 256;
  uint64_t seed = 0;
  int max_iters = 50;
  int n_restarts = 1;
  VarianceMode variance_mode = VarianceMode::kVariance;
  bool zero_codeword = false;
  std::string trained_on;
};

// Residual k-means: stage 1 clusters every frame of the corpus, stage k
// clusters the residuals left by stages 1..k-1. Codewords are rounded to
// float32 so a saved model reproduces the in-memory one exactly.
RvqModel TrainCodebooks(std::span<const LatentSequence> corpus,
                        const TrainOptions& options);

struct QuantizationTrace {
  // K + 1 matrices of shape T x D; residuals[0] is the input x.
  std::vector<Matrix> residuals;
  // K rows of T code indices. Empty when the trace was built from stage
  // outputs rather than by searching a model.
  std::vector<std::vector<uint32_t>> codes;
  // Averaged per-frame sigma of each residual, K + 1 entries.
  std::vector<double> stage_sigma;
  VarianceMode variance_mode = VarianceMode::kVariance;

  size_t num_stages() const {
    return residuals.empty() ? 0 : residuals.size() - 1;
  }
  size_t num_frames() const {
    return residuals.empty() ? 0 : residuals.front().rows();
  }
  // q_k = e_{k-1} - e_k for 1 <= k <= K.
  Matrix StageOutput(size_t k) const;
};

// Runs the cascade e_k = e_{k-1} - q_k with q_k the nearest codeword of stage
// k to e_{k-1}. Throws DimensionMismatch when the latent dimension differs.
QuantizationTrace Quantize(const RvqModel& model, const LatentSequence& latents);

// Builds a trace from externally quantized stage outputs q_1..q_K.
QuantizationTrace TraceFromStageOutputs(const LatentSequence& latents,
                                        std::span<const Matrix> stage_outputs,
                                        VarianceMode mode);

// RVQM file, little-endian:
//   "RVQM" | u32 version=1 | u32 K | u32 D | u32 N | u8 variance_mode |
//   u8 zero_codeword | u32 provenance_len | provenance bytes |
//   K*N*D float32 (stage-major, then codeword, then dimension)
std::vector<uint8_t> SerializeModel(const RvqModel& model);
RvqModel ParseModel(std::span<const uint8_t> bytes);
void SaveModel(const RvqModel& model, const std::filesystem::path& path);
RvqModel LoadModel(const std::filesystem::path& path);

}  // namespace lqrlab

#endif  // LQRLAB_RVQ_H_
