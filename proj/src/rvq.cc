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

#include "lqrlab/rvq.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <utility>

#include "lqrlab/lqr.h"
#include "lqrlab/random.h"

namespace lqrlab {
namespace {

constexpr char kModelMagic[4] = {'R', 'V', 'Q', 'M'};
constexpr uint32_t kModelVersion = 1;

// Distance with early exit once the partial sum reaches `bound`. Partial sums
// of nonnegative terms never decrease, so an abandoned candidate can never
// beat the incumbent.
double BoundedSquaredDistance(std::span<const double> a,
                              std::span<const double> b, double bound) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
    if (sum >= bound) return sum;
  }
  return sum;
}

void CheckFinite(const Matrix& m) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      throw LqrError(ErrorCode::kNonFiniteInput, "k-means input is not finite");
    }
  }
}

// k-means++ seeding: first centroid uniform, the rest drawn with probability
// proportional to the squared distance to the nearest chosen centroid.
Matrix SeedPlusPlus(const Matrix& vectors, size_t n, SplitMix64& rng) {
  const size_t m = vectors.rows();
  Matrix centroids(n, vectors.cols());
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  size_t chosen = static_cast<size_t>(rng.Below(m));
  for (size_t j = 0;; ++j) {
    std::ranges::copy(vectors.row(chosen), centroids.row(j).begin());
    if (j + 1 == n) break;
    double total = 0.0;
    for (size_t i = 0; i < m; ++i) {
      nearest[i] = std::min(nearest[i],
                            SquaredDistance(vectors.row(i), centroids.row(j)));
      total += nearest[i];
    }
    if (total <= 0.0) {
      // Every vector coincides with a chosen centroid.
      chosen = 0;
      continue;
    }
    const double target = rng.Uniform() * total;
    double cumulative = 0.0;
    size_t pick = m;
    size_t last_positive = 0;
    for (size_t i = 0; i < m; ++i) {
      if (nearest[i] <= 0.0) continue;
      last_positive = i;
      cumulative += nearest[i];
      if (cumulative > target) {
        pick = i;
        break;
      }
    }
    chosen = pick == m ? last_positive : pick;
  }
  return centroids;
}

double Assign(const Codebook& codebook, const Matrix& vectors,
              std::vector<size_t>& labels, std::vector<double>& distances) {
  double total = 0.0;
  for (size_t i = 0; i < vectors.rows(); ++i) {
    labels[i] = NearestCodeword(codebook, vectors.row(i), &distances[i]);
    total += distances[i];
  }
  return total;
}

// Centroid update. Empty clusters take the vector farthest from the centroid
// it is assigned to; each vector is used at most once.
void UpdateCentroids(const Matrix& vectors, const std::vector<size_t>& labels,
                     Codebook& codebook) {
  const size_t n = codebook.size();
  const size_t d = codebook.dim();
  Matrix sums(n, d);
  std::vector<size_t> counts(n, 0);
  for (size_t i = 0; i < vectors.rows(); ++i) {
    auto sum = sums.row(labels[i]);
    const auto v = vectors.row(i);
    for (size_t c = 0; c < d; ++c) sum[c] += v[c];
    ++counts[labels[i]];
  }
  bool any_empty = false;
  for (size_t j = 0; j < n; ++j) {
    if (counts[j] == 0) {
      any_empty = true;
      continue;
    }
    auto cw = codebook.codewords.row(j);
    const auto sum = sums.row(j);
    const double inv = 1.0 / static_cast<double>(counts[j]);
    for (size_t c = 0; c < d; ++c) cw[c] = sum[c] * inv;
  }
  if (!any_empty) return;

  std::vector<double> spread(vectors.rows());
  for (size_t i = 0; i < vectors.rows(); ++i) {
    spread[i] = SquaredDistance(vectors.row(i),
                                codebook.codewords.row(labels[i]));
  }
  for (size_t j = 0; j < n; ++j) {
    if (counts[j] != 0) continue;
    const auto far = std::ranges::max_element(spread);
    if (*far <= 0.0) break;
    const size_t i = static_cast<size_t>(far - spread.begin());
    std::ranges::copy(vectors.row(i), codebook.codewords.row(j).begin());
    spread[i] = -1.0;
  }
}

KMeansResult RunSingle(const Matrix& vectors, const KMeansOptions& options,
                       uint64_t seed) {
  SplitMix64 rng(seed);
  KMeansResult result;
  result.codebook.codewords = SeedPlusPlus(vectors, options.n_codewords, rng);
  std::vector<size_t> labels(vectors.rows());
  std::vector<double> distances(vectors.rows());
  double distortion = Assign(result.codebook, vectors, labels, distances);
  result.distortion_history.push_back(distortion);
  for (int iter = 0; iter < options.max_iters && distortion > 0.0; ++iter) {
    UpdateCentroids(vectors, labels, result.codebook);
    const double next = Assign(result.codebook, vectors, labels, distances);
    result.distortion_history.push_back(next);
    const bool converged =
        distortion - next < options.relative_tolerance * distortion;
    distortion = next;
    if (converged) break;
  }
  result.distortion = distortion;
  return result;
}

}  // namespace

size_t NearestCodeword(const Codebook& codebook, std::span<const double> v,
                       double* distance) {
  size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < codebook.size(); ++j) {
    const double d =
        BoundedSquaredDistance(v, codebook.codewords.row(j), best_dist);
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  if (distance != nullptr) *distance = best_dist;
  return best;
}

double TotalDistortion(const Codebook& codebook, const Matrix& vectors) {
  double total = 0.0;
  for (size_t i = 0; i < vectors.rows(); ++i) {
    double d;
    NearestCodeword(codebook, vectors.row(i), &d);
    total += d;
  }
  return total;
}

KMeansResult RunKMeans(const Matrix& vectors, const KMeansOptions& options) {
  if (options.n_codewords < 1 || options.max_iters < 1 ||
      options.n_restarts < 1 || vectors.cols() == 0) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "k-means needs n_codewords, max_iters, n_restarts >= 1");
  }
  if (vectors.rows() < options.n_codewords) {
    throw LqrError(ErrorCode::kTooFewVectors,
                   std::to_string(vectors.rows()) + " vectors for " +
                       std::to_string(options.n_codewords) + " codewords");
  }
  CheckFinite(vectors);

  KMeansResult best;
  for (int r = 0; r < options.n_restarts; ++r) {
    const uint64_t seed =
        r == 0 ? options.seed : DeriveSeed(options.seed, static_cast<uint64_t>(r));
    KMeansResult run = RunSingle(vectors, options, seed);
    if (r == 0 || run.distortion < best.distortion) best = std::move(run);
  }
  return best;
}

Codebook KMeans(const Matrix& vectors, size_t n_codewords, uint64_t seed,
                int max_iters) {
  KMeansOptions options;
  options.n_codewords = n_codewords;
  options.seed = seed;
  options.max_iters = max_iters;
  return RunKMeans(vectors, options).codebook;
}

void ValidateModel(const RvqModel& model) {
  if (model.stages.empty()) {
    throw LqrError(ErrorCode::kInvalidArgument, "model has no stages");
  }
  const size_t n = model.codebook_size();
  const size_t d = model.dim();
  if (n == 0 || d == 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "empty codebook");
  }
  for (const Codebook& cb : model.stages) {
    if (cb.size() != n || cb.dim() != d) {
      throw LqrError(ErrorCode::kInvalidArgument,
                     "stages disagree on codebook shape");
    }
  }
}

RvqModel TrainCodebooks(std::span<const LatentSequence> corpus,
                        const TrainOptions& options) {
  if (corpus.empty()) {
    throw LqrError(ErrorCode::kTooFewVectors, "empty training corpus");
  }
  if (options.n_stages < 1 || options.codebook_size < 1) {
    throw LqrError(ErrorCode::kInvalidArgument, "need K >= 1 and N >= 1");
  }
  if (options.zero_codeword && options.codebook_size < 2) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "zero-codeword mode needs N >= 2");
  }
  const size_t dim = corpus.front().dim();
  std::vector<Matrix> parts;
  parts.reserve(corpus.size());
  for (const LatentSequence& seq : corpus) {
    if (seq.dim() != dim) {
      throw LqrError(ErrorCode::kDimensionMismatch,
                     "corpus sequences disagree on latent dimension");
    }
    parts.push_back(seq.frames);
  }
  Matrix residual = VStack(parts);

  RvqModel model;
  model.variance_mode = options.variance_mode;
  model.zero_codeword = options.zero_codeword;
  model.trained_on = options.trained_on;

  const size_t trained = options.codebook_size - (options.zero_codeword ? 1 : 0);
  for (size_t k = 0; k < options.n_stages; ++k) {
    KMeansOptions km;
    km.n_codewords = trained;
    km.seed = DeriveSeed(options.seed, k);
    km.max_iters = options.max_iters;
    km.n_restarts = options.n_restarts;
    Codebook cb = RunKMeans(residual, km).codebook;
    Matrix codewords(options.codebook_size, dim);
    for (size_t j = 0; j < trained; ++j) {
      auto dst = codewords.row(j);
      const auto src = cb.codewords.row(j);
      for (size_t c = 0; c < dim; ++c) {
        dst[c] = static_cast<double>(static_cast<float>(src[c]));
      }
    }
    cb.codewords = std::move(codewords);

    for (size_t i = 0; i < residual.rows(); ++i) {
      auto e = residual.row(i);
      const auto q = cb.codewords.row(NearestCodeword(cb, e));
      for (size_t c = 0; c < dim; ++c) e[c] -= q[c];
    }
    model.stages.push_back(std::move(cb));
  }
  return model;
}

Matrix QuantizationTrace::StageOutput(size_t k) const {
  if (k < 1 || k > num_stages()) {
    throw LqrError(ErrorCode::kIndexOutOfRange, "stage index out of range");
  }
  Matrix q = residuals[k - 1];
  const auto& e = residuals[k].data();
  for (size_t i = 0; i < q.data().size(); ++i) q.data()[i] -= e[i];
  return q;
}

QuantizationTrace Quantize(const RvqModel& model, const LatentSequence& latents) {
  ValidateModel(model);
  ValidateLatents(latents);
  if (latents.dim() != model.dim()) {
    throw LqrError(ErrorCode::kDimensionMismatch,
                   "latent dim " + std::to_string(latents.dim()) +
                       " vs model dim " + std::to_string(model.dim()));
  }
  const size_t n_frames = latents.num_frames();
  const size_t dim = latents.dim();
  QuantizationTrace trace;
  trace.variance_mode = model.variance_mode;
  trace.residuals.reserve(model.num_stages() + 1);
  trace.residuals.push_back(latents.frames);
  for (const Codebook& cb : model.stages) {
    Matrix next = trace.residuals.back();
    std::vector<uint32_t> codes(n_frames);
    for (size_t t = 0; t < n_frames; ++t) {
      auto e = next.row(t);
      const size_t j = NearestCodeword(cb, e);
      codes[t] = static_cast<uint32_t>(j);
      const auto q = cb.codewords.row(j);
      for (size_t c = 0; c < dim; ++c) e[c] -= q[c];
    }
    trace.residuals.push_back(std::move(next));
    trace.codes.push_back(std::move(codes));
  }
  trace.stage_sigma = StageSigmas(trace.residuals, model.variance_mode);
  return trace;
}

QuantizationTrace TraceFromStageOutputs(const LatentSequence& latents,
                                        std::span<const Matrix> stage_outputs,
                                        VarianceMode mode) {
  ValidateLatents(latents);
  if (stage_outputs.empty()) {
    throw LqrError(ErrorCode::kInvalidArgument, "no stage outputs");
  }
  QuantizationTrace trace;
  trace.variance_mode = mode;
  trace.residuals.push_back(latents.frames);
  for (const Matrix& q : stage_outputs) {
    if (q.rows() != latents.num_frames() || q.cols() != latents.dim()) {
      throw LqrError(ErrorCode::kInconsistentDims,
                     "stage output shape disagrees with latents");
    }
    Matrix next = trace.residuals.back();
    for (size_t i = 0; i < next.data().size(); ++i) next.data()[i] -= q.data()[i];
    trace.residuals.push_back(std::move(next));
  }
  trace.stage_sigma = StageSigmas(trace.residuals, mode);
  return trace;
}

namespace {

void AppendU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<uint8_t> SerializeModel(const RvqModel& model) {
  ValidateModel(model);
  std::vector<uint8_t> out(kModelMagic, kModelMagic + 4);
  AppendU32(out, kModelVersion);
  AppendU32(out, static_cast<uint32_t>(model.num_stages()));
  AppendU32(out, static_cast<uint32_t>(model.dim()));
  AppendU32(out, static_cast<uint32_t>(model.codebook_size()));
  out.push_back(static_cast<uint8_t>(model.variance_mode));
  out.push_back(model.zero_codeword ? 1 : 0);
  AppendU32(out, static_cast<uint32_t>(model.trained_on.size()));
  out.insert(out.end(), model.trained_on.begin(), model.trained_on.end());
  for (const Codebook& cb : model.stages) {
    for (double v : cb.codewords.data()) {
      const float f = static_cast<float>(v);
      uint32_t raw;
      std::memcpy(&raw, &f, sizeof(raw));
      AppendU32(out, raw);
    }
  }
  return out;
}

RvqModel ParseModel(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw LqrError(ErrorCode::kTruncatedFile, "RVQM file shorter than its magic");
  }
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw LqrError(ErrorCode::kBadMagic, "not an RVQM model file");
  }
  if (bytes.size() < 26) {
    throw LqrError(ErrorCode::kTruncatedFile, "RVQM header truncated");
  }
  const uint32_t version = ReadU32(bytes.data() + 4);
  if (version != kModelVersion) {
    throw LqrError(ErrorCode::kVersionUnsupported,
                   "RVQM version " + std::to_string(version));
  }
  const uint32_t k = ReadU32(bytes.data() + 8);
  const uint32_t d = ReadU32(bytes.data() + 12);
  const uint32_t n = ReadU32(bytes.data() + 16);
  const uint8_t mode = bytes[20];
  const uint8_t zero = bytes[21];
  const uint32_t prov_len = ReadU32(bytes.data() + 22);
  if (mode > 1 || zero > 1) {
    throw LqrError(ErrorCode::kInvalidArgument, "RVQM flag byte out of range");
  }
  if (k == 0 || d == 0 || n == 0) {
    throw LqrError(ErrorCode::kInvalidArgument, "RVQM with empty shape");
  }
  size_t pos = 26;
  if (bytes.size() - pos < prov_len) {
    throw LqrError(ErrorCode::kTruncatedFile, "RVQM provenance truncated");
  }
  RvqModel model;
  model.variance_mode = static_cast<VarianceMode>(mode);
  model.zero_codeword = zero == 1;
  model.trained_on.assign(bytes.begin() + static_cast<ptrdiff_t>(pos),
                          bytes.begin() + static_cast<ptrdiff_t>(pos + prov_len));
  pos += prov_len;
  const uint64_t per_stage = static_cast<uint64_t>(n) * d;
  if ((bytes.size() - pos) / 4 < per_stage * k) {
    throw LqrError(ErrorCode::kTruncatedFile, "RVQM codewords truncated");
  }
  for (uint32_t s = 0; s < k; ++s) {
    Codebook cb;
    cb.codewords = Matrix(n, d);
    for (uint64_t j = 0; j < per_stage; ++j) {
      const uint32_t raw = ReadU32(bytes.data() + pos + 4 * j);
      float f;
      std::memcpy(&f, &raw, sizeof(f));
      cb.codewords.data()[j] = f;
    }
    pos += per_stage * 4;
    model.stages.push_back(std::move(cb));
  }
  return model;
}

void SaveModel(const RvqModel& model, const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = SerializeModel(model);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw LqrError(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

RvqModel LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LqrError(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ParseModel(bytes);
}

}  // namespace lqrlab
