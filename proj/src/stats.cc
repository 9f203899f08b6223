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

#include "lqrlab/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lqrlab {
namespace {

void CheckPaired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw LqrError(ErrorCode::kLengthMismatch,
                   std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                       " values");
  }
  if (x.size() < 3) {
    throw LqrError(ErrorCode::kTooFewPoints,
                   "correlation needs at least 3 pairs, got " +
                       std::to_string(x.size()));
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw LqrError(ErrorCode::kNonFiniteInput, "non-finite score");
    }
  }
}

}  // namespace

double Pearson(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const double n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw LqrError(ErrorCode::kDegenerateVariance,
                   "one of the sequences has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double Pearson(const PairedScores& pairs) {
  return Pearson(pairs.objective, pairs.subjective);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t m = i; m < j; ++m) ranks[order[m]] = rank;
    i = j;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  return Pearson(rx, ry);
}

double Spearman(const PairedScores& pairs) {
  return Spearman(pairs.objective, pairs.subjective);
}

SnrResult SnrBaseline(const AudioClip& reference, const AudioClip& degraded) {
  if (reference.size() != degraded.size() ||
      reference.sample_rate != degraded.sample_rate) {
    throw LqrError(ErrorCode::kLengthMismatch,
                   "reference and degraded clips differ in length or rate");
  }
  if (reference.samples.empty()) {
    throw LqrError(ErrorCode::kEmptyAudio, "empty reference");
  }
  double p_ref = 0.0, p_err = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    const double e = reference.samples[i] - degraded.samples[i];
    p_ref += reference.samples[i] * reference.samples[i];
    p_err += e * e;
  }
  SnrResult result;
  if (p_err == 0.0) {
    result.infinite = true;
    result.db = std::numeric_limits<double>::infinity();
    return result;
  }
  result.db = 10.0 * std::log10(p_ref / p_err);
  return result;
}

}  // namespace lqrlab
