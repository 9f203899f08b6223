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

#ifndef LQRLAB_STATS_H_
#define LQRLAB_STATS_H_

#include <span>
#include <vector>

#include "lqrlab/audio_io.h"

namespace lqrlab {

// Objective metric values paired with subjective scores, same length.
struct PairedScores {
  std::vector<double> objective;
  std::vector<double> subjective;
};

// Sample Pearson correlation, clamped to [-1, 1]. Throws TooFewPoints (n < 3),
// LengthMismatch, NonFiniteInput, DegenerateVariance.
double Pearson(std::span<const double> x, std::span<const double> y);
double Pearson(const PairedScores& pairs);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> AverageRanks(std::span<const double> values);

// Pearson correlation of average ranks.
double Spearman(std::span<const double> x, std::span<const double> y);
double Spearman(const PairedScores& pairs);

struct SnrResult {
  double db = 0.0;
  // Set when the signals are identical; db is then +inf.
  bool infinite = false;
};

// 10 log10(P_ref / P_(ref - deg)). Throws LengthMismatch when lengths or
// sample rates differ.
SnrResult SnrBaseline(const AudioClip& reference, const AudioClip& degraded);

}  // namespace lqrlab

#endif  // LQRLAB_STATS_H_
