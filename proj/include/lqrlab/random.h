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

#ifndef LQRLAB_RANDOM_H_
#define LQRLAB_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lqrlab {

// SplitMix64: a Weyl-sequence counter pushed through a 64-bit finalizer.
// Output i depends only on (seed, i), so streams are reproducible on any
// platform. All randomness in the library is drawn from this generator.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Uses the high bits; bias is below 2^-40 for
  // any n that fits a frame count.
  uint64_t Below(uint64_t n) {
    return static_cast<uint64_t>(Uniform() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller. Both uniforms are drawn per call; the
  // second output of the pair is discarded so that sample i depends only on
  // draws 2i and 2i+1.
  double Gaussian() {
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  uint64_t state_;
};

// Derives an independent child seed, e.g. one per training stage or restart.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  SplitMix64 rng(seed ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
  return rng.Next();
}

}  // namespace lqrlab

#endif  // LQRLAB_RANDOM_H_
