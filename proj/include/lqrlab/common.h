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

#ifndef LQRLAB_COMMON_H_
#define LQRLAB_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lqrlab {

enum class ErrorCode {
  kMalformedHeader,
  kUnsupportedEncoding,
  kEmptyAudio,
  kSignalTooShort,
  kSampleRateMismatch,
  kInvalidArgument,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedTensor,
  kTruncatedFile,
  kInconsistentDims,
  kTooFewVectors,
  kNonFiniteInput,
  kDimensionMismatch,
  kDimensionTooSmall,
  kIndexOutOfRange,
  kZeroPowerSignal,
  kCutoffOutOfRange,
  kDegenerateVariance,
  kLengthMismatch,
  kTooFewPoints,
  kMissingPathColumn,
  kBadRow,
  kEmptyManifest,
  kIoFailure,
};

std::string_view ErrorCodeName(ErrorCode code);

// How the per-frame spread of a latent or residual vector is measured:
// population variance across dimensions, or mean of squared components.
enum class VarianceMode : uint8_t { kVariance = 0, kPower = 1 };

std::string_view VarianceModeName(VarianceMode mode);

// All library failures are reported through this exception type; `code()`
// identifies the failure class and `what()` carries "<Name>: <detail>".
class LqrError : public std::runtime_error {
 public:
  LqrError(ErrorCode code, const std::string& detail);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Dense row-major matrix of doubles. Rows are frames (or codewords), columns
// are dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<double> row(size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Stacks the rows of several matrices that share a column count.
Matrix VStack(std::span<const Matrix> parts);

double SquaredDistance(std::span<const double> a, std::span<const double> b);

}  // namespace lqrlab

#endif  // LQRLAB_COMMON_H_
