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

#include "lqrlab/common.h"

#include <string>
#include <utility>

namespace lqrlab {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedTensor: return "TruncatedTensor";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kInconsistentDims: return "InconsistentDims";
    case ErrorCode::kTooFewVectors: return "TooFewVectors";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kZeroPowerSignal: return "ZeroPowerSignal";
    case ErrorCode::kCutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kMissingPathColumn: return "MissingPathColumn";
    case ErrorCode::kBadRow: return "BadRow";
    case ErrorCode::kEmptyManifest: return "EmptyManifest";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

std::string_view VarianceModeName(VarianceMode mode) {
  return mode == VarianceMode::kPower ? "power" : "variance";
}

LqrError::LqrError(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + detail),
      code_(code) {}

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw LqrError(ErrorCode::kInvalidArgument,
                   "matrix data size does not match shape");
  }
}

Matrix VStack(std::span<const Matrix> parts) {
  size_t rows = 0;
  size_t cols = parts.empty() ? 0 : parts.front().cols();
  for (const Matrix& m : parts) {
    if (m.cols() != cols) {
      throw LqrError(ErrorCode::kDimensionMismatch,
                     "cannot stack matrices with different column counts");
    }
    rows += m.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Matrix& m : parts) {
    data.insert(data.end(), m.data().begin(), m.data().end());
  }
  return Matrix(rows, cols, std::move(data));
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace lqrlab
