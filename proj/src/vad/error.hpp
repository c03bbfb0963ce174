// Copyright 2026 The vadclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VADCLIP_VAD_ERROR_HPP_
#define VADCLIP_VAD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace vad {

// Every failure raised by the core carries one of these kinds. The C API and
// the CLI map them onto a coarse category (and from there to exit codes).
enum class ErrorKind {
  kMissingFile,
  kMalformedRow,
  kDuplicateKey,
  kMissingFrameImage,
  kSinglePersonDataset,
  kInsufficientClassSamples,
  kWrongInputSize,
  kBackendFailure,
  kEmptyCaption,
  kTokenLimitExceeded,
  kZeroNormVector,
  kCorruptCacheEntry,
  kBackendNotTrainable,
  kVlmUnavailable,
  kUnparseableYesNo,
  kTooFewCaptions,
  kShapeMismatch,
  kDimensionMismatch,
  kUninitializedParams,
  kNonFiniteLogit,
  kInsufficientData,
  kDivergedLoss,
  kCorruptCheckpoint,
  kEmptyPredictions,
  kPersonNamespaceCollision,
  kConfigError,
  kInvalidArgument,
  kIoError,
  kInternal,
};

enum class ErrorCategory { kConfig, kData, kBackend, kInternal };

std::string_view ErrorKindName(ErrorKind kind);
std::string_view ErrorCategoryName(ErrorCategory category);
ErrorCategory CategoryOf(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return CategoryOf(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace vad

#endif  // VADCLIP_VAD_ERROR_HPP_
