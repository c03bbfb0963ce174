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

#include "vad/error.hpp"

namespace vad {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kMalformedRow: return "MalformedRow";
    case ErrorKind::kDuplicateKey: return "DuplicateKey";
    case ErrorKind::kMissingFrameImage: return "MissingFrameImage";
    case ErrorKind::kSinglePersonDataset: return "SinglePersonDataset";
    case ErrorKind::kInsufficientClassSamples: return "InsufficientClassSamples";
    case ErrorKind::kWrongInputSize: return "WrongInputSize";
    case ErrorKind::kBackendFailure: return "BackendFailure";
    case ErrorKind::kEmptyCaption: return "EmptyCaption";
    case ErrorKind::kTokenLimitExceeded: return "TokenLimitExceeded";
    case ErrorKind::kZeroNormVector: return "ZeroNormVector";
    case ErrorKind::kCorruptCacheEntry: return "CorruptCacheEntry";
    case ErrorKind::kBackendNotTrainable: return "BackendNotTrainable";
    case ErrorKind::kVlmUnavailable: return "VlmUnavailable";
    case ErrorKind::kUnparseableYesNo: return "UnparseableYesNo";
    case ErrorKind::kTooFewCaptions: return "TooFewCaptions";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kUninitializedParams: return "UninitializedParams";
    case ErrorKind::kNonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kDivergedLoss: return "DivergedLoss";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::kEmptyPredictions: return "EmptyPredictions";
    case ErrorKind::kPersonNamespaceCollision: return "PersonNamespaceCollision";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kInternal: return "Internal";
  }
  return "Internal";
}

std::string_view ErrorCategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return "ConfigError";
    case ErrorCategory::kData: return "DataError";
    case ErrorCategory::kBackend: return "BackendError";
    case ErrorCategory::kInternal: return "InternalError";
  }
  return "InternalError";
}

ErrorCategory CategoryOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError:
      return ErrorCategory::kConfig;
    case ErrorKind::kBackendFailure:
    case ErrorKind::kBackendNotTrainable:
    case ErrorKind::kVlmUnavailable:
    case ErrorKind::kUnparseableYesNo:
    case ErrorKind::kTokenLimitExceeded:
      return ErrorCategory::kBackend;
    case ErrorKind::kInternal:
    case ErrorKind::kDivergedLoss:
    case ErrorKind::kUninitializedParams:
      return ErrorCategory::kInternal;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace vad
