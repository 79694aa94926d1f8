// Copyright 2026 The hiereval Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hiereval {

// Machine-readable error categories. The string forms are part of the
// server's error bodies and must stay stable.
enum class ErrorCode {
  kSyntax,
  kSemantic,
  kSchema,
  kUnknownNode,
  kUnknownAnswer,
  kUnknownItem,
  kUnknownEvaluator,
  kUnknownTraversal,
  kUnknownKind,
  kDuplicateItem,
  kInvalidArgument,
  kStaleNode,
  kOutOfOrder,
  kAlreadyTerminated,
  kCorruptRecord,
  kSequence,
  kIncomplete,
  kZeroMarginal,
  kUndefined,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "syntax_error";
    case ErrorCode::kSemantic: return "semantic_error";
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kUnknownNode: return "unknown_node";
    case ErrorCode::kUnknownAnswer: return "unknown_answer";
    case ErrorCode::kUnknownItem: return "unknown_item";
    case ErrorCode::kUnknownEvaluator: return "unknown_evaluator";
    case ErrorCode::kUnknownTraversal: return "unknown_traversal";
    case ErrorCode::kUnknownKind: return "unknown_kind";
    case ErrorCode::kDuplicateItem: return "duplicate_item";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kStaleNode: return "stale_node";
    case ErrorCode::kOutOfOrder: return "out_of_order";
    case ErrorCode::kAlreadyTerminated: return "already_terminated";
    case ErrorCode::kCorruptRecord: return "corrupt_record";
    case ErrorCode::kSequence: return "sequence_error";
    case ErrorCode::kIncomplete: return "incomplete_campaign";
    case ErrorCode::kZeroMarginal: return "zero_marginal";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hiereval
