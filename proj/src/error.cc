// Copyright 2026 The Proftree Authors
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

#include "proftree/error.h"

#include <utility>

namespace proftree {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedDocument:
      return "MalformedDocument";
    case ErrorKind::kMissingField:
      return "MissingField";
    case ErrorKind::kDanglingPath:
      return "DanglingPath";
    case ErrorKind::kDuplicatePath:
      return "DuplicatePath";
    case ErrorKind::kUnmatchedEnd:
      return "UnmatchedEnd";
    case ErrorKind::kUnclosedBegin:
      return "UnclosedBegin";
    case ErrorKind::kNonNestedIntervals:
      return "NonNestedIntervals";
    case ErrorKind::kEmptyInput:
      return "EmptyInput";
    case ErrorKind::kMetricMismatch:
      return "MetricMismatch";
    case ErrorKind::kUndefinedMetric:
      return "UndefinedMetric";
    case ErrorKind::kNoMatchingNodes:
      return "NoMatchingNodes";
    case ErrorKind::kNonLifoEnd:
      return "NonLifoEnd";
    case ErrorKind::kEndOnWrongThread:
      return "EndOnWrongThread";
    case ErrorKind::kInvalidConfig:
      return "InvalidConfig";
    case ErrorKind::kIo:
      return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
      kind_(kind) {}

MissingFieldError::MissingFieldError(size_t event_index, std::string field)
    : Error(ErrorKind::kMissingField,
            "event " + std::to_string(event_index) + " has no \"" + field +
                "\""),
      event_index_(event_index),
      field_(std::move(field)) {}

PathError::PathError(ErrorKind kind, std::vector<std::string> path)
    : Error(kind, JoinPath(path)), path_(std::move(path)) {}

UnmatchedEndError::UnmatchedEndError(std::string name, int64_t pid,
                                     int64_t tid, double timestamp_us)
    : Error(ErrorKind::kUnmatchedEnd,
            "end of \"" + name + "\" on pid " + std::to_string(pid) +
                " tid " + std::to_string(tid) + " at " +
                std::to_string(timestamp_us) + " us has no matching begin"),
      name_(std::move(name)),
      pid_(pid),
      tid_(tid),
      timestamp_us_(timestamp_us) {}

UnclosedBeginError::UnclosedBeginError(std::vector<std::string> open_names,
                                       int64_t pid, int64_t tid)
    : Error(ErrorKind::kUnclosedBegin,
            "regions still open on pid " + std::to_string(pid) + " tid " +
                std::to_string(tid) + ": " + JoinPath(open_names, ", ")),
      open_names_(std::move(open_names)),
      pid_(pid),
      tid_(tid) {}

NonLifoEndError::NonLifoEndError(std::string name, std::string expected_top)
    : Error(ErrorKind::kNonLifoEnd,
            "closing \"" + name + "\" while \"" + expected_top +
                "\" is the innermost open region"),
      name_(std::move(name)),
      expected_top_(std::move(expected_top)) {}

std::string JoinPath(const std::vector<std::string>& path,
                     std::string_view separator) {
  std::string out;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i > 0) out += separator;
    out += path[i];
  }
  return out;
}

}  // namespace proftree
