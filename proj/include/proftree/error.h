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

#ifndef PROFTREE_ERROR_H_
#define PROFTREE_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proftree {

enum class ErrorKind {
  kMalformedDocument,
  kMissingField,
  kDanglingPath,
  kDuplicatePath,
  kUnmatchedEnd,
  kUnclosedBegin,
  kNonNestedIntervals,
  kEmptyInput,
  kMetricMismatch,
  kUndefinedMetric,
  kNoMatchingNodes,
  kNonLifoEnd,
  kEndOnWrongThread,
  kInvalidConfig,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// Base for every domain error raised by the library. Callers that only care
// about the category switch on kind(); the subclasses below carry the
// structured payload for the kinds that have one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class MissingFieldError : public Error {
 public:
  MissingFieldError(size_t event_index, std::string field);

  size_t event_index() const { return event_index_; }
  const std::string& field() const { return field_; }

 private:
  size_t event_index_;
  std::string field_;
};

class PathError : public Error {
 public:
  PathError(ErrorKind kind, std::vector<std::string> path);

  const std::vector<std::string>& path() const { return path_; }

 private:
  std::vector<std::string> path_;
};

class UnmatchedEndError : public Error {
 public:
  UnmatchedEndError(std::string name, int64_t pid, int64_t tid,
                    double timestamp_us);

  const std::string& name() const { return name_; }
  int64_t pid() const { return pid_; }
  int64_t tid() const { return tid_; }
  double timestamp_us() const { return timestamp_us_; }

 private:
  std::string name_;
  int64_t pid_;
  int64_t tid_;
  double timestamp_us_;
};

class UnclosedBeginError : public Error {
 public:
  // `open_names` lists every region still open on the thread, outermost first.
  UnclosedBeginError(std::vector<std::string> open_names, int64_t pid,
                     int64_t tid);

  const std::vector<std::string>& open_names() const { return open_names_; }
  int64_t pid() const { return pid_; }
  int64_t tid() const { return tid_; }

 private:
  std::vector<std::string> open_names_;
  int64_t pid_;
  int64_t tid_;
};

class NonLifoEndError : public Error {
 public:
  NonLifoEndError(std::string name, std::string expected_top);

  const std::string& name() const { return name_; }
  const std::string& expected_top() const { return expected_top_; }

 private:
  std::string name_;
  std::string expected_top_;
};

std::string JoinPath(const std::vector<std::string>& path,
                     std::string_view separator = "/");

}  // namespace proftree

#endif  // PROFTREE_ERROR_H_
