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

#ifndef PROFTREE_TRACE_IO_H_
#define PROFTREE_TRACE_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proftree/trace_model.h"

namespace proftree {

// Result of parsing a Chromium trace event document.
struct ChromiumTrace {
  std::vector<TraceEvent> events;
  // From ph="M" thread_name metadata events.
  ThreadNames thread_names;
  // Events whose ph is neither B, E, X nor M, plus metadata other than
  // thread_name.
  size_t skipped_events = 0;
};

// Accepts both the bare-array form and the {"traceEvents": [...]} form.
// Throws Error(kMalformedDocument) or MissingFieldError.
ChromiumTrace ReadChromiumTrace(std::string_view bytes);

// Convenience: parse and build in one step.
TraceSession ReadChromiumSession(std::string_view bytes);

// Always emits the {"traceEvents":[...],"displayTimeUnit":"ms"} wrapper. Each
// interval becomes one ph="X" event; each named thread gets one thread_name
// metadata event ahead of its intervals.
std::string WriteChromiumTrace(const TraceSession& session);
// Writes raw events with their own phases (B, E, or X).
std::string WriteChromiumTrace(std::span<const TraceEvent> events);

// One node of the on-disk profile: statistics of the inclusive metric over all
// occurrences of one calling-context path.
struct ProfileDocumentNode {
  std::vector<std::string> path;  // root first, non-empty
  uint64_t count = 0;
  double sum = 0;
  double min = 0;
  double max = 0;
  double sum_sq = 0;

  friend bool operator==(const ProfileDocumentNode&,
                         const ProfileDocumentNode&) = default;
};

struct NativeProfileDocument {
  std::string metric_name = "time_usec";
  uint64_t run_count = 1;
  std::string label;
  std::vector<ProfileDocumentNode> nodes;

  friend bool operator==(const NativeProfileDocument&,
                         const NativeProfileDocument&) = default;
};

// Checks the document invariants: unique, non-empty paths with every parent
// prefix present; statistics consistent with their count; run_count >= 1.
// Throws PathError(kDanglingPath / kDuplicatePath) or
// Error(kMalformedDocument).
void ValidateProfileDocument(const NativeProfileDocument& doc);

NativeProfileDocument ReadProfile(std::string_view bytes);
// Nodes are written in depth-first path order. Validates first.
std::string WriteProfile(const NativeProfileDocument& doc);

inline constexpr std::string_view kProfileExtension = ".prof.json";

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Formats a finite double the way the writers do: integral values without a
// fractional part, everything else with round-trip precision.
std::string FormatNumber(double value);

}  // namespace proftree

#endif  // PROFTREE_TRACE_IO_H_
