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

#ifndef PROFTREE_TRACE_MODEL_H_
#define PROFTREE_TRACE_MODEL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace proftree {

using Attributes = std::map<std::string, std::string>;

// (pid, tid) identity of one thread in a trace.
struct ThreadKey {
  int64_t pid = 0;
  int64_t tid = 0;

  friend auto operator<=>(const ThreadKey&, const ThreadKey&) = default;
};

enum class Phase { kBegin, kEnd, kComplete };

// One timed record as it appears in a trace file. Timestamps are microseconds
// since the trace epoch.
struct TraceEvent {
  std::string name;
  std::string category;
  Phase phase = Phase::kComplete;
  double timestamp_us = 0;
  // Present exactly when phase == kComplete.
  std::optional<double> duration_us;
  int64_t pid = 0;
  int64_t tid = 0;
  Attributes attributes;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

TraceEvent MakeComplete(std::string name, double ts_us, double dur_us,
                        int64_t pid, int64_t tid, std::string category = {});
TraceEvent MakeBegin(std::string name, double ts_us, int64_t pid, int64_t tid,
                     std::string category = {});
TraceEvent MakeEnd(std::string name, double ts_us, int64_t pid, int64_t tid);

// One occurrence of a region on a thread.
//
// The duration is stored alongside the end point so that an interval read
// from a Complete event reproduces its (ts, dur) pair exactly; end_us is
// start_us + duration_us for Complete events and the End timestamp for
// Begin/End pairs.
struct Interval {
  std::string name;
  std::string category;
  double start_us = 0;
  double end_us = 0;
  double duration_us = 0;
  int64_t pid = 0;
  int64_t tid = 0;
  int depth = 0;
  Attributes attributes;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ThreadTimeline {
  int64_t pid = 0;
  int64_t tid = 0;
  std::optional<std::string> thread_name;
  // Sorted by (start_us ascending, end_us descending), input order on ties.
  std::vector<Interval> intervals;

  ThreadKey key() const { return {pid, tid}; }

  friend bool operator==(const ThreadTimeline&, const ThreadTimeline&) =
      default;
};

struct TraceSession {
  // Sorted by (pid, tid); keys are unique.
  std::vector<ThreadTimeline> timelines;
  std::optional<std::string> epoch_note;
  std::optional<std::string> source;

  const ThreadTimeline* Find(ThreadKey key) const;
  size_t interval_count() const;

  friend bool operator==(const TraceSession&, const TraceSession&) = default;
};

using ThreadNames = std::map<ThreadKey, std::string>;

// Pairs Begin/End events per (pid, tid) with stack discipline, turns Complete
// events into intervals directly, and computes nesting depths.
//
// Throws UnmatchedEndError, UnclosedBeginError, or Error(kNonNestedIntervals)
// when two intervals on one thread partially overlap.
//
// Containment is closed on both ends, so a child may share either endpoint
// with its parent. An interval that starts exactly where a non-empty interval
// ends follows it rather than nesting inside it.
TraceSession BuildIntervals(std::span<const TraceEvent> events,
                            const ThreadNames& thread_names = {});

// Length of the intersection of two intervals, zero when they only touch.
double OverlapUs(const Interval& a, const Interval& b);

}  // namespace proftree

#endif  // PROFTREE_TRACE_MODEL_H_
