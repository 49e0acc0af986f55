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

#include "proftree/trace_model.h"

#include <algorithm>

#include "proftree/error.h"

namespace proftree {

TraceEvent MakeComplete(std::string name, double ts_us, double dur_us,
                        int64_t pid, int64_t tid, std::string category) {
  TraceEvent event;
  event.name = std::move(name);
  event.category = std::move(category);
  event.phase = Phase::kComplete;
  event.timestamp_us = ts_us;
  event.duration_us = dur_us;
  event.pid = pid;
  event.tid = tid;
  return event;
}

TraceEvent MakeBegin(std::string name, double ts_us, int64_t pid, int64_t tid,
                     std::string category) {
  TraceEvent event;
  event.name = std::move(name);
  event.category = std::move(category);
  event.phase = Phase::kBegin;
  event.timestamp_us = ts_us;
  event.pid = pid;
  event.tid = tid;
  return event;
}

TraceEvent MakeEnd(std::string name, double ts_us, int64_t pid, int64_t tid) {
  TraceEvent event;
  event.name = std::move(name);
  event.phase = Phase::kEnd;
  event.timestamp_us = ts_us;
  event.pid = pid;
  event.tid = tid;
  return event;
}

const ThreadTimeline* TraceSession::Find(ThreadKey key) const {
  auto it = std::lower_bound(
      timelines.begin(), timelines.end(), key,
      [](const ThreadTimeline& t, const ThreadKey& k) { return t.key() < k; });
  if (it == timelines.end() || it->key() != key) return nullptr;
  return &*it;
}

size_t TraceSession::interval_count() const {
  size_t n = 0;
  for (const ThreadTimeline& timeline : timelines) n += timeline.intervals.size();
  return n;
}

namespace {

struct PendingInterval {
  Interval interval;
  // Index of the Begin or Complete event that opened it; ties in the sort
  // fall back to this so identical timestamps keep input order.
  size_t sequence = 0;
};

bool Contains(const Interval& outer, const Interval& inner) {
  if (inner.start_us < outer.start_us || inner.end_us > outer.end_us) {
    return false;
  }
  // A region that starts at the instant a non-empty region ends is its
  // successor.
  if (inner.start_us == outer.end_us && outer.end_us > outer.start_us) {
    return false;
  }
  return true;
}

void AssignDepths(std::vector<PendingInterval>& pending, ThreadKey key) {
  std::stable_sort(pending.begin(), pending.end(),
                   [](const PendingInterval& a, const PendingInterval& b) {
                     if (a.interval.start_us != b.interval.start_us) {
                       return a.interval.start_us < b.interval.start_us;
                     }
                     if (a.interval.end_us != b.interval.end_us) {
                       return a.interval.end_us > b.interval.end_us;
                     }
                     return a.sequence < b.sequence;
                   });
  std::vector<const Interval*> open;
  for (PendingInterval& p : pending) {
    Interval& current = p.interval;
    while (!open.empty()) {
      const Interval& top = *open.back();
      if (Contains(top, current)) break;
      if (top.end_us <= current.start_us) {
        open.pop_back();
        continue;
      }
      throw Error(ErrorKind::kNonNestedIntervals,
                  "\"" + top.name + "\" [" + std::to_string(top.start_us) +
                      ", " + std::to_string(top.end_us) +
                      "] partially overlaps \"" + current.name + "\" [" +
                      std::to_string(current.start_us) + ", " +
                      std::to_string(current.end_us) + "] on pid " +
                      std::to_string(key.pid) + " tid " +
                      std::to_string(key.tid));
    }
    current.depth = static_cast<int>(open.size());
    open.push_back(&current);
  }
}

}  // namespace

TraceSession BuildIntervals(std::span<const TraceEvent> events,
                            const ThreadNames& thread_names) {
  struct OpenBegin {
    const TraceEvent* event;
    size_t sequence;
  };
  struct ThreadState {
    std::vector<OpenBegin> stack;
    std::vector<PendingInterval> pending;
  };
  std::map<ThreadKey, ThreadState> threads;

  for (size_t i = 0; i < events.size(); ++i) {
    const TraceEvent& event = events[i];
    ThreadState& state = threads[{event.pid, event.tid}];
    switch (event.phase) {
      case Phase::kBegin:
        state.stack.push_back({&event, i});
        break;
      case Phase::kEnd: {
        if (state.stack.empty() || state.stack.back().event->name != event.name) {
          throw UnmatchedEndError(event.name, event.pid, event.tid,
                                  event.timestamp_us);
        }
        const TraceEvent& begin = *state.stack.back().event;
        PendingInterval p;
        p.sequence = state.stack.back().sequence;
        p.interval.name = begin.name;
        p.interval.category = begin.category;
        p.interval.start_us = begin.timestamp_us;
        p.interval.end_us = event.timestamp_us;
        p.interval.duration_us = event.timestamp_us - begin.timestamp_us;
        p.interval.pid = event.pid;
        p.interval.tid = event.tid;
        p.interval.attributes = begin.attributes;
        for (const auto& [k, v] : event.attributes) p.interval.attributes[k] = v;
        if (p.interval.end_us < p.interval.start_us) {
          throw Error(ErrorKind::kNonNestedIntervals,
                      "\"" + event.name + "\" ends before it begins on pid " +
                          std::to_string(event.pid) + " tid " +
                          std::to_string(event.tid));
        }
        state.stack.pop_back();
        state.pending.push_back(std::move(p));
        break;
      }
      case Phase::kComplete: {
        PendingInterval p;
        p.sequence = i;
        p.interval.name = event.name;
        p.interval.category = event.category;
        p.interval.start_us = event.timestamp_us;
        p.interval.duration_us = event.duration_us.value_or(0.0);
        p.interval.end_us = event.timestamp_us + p.interval.duration_us;
        p.interval.pid = event.pid;
        p.interval.tid = event.tid;
        p.interval.attributes = event.attributes;
        state.pending.push_back(std::move(p));
        break;
      }
    }
  }

  for (const auto& [key, name] : thread_names) threads.try_emplace(key);

  TraceSession session;
  session.timelines.reserve(threads.size());
  for (auto& [key, state] : threads) {
    if (!state.stack.empty()) {
      std::vector<std::string> names;
      for (const OpenBegin& open : state.stack) names.push_back(open.event->name);
      throw UnclosedBeginError(std::move(names), key.pid, key.tid);
    }
    AssignDepths(state.pending, key);
    ThreadTimeline timeline;
    timeline.pid = key.pid;
    timeline.tid = key.tid;
    if (auto it = thread_names.find(key); it != thread_names.end()) {
      timeline.thread_name = it->second;
    }
    timeline.intervals.reserve(state.pending.size());
    for (PendingInterval& p : state.pending) {
      timeline.intervals.push_back(std::move(p.interval));
    }
    session.timelines.push_back(std::move(timeline));
  }
  return session;
}

double OverlapUs(const Interval& a, const Interval& b) {
  return std::max(0.0, std::min(a.end_us, b.end_us) -
                           std::max(a.start_us, b.start_us));
}

}  // namespace proftree
