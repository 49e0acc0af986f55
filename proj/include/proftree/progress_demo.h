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

#ifndef PROFTREE_PROGRESS_DEMO_H_
#define PROFTREE_PROGRESS_DEMO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proftree/instrument.h"
#include "proftree/trace_model.h"

namespace proftree {

// A user thread posting sends against a progress thread that completes them.
//
// kSharedQueue: one request queue and one lock; the progress thread services
// requests while holding that lock.
// kDualQueue: producers append to a small incoming queue; the progress thread
// holds the lock only long enough to swap it into a private queue, then
// services without the lock.
enum class Discipline { kSharedQueue, kDualQueue };

std::string_view DisciplineName(Discipline discipline);  // "shared" / "dual"
std::optional<Discipline> ParseDiscipline(std::string_view name);

inline constexpr std::string_view kIsendRegion = "isend";
inline constexpr std::string_view kQueueLockRegion = "queue lock";
inline constexpr std::string_view kProgressStepRegion = "progress step";
inline constexpr std::string_view kQueueSwapRegion = "queue swap";

inline constexpr std::string_view kSendCategory = "send";
inline constexpr std::string_view kLockCategory = "lock";
inline constexpr std::string_view kProgressCategory = "progress";
inline constexpr std::string_view kQueueCategory = "queue";

CategorySet DemoCategories();

struct DemoConfig {
  Discipline discipline = Discipline::kSharedQueue;
  // Threads standing in for ranks that post sends.
  int producer_count = 1;
  int requests_per_producer = 1;
  // Busy-wait per request inside the progress thread.
  double service_time_us = 100.0;
  uint64_t seed = 1;
  // Mean pause between a producer's posts, jittered uniformly over
  // [0.5, 1.5] x this value from `seed`. Spent asleep so it never competes
  // with the progress thread for a core.
  double compute_time_us = 600.0;
  // nullopt: PROFTREE_CATEGORIES if set, else every demo category.
  std::optional<CategorySet> categories;

  // Throws Error(kInvalidConfig).
  void Validate() const;
};

struct DemoResult {
  DemoConfig config;
  // One list per producer, in posting order.
  std::vector<std::vector<double>> isend_latency_us;
  uint64_t enqueued_count = 0;
  uint64_t completed_count = 0;
  double total_runtime_us = 0;
  TraceSession trace;

  std::vector<double> AllLatencies() const;
  double MeanLatencyUs() const;
  double MedianLatencyUs() const;
  double P99LatencyUs() const;
};

// Synchronous: returns after every thread has joined. Not reentrant.
DemoResult RunDemo(const DemoConfig& config);

struct SweepRow {
  Discipline discipline = Discipline::kSharedQueue;
  int producer_count = 0;
  int requests_per_producer = 0;
  double service_time_us = 0;
  uint64_t seed = 0;
  double mean_isend_us = 0;
  double median_isend_us = 0;
  double p99_isend_us = 0;
  double total_runtime_us = 0;
  uint64_t completed_count = 0;
};

SweepRow SummarizeRun(const DemoResult& result);

// Runs each configuration in order. When `trace_dir` is given, each run's
// trace is written there as TraceFileName(...).
std::vector<SweepRow> Sweep(std::span<const DemoConfig> configs,
                            const std::optional<std::filesystem::path>&
                                trace_dir = std::nullopt);

std::string TraceFileName(Discipline discipline, int producer_count);
std::string SweepToCsv(std::span<const SweepRow> rows);

// Nearest-rank percentile, p in (0, 100].
double Percentile(std::vector<double> values, double p);

}  // namespace proftree

#endif  // PROFTREE_PROGRESS_DEMO_H_
