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

#ifndef PROFTREE_PROFILE_H_
#define PROFTREE_PROFILE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proftree/trace_io.h"
#include "proftree/trace_model.h"

namespace proftree {

using Path = std::vector<std::string>;

// Running statistics of one metric. count == 0 keeps every field at zero.
struct Stats {
  uint64_t count = 0;
  double sum = 0;
  double min = 0;
  double max = 0;
  double sum_sq = 0;

  void Add(double value);
  void Merge(const Stats& other);

  friend bool operator==(const Stats&, const Stats&) = default;
};

// A calling-context node. Stats hold the inclusive time of each occurrence.
struct ProfileNode {
  std::string name;
  std::map<std::string, ProfileNode> children;
  Stats stats;

  friend bool operator==(const ProfileNode&, const ProfileNode&) = default;
};

struct CallTreeProfile {
  std::map<std::string, ProfileNode> roots;
  uint64_t run_count = 1;
  std::string label;
  std::string metric_name = "time_usec";

  const ProfileNode* Find(const Path& path) const;
  size_t node_count() const;
  // Pre-order, children in name order.
  void ForEach(
      const std::function<void(const Path&, const ProfileNode&)>& fn) const;

  friend bool operator==(const CallTreeProfile&, const CallTreeProfile&) =
      default;
};

enum class Metric { kMean, kMin, kMax, kSum, kVariance, kCount };

std::string_view MetricName(Metric metric);
std::optional<Metric> ParseMetric(std::string_view name);

// Mean and variance require count > 0 and throw Error(kUndefinedMetric)
// otherwise. Variance is the sample (n - 1) variance, zero for one sample.
double NodeMetric(const ProfileNode& node, Metric metric);
double NodeMetric(const Stats& stats, Metric metric);

// Inclusive sum minus the children's inclusive sums.
double ExclusiveSum(const ProfileNode& node);

// Every interval contributes its duration to the node named by its nesting
// path. Threads and processes are folded together; run_count is 1.
CallTreeProfile ProfileFromSession(const TraceSession& session,
                                   std::string label = {});

// Node-wise union with exact statistic combination. Label comes from the
// first input. Throws Error(kEmptyInput) for no inputs and
// Error(kMetricMismatch) when inputs measure different metrics.
CallTreeProfile MergeProfiles(std::span<const CallTreeProfile> profiles);

NativeProfileDocument ToDocument(const CallTreeProfile& profile);
// Validates the document before building the tree.
CallTreeProfile FromDocument(const NativeProfileDocument& doc);

// Keeps only the timelines of one process.
TraceSession FilterByPid(const TraceSession& session, int64_t pid);

}  // namespace proftree

#endif  // PROFTREE_PROFILE_H_
