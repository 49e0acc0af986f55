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

#ifndef PROFTREE_ANALYZERS_H_
#define PROFTREE_ANALYZERS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proftree/trace_model.h"

namespace proftree {

enum class FindingKind {
  kLockContention,
  kCollectiveImbalance,
  kDurationOutlier,
  kTimelineGap,
};

std::string_view FindingKindName(FindingKind kind);
std::optional<FindingKind> ParseFindingKind(std::string_view name);

struct Finding {
  FindingKind kind = FindingKind::kLockContention;
  double severity = 0;  // [0, 1]
  // nullopt is a wildcard scope.
  std::optional<int64_t> pid;
  std::optional<int64_t> tid;
  // One region name, or two for a gap (before, after).
  std::vector<std::string> region;
  double window_start_us = 0;
  double window_end_us = 0;
  std::map<std::string, double> evidence;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct AnalyzerConfig {
  std::vector<std::string> lock_patterns = {"*lock*"};
  std::vector<std::string> collective_patterns = {
      "*Barrier*", "*Allreduce*", "*Reduce*",
      "*Bcast*",   "*Allgather*", "*Alltoall*"};
  double outlier_k = 5.0;
  int outlier_min_samples = 10;
  double gap_min_us = 1000.0;
  // Multiplier on the median top-level duration of the thread.
  double gap_rel = 5.0;
  double imbalance_threshold = 0.5;

  // Throws Error(kInvalidConfig).
  void Validate() const;
};

AnalyzerConfig AnalyzerConfigFromJson(std::string_view bytes);
std::string AnalyzerConfigToJson(const AnalyzerConfig& config);

// Cross-thread overlap of same-named lock regions within each process. One
// finding per (pid, name) with nonzero overlap; severity is the contention
// fraction (total pairwise overlap over total region time) capped at 1.
std::vector<Finding> DetectLockContention(const TraceSession& session,
                                          const AnalyzerConfig& config);

// Aligns the i-th occurrence of each collective across processes and reports
// occurrences whose (max - min) / max duration reaches the threshold.
std::vector<Finding> DetectCollectiveImbalance(const TraceSession& session,
                                               const AnalyzerConfig& config);

// Median/MAD screen per (pid, name).
std::vector<Finding> DetectDurationOutliers(const TraceSession& session,
                                            const AnalyzerConfig& config);

// Idle stretches between consecutive top-level regions of each thread.
std::vector<Finding> DetectGaps(const TraceSession& session,
                                const AnalyzerConfig& config);

struct AnalysisReport {
  // Severity descending, then window start; remaining ties by kind, scope
  // and region so the order is total.
  std::vector<Finding> findings;

  size_t Count(FindingKind kind) const;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) =
      default;
};

AnalysisReport Analyze(const TraceSession& session,
                       const AnalyzerConfig& config);

std::string ReportToText(const AnalysisReport& report);
std::string ReportToJson(const AnalysisReport& report);
AnalysisReport ReportFromJson(std::string_view bytes);

// Sample median; the mean of the middle pair for even sizes.
double Median(std::vector<double> values);

}  // namespace proftree

#endif  // PROFTREE_ANALYZERS_H_
