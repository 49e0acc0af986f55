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

#ifndef PROFTREE_COMPARE_H_
#define PROFTREE_COMPARE_H_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proftree/pattern.h"
#include "proftree/profile.h"

namespace proftree {

enum class Presence { kBoth, kBaselineOnly, kExperimentalOnly };

std::string_view PresenceName(Presence presence);
std::optional<Presence> ParsePresence(std::string_view name);

struct ComparisonNode {
  std::string name;
  std::map<std::string, ComparisonNode> children;
  Presence presence = Presence::kBoth;
  std::optional<double> baseline;
  std::optional<double> experimental;
  // baseline / experimental. Present iff presence == kBoth and
  // experimental > 0; above one means the experimental side is faster.
  std::optional<double> ratio;
  // Both sides present but the experimental metric is zero.
  bool zero_denominator = false;
  // Inclusive time totals, kept for impact-weighted ranking.
  double baseline_sum = 0;
  double experimental_sum = 0;

  friend bool operator==(const ComparisonNode&, const ComparisonNode&) =
      default;
};

struct ComparisonTree {
  std::map<std::string, ComparisonNode> roots;
  Metric metric = Metric::kMean;
  std::string baseline_label;
  std::string experimental_label;
  // Nodes flagged with zero_denominator, pre-order.
  std::vector<Path> zero_denominator_paths;

  const ComparisonNode* Find(const Path& path) const;
  void ForEach(
      const std::function<void(const Path&, const ComparisonNode&)>& fn) const;

  friend bool operator==(const ComparisonTree&, const ComparisonTree&) =
      default;
};

// Unifies the two trees by path. Throws Error(kUndefinedMetric) when the
// metric is undefined on a node present on both sides.
ComparisonTree Compare(const CallTreeProfile& baseline,
                       const CallTreeProfile& experimental,
                       Metric metric = Metric::kMean);

enum class RankWeight { kNone, kBaselineSum };

struct RankedNode {
  Path path;
  double ratio = 0;
  double weight = 0;

  friend bool operator==(const RankedNode&, const RankedNode&) = default;
};

// Nodes with a ratio, worst (smallest) first. Equal ratios order by
// descending weight, then by path. With kNone every weight is 1.
std::vector<RankedNode> RankWorst(const ComparisonTree& tree, size_t n,
                                  RankWeight weight_by = RankWeight::kNone);

struct RenderOptions {
  int precision = 2;
  double low_threshold = 0.9;
  double high_threshold = 1.1;
  bool ansi_color = false;
  // Value shown for plain profiles.
  Metric profile_metric = Metric::kMean;
};

inline constexpr std::string_view kSlowerMarker = "[slower]";
inline constexpr std::string_view kFasterMarker = "[faster]";

std::string RenderTree(const ComparisonTree& tree,
                       const RenderOptions& options = {});
std::string RenderTree(const CallTreeProfile& profile,
                       const RenderOptions& options = {});

struct SummaryStats {
  double geometric_mean_ratio = 0;
  double arithmetic_mean_ratio = 0;
  size_t node_count = 0;
};

// Means over the ratios of nodes whose name matches `filter` (all nodes when
// the filter is empty). Throws Error(kNoMatchingNodes).
SummaryStats ComputeSummaryStats(const ComparisonTree& tree,
                                 const PatternSet& filter = {});

std::string ComparisonToJson(const ComparisonTree& tree);
ComparisonTree ComparisonFromJson(std::string_view bytes);
std::string ComparisonToCsv(const ComparisonTree& tree);

}  // namespace proftree

#endif  // PROFTREE_COMPARE_H_
