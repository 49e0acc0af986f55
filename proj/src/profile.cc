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

#include "proftree/profile.h"

#include <algorithm>
#include <utility>

#include "proftree/error.h"

namespace proftree {

void Stats::Add(double value) {
  if (count == 0) {
    min = value;
    max = value;
  } else {
    min = std::min(min, value);
    max = std::max(max, value);
  }
  ++count;
  sum += value;
  sum_sq += value * value;
}

void Stats::Merge(const Stats& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  count += other.count;
  sum += other.sum;
  sum_sq += other.sum_sq;
  min = std::min(min, other.min);
  max = std::max(max, other.max);
}

namespace {

const ProfileNode* FindIn(const std::map<std::string, ProfileNode>& level,
                          const Path& path) {
  const ProfileNode* node = nullptr;
  const std::map<std::string, ProfileNode>* current = &level;
  for (const std::string& name : path) {
    auto it = current->find(name);
    if (it == current->end()) return nullptr;
    node = &it->second;
    current = &node->children;
  }
  return node;
}

void Walk(const std::map<std::string, ProfileNode>& level, Path& path,
          const std::function<void(const Path&, const ProfileNode&)>& fn) {
  for (const auto& [name, node] : level) {
    path.push_back(name);
    fn(path, node);
    Walk(node.children, path, fn);
    path.pop_back();
  }
}

void MergeInto(std::map<std::string, ProfileNode>& into,
               const std::map<std::string, ProfileNode>& from) {
  for (const auto& [name, node] : from) {
    ProfileNode& target = into[name];
    target.name = name;
    target.stats.Merge(node.stats);
    MergeInto(target.children, node.children);
  }
}

}  // namespace

const ProfileNode* CallTreeProfile::Find(const Path& path) const {
  if (path.empty()) return nullptr;
  return FindIn(roots, path);
}

size_t CallTreeProfile::node_count() const {
  size_t n = 0;
  ForEach([&n](const Path&, const ProfileNode&) { ++n; });
  return n;
}

void CallTreeProfile::ForEach(
    const std::function<void(const Path&, const ProfileNode&)>& fn) const {
  Path path;
  Walk(roots, path, fn);
}

std::string_view MetricName(Metric metric) {
  switch (metric) {
    case Metric::kMean:
      return "mean";
    case Metric::kMin:
      return "min";
    case Metric::kMax:
      return "max";
    case Metric::kSum:
      return "sum";
    case Metric::kVariance:
      return "variance";
    case Metric::kCount:
      return "count";
  }
  return "mean";
}

std::optional<Metric> ParseMetric(std::string_view name) {
  for (Metric m : {Metric::kMean, Metric::kMin, Metric::kMax, Metric::kSum,
                   Metric::kVariance, Metric::kCount}) {
    if (MetricName(m) == name) return m;
  }
  return std::nullopt;
}

double NodeMetric(const Stats& stats, Metric metric) {
  const double n = static_cast<double>(stats.count);
  switch (metric) {
    case Metric::kMean:
      if (stats.count == 0) {
        throw Error(ErrorKind::kUndefinedMetric, "mean of zero occurrences");
      }
      return stats.sum / n;
    case Metric::kVariance:
      if (stats.count == 0) {
        throw Error(ErrorKind::kUndefinedMetric,
                    "variance of zero occurrences");
      }
      if (stats.count == 1) return 0.0;
      // Cancellation can push the numerator a hair below zero.
      return std::max(0.0, (stats.sum_sq - stats.sum * stats.sum / n) /
                               (n - 1.0));
    case Metric::kMin:
      return stats.min;
    case Metric::kMax:
      return stats.max;
    case Metric::kSum:
      return stats.sum;
    case Metric::kCount:
      return n;
  }
  return 0.0;
}

double NodeMetric(const ProfileNode& node, Metric metric) {
  return NodeMetric(node.stats, metric);
}

double ExclusiveSum(const ProfileNode& node) {
  double children = 0;
  for (const auto& [name, child] : node.children) children += child.stats.sum;
  return node.stats.sum - children;
}

CallTreeProfile ProfileFromSession(const TraceSession& session,
                                   std::string label) {
  CallTreeProfile profile;
  profile.label = std::move(label);
  std::vector<ProfileNode*> stack;
  for (const ThreadTimeline& timeline : session.timelines) {
    stack.clear();
    for (const Interval& interval : timeline.intervals) {
      stack.resize(static_cast<size_t>(interval.depth));
      auto& level = stack.empty() ? profile.roots : stack.back()->children;
      ProfileNode& node = level[interval.name];
      node.name = interval.name;
      node.stats.Add(interval.duration_us);
      stack.push_back(&node);
    }
  }
  return profile;
}

CallTreeProfile MergeProfiles(std::span<const CallTreeProfile> profiles) {
  if (profiles.empty()) {
    throw Error(ErrorKind::kEmptyInput, "merge needs at least one profile");
  }
  CallTreeProfile merged;
  merged.label = profiles.front().label;
  merged.metric_name = profiles.front().metric_name;
  merged.run_count = 0;
  for (const CallTreeProfile& profile : profiles) {
    if (profile.metric_name != merged.metric_name) {
      throw Error(ErrorKind::kMetricMismatch,
                  "cannot merge \"" + profile.metric_name + "\" into \"" +
                      merged.metric_name + "\"");
    }
    merged.run_count += profile.run_count;
    MergeInto(merged.roots, profile.roots);
  }
  return merged;
}

NativeProfileDocument ToDocument(const CallTreeProfile& profile) {
  NativeProfileDocument doc;
  doc.metric_name = profile.metric_name;
  doc.run_count = profile.run_count;
  doc.label = profile.label;
  profile.ForEach([&doc](const Path& path, const ProfileNode& node) {
    doc.nodes.push_back({path, node.stats.count, node.stats.sum,
                         node.stats.min, node.stats.max, node.stats.sum_sq});
  });
  return doc;
}

CallTreeProfile FromDocument(const NativeProfileDocument& doc) {
  ValidateProfileDocument(doc);
  CallTreeProfile profile;
  profile.metric_name = doc.metric_name;
  profile.run_count = doc.run_count;
  profile.label = doc.label;
  for (const ProfileDocumentNode& n : doc.nodes) {
    auto* level = &profile.roots;
    ProfileNode* node = nullptr;
    for (const std::string& name : n.path) {
      node = &(*level)[name];
      node->name = name;
      level = &node->children;
    }
    node->stats = {n.count, n.sum, n.min, n.max, n.sum_sq};
  }
  return profile;
}

TraceSession FilterByPid(const TraceSession& session, int64_t pid) {
  TraceSession out;
  out.epoch_note = session.epoch_note;
  out.source = session.source;
  for (const ThreadTimeline& timeline : session.timelines) {
    if (timeline.pid == pid) out.timelines.push_back(timeline);
  }
  return out;
}

}  // namespace proftree
