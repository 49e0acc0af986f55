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

#include "proftree/analyzers.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

#include "json.hpp"
#include "proftree/error.h"
#include "proftree/pattern.h"
#include "proftree/trace_io.h"

namespace proftree {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string Quote(const std::string& s) { return "\"" + s + "\""; }

std::string Fixed(double value, int precision = 3) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, value);
  return buffer;
}

std::set<int64_t> Pids(const TraceSession& session) {
  std::set<int64_t> pids;
  for (const ThreadTimeline& t : session.timelines) pids.insert(t.pid);
  return pids;
}

// Intervals of one process grouped by region name, ordered by start time and
// then by thread.
std::map<std::string, std::vector<const Interval*>> GroupByName(
    const TraceSession& session, int64_t pid, const PatternSet* filter) {
  std::map<std::string, std::vector<const Interval*>> groups;
  for (const ThreadTimeline& timeline : session.timelines) {
    if (timeline.pid != pid) continue;
    for (const Interval& interval : timeline.intervals) {
      if (filter && !filter->Matches(interval.name)) continue;
      groups[interval.name].push_back(&interval);
    }
  }
  for (auto& [name, list] : groups) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Interval* a, const Interval* b) {
                       return std::tie(a->start_us, a->end_us, a->tid) <
                              std::tie(b->start_us, b->end_us, b->tid);
                     });
  }
  return groups;
}

double Scale(double mad, double median) {
  return std::max({mad, 0.01 * median, std::numeric_limits<double>::epsilon()});
}

bool FindingLess(const Finding& a, const Finding& b) {
  if (a.severity != b.severity) return a.severity > b.severity;
  if (a.window_start_us != b.window_start_us) {
    return a.window_start_us < b.window_start_us;
  }
  return std::tie(a.kind, a.pid, a.tid, a.region, a.window_end_us) <
         std::tie(b.kind, b.pid, b.tid, b.region, b.window_end_us);
}

std::string ScopeText(const std::optional<int64_t>& id) {
  return id ? std::to_string(*id) : std::string("*");
}

OrderedJson OptionalId(const std::optional<int64_t>& id) {
  return id ? OrderedJson(*id) : OrderedJson(nullptr);
}

}  // namespace

std::string_view FindingKindName(FindingKind kind) {
  switch (kind) {
    case FindingKind::kLockContention:
      return "LockContention";
    case FindingKind::kCollectiveImbalance:
      return "CollectiveImbalance";
    case FindingKind::kDurationOutlier:
      return "DurationOutlier";
    case FindingKind::kTimelineGap:
      return "TimelineGap";
  }
  return "LockContention";
}

std::optional<FindingKind> ParseFindingKind(std::string_view name) {
  for (FindingKind k :
       {FindingKind::kLockContention, FindingKind::kCollectiveImbalance,
        FindingKind::kDurationOutlier, FindingKind::kTimelineGap}) {
    if (FindingKindName(k) == name) return k;
  }
  return std::nullopt;
}

void AnalyzerConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidConfig, what);
  };
  if (!(outlier_k > 0)) fail("outlier_k must be positive");
  if (outlier_min_samples < 1) fail("outlier_min_samples must be >= 1");
  if (!(gap_min_us > 0)) fail("gap_min_us must be positive");
  if (!(gap_rel > 0)) fail("gap_rel must be positive");
  if (!(imbalance_threshold > 0 && imbalance_threshold < 1)) {
    fail("imbalance_threshold must lie in (0, 1)");
  }
}

AnalyzerConfig AnalyzerConfigFromJson(std::string_view bytes) {
  AnalyzerConfig config;
  try {
    Json doc = Json::parse(bytes.begin(), bytes.end());
    if (!doc.is_object()) {
      throw Error(ErrorKind::kInvalidConfig, "config must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      if (key == "lock_patterns") {
        config.lock_patterns = value.get<std::vector<std::string>>();
      } else if (key == "collective_patterns") {
        config.collective_patterns = value.get<std::vector<std::string>>();
      } else if (key == "outlier_k") {
        config.outlier_k = value.get<double>();
      } else if (key == "outlier_min_samples") {
        config.outlier_min_samples = value.get<int>();
      } else if (key == "gap_min_us") {
        config.gap_min_us = value.get<double>();
      } else if (key == "gap_rel") {
        config.gap_rel = value.get<double>();
      } else if (key == "imbalance_threshold") {
        config.imbalance_threshold = value.get<double>();
      } else {
        throw Error(ErrorKind::kInvalidConfig, "unknown key " + Quote(key));
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, e.what());
  }
  config.Validate();
  return config;
}

std::string AnalyzerConfigToJson(const AnalyzerConfig& config) {
  OrderedJson out = OrderedJson::object();
  out["lock_patterns"] = config.lock_patterns;
  out["collective_patterns"] = config.collective_patterns;
  out["outlier_k"] = config.outlier_k;
  out["outlier_min_samples"] = config.outlier_min_samples;
  out["gap_min_us"] = config.gap_min_us;
  out["gap_rel"] = config.gap_rel;
  out["imbalance_threshold"] = config.imbalance_threshold;
  return out.dump(1) + "\n";
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + mid);
  return (lower + upper) / 2.0;
}

std::vector<Finding> DetectLockContention(const TraceSession& session,
                                          const AnalyzerConfig& config) {
  const PatternSet locks(config.lock_patterns);
  std::vector<Finding> findings;
  for (int64_t pid : Pids(session)) {
    for (const auto& [name, intervals] : GroupByName(session, pid, &locks)) {
      double total_overlap = 0;
      double max_overlap = 0;
      double total_duration = 0;
      size_t pairs = 0;
      double first_overlap = 0;
      double last_overlap = 0;
      std::set<int64_t> tids;
      // Sweep in start order; every interval still active when `current`
      // starts began no later than it, so the overlap ends at the earlier of
      // the two ends.
      std::vector<const Interval*> active;
      for (const Interval* current : intervals) {
        total_duration += current->duration_us;
        tids.insert(current->tid);
        std::erase_if(active, [current](const Interval* a) {
          return a->end_us <= current->start_us;
        });
        for (const Interval* a : active) {
          if (a->tid == current->tid) continue;
          const double overlap = OverlapUs(*a, *current);
          if (overlap <= 0) continue;
          if (pairs == 0) {
            first_overlap = current->start_us;
            last_overlap = current->start_us + overlap;
          }
          first_overlap = std::min(first_overlap, current->start_us);
          last_overlap = std::max(last_overlap, current->start_us + overlap);
          total_overlap += overlap;
          max_overlap = std::max(max_overlap, overlap);
          ++pairs;
        }
        active.push_back(current);
      }
      if (pairs == 0 || total_duration <= 0) continue;

      const double fraction = total_overlap / total_duration;
      Finding f;
      f.kind = FindingKind::kLockContention;
      f.severity = std::min(1.0, fraction);
      f.pid = pid;
      f.region = {name};
      f.window_start_us = intervals.front()->start_us;
      f.window_end_us = 0;
      for (const Interval* i : intervals) {
        f.window_end_us = std::max(f.window_end_us, i->end_us);
      }
      f.evidence = {
          {"overlap_us", total_overlap},
          {"overlap_count", static_cast<double>(pairs)},
          {"max_overlap_us", max_overlap},
          {"contention_fraction", fraction},
          {"total_duration_us", total_duration},
          {"interval_count", static_cast<double>(intervals.size())},
          {"thread_count", static_cast<double>(tids.size())},
          {"first_overlap_us", first_overlap},
          {"last_overlap_us", last_overlap},
      };
      f.message = "lock " + Quote(name) + " held concurrently by " +
                  std::to_string(tids.size()) + " threads: " +
                  Fixed(total_overlap, 1) + " us overlap over " +
                  std::to_string(pairs) + " pairs, contention fraction " +
                  Fixed(fraction);
      findings.push_back(std::move(f));
    }
  }
  return findings;
}

std::vector<Finding> DetectCollectiveImbalance(const TraceSession& session,
                                               const AnalyzerConfig& config) {
  const PatternSet collectives(config.collective_patterns);
  // name -> pid -> occurrences on that pid's first thread carrying the name.
  std::map<std::string, std::map<int64_t, std::vector<const Interval*>>> table;
  for (const ThreadTimeline& timeline : session.timelines) {
    std::map<std::string, std::vector<const Interval*>> local;
    for (const Interval& interval : timeline.intervals) {
      if (collectives.Matches(interval.name)) {
        local[interval.name].push_back(&interval);
      }
    }
    for (auto& [name, list] : local) {
      // Timelines arrive in (pid, tid) order, so the first insert wins.
      table[name].try_emplace(timeline.pid, std::move(list));
    }
  }

  std::vector<Finding> findings;
  for (const auto& [name, per_pid] : table) {
    size_t max_count = 0;
    size_t min_count = std::numeric_limits<size_t>::max();
    for (const auto& [pid, list] : per_pid) {
      max_count = std::max(max_count, list.size());
      min_count = std::min(min_count, list.size());
    }
    std::vector<Finding> local;
    size_t skipped = 0;
    for (size_t index = 0; index < max_count; ++index) {
      double max_dur = -1;
      double min_dur = 0;
      int64_t max_pid = 0;
      int64_t min_pid = 0;
      double start = 0;
      double end = 0;
      size_t ranks = 0;
      for (const auto& [pid, list] : per_pid) {
        if (index >= list.size()) continue;
        const Interval& occ = *list[index];
        if (ranks == 0) {
          start = occ.start_us;
          end = occ.end_us;
        }
        start = std::min(start, occ.start_us);
        end = std::max(end, occ.end_us);
        if (ranks == 0 || occ.duration_us > max_dur) {
          max_dur = occ.duration_us;
          max_pid = pid;
        }
        if (ranks == 0 || occ.duration_us < min_dur) {
          min_dur = occ.duration_us;
          min_pid = pid;
        }
        ++ranks;
      }
      if (ranks < 2) {
        ++skipped;
        continue;
      }
      const double imbalance = max_dur > 0 ? (max_dur - min_dur) / max_dur : 0;
      if (imbalance < config.imbalance_threshold) continue;
      Finding f;
      f.kind = FindingKind::kCollectiveImbalance;
      f.severity = std::min(1.0, imbalance);
      f.region = {name};
      f.window_start_us = start;
      f.window_end_us = end;
      f.evidence = {
          {"occurrence_index", static_cast<double>(index)},
          {"imbalance", imbalance},
          {"max_duration_us", max_dur},
          {"min_duration_us", min_dur},
          {"slowest_pid", static_cast<double>(max_pid)},
          {"fastest_pid", static_cast<double>(min_pid)},
          {"process_count", static_cast<double>(ranks)},
          {"min_occurrences", static_cast<double>(min_count)},
          {"max_occurrences", static_cast<double>(max_count)},
      };
      f.message = "collective " + Quote(name) + " occurrence " +
                  std::to_string(index) + " imbalanced across " +
                  std::to_string(ranks) + " processes: " + Fixed(max_dur, 1) +
                  " us (pid " + std::to_string(max_pid) + ") vs " +
                  Fixed(min_dur, 1) + " us (pid " + std::to_string(min_pid) +
                  ")";
      local.push_back(std::move(f));
    }
    for (Finding& f : local) {
      f.evidence["skipped_occurrences"] = static_cast<double>(skipped);
      findings.push_back(std::move(f));
    }
  }
  return findings;
}

std::vector<Finding> DetectDurationOutliers(const TraceSession& session,
                                            const AnalyzerConfig& config) {
  std::vector<Finding> findings;
  const size_t min_samples =
      static_cast<size_t>(std::max(1, config.outlier_min_samples));
  for (int64_t pid : Pids(session)) {
    for (const auto& [name, intervals] : GroupByName(session, pid, nullptr)) {
      if (intervals.size() < min_samples) continue;
      std::vector<double> durations;
      durations.reserve(intervals.size());
      for (const Interval* i : intervals) durations.push_back(i->duration_us);
      const double median = Median(durations);
      std::vector<double> deviations;
      deviations.reserve(durations.size());
      for (double d : durations) deviations.push_back(std::fabs(d - median));
      const double mad = Median(std::move(deviations));
      const double scale = Scale(mad, median);
      const double threshold = median + config.outlier_k * scale;

      for (size_t index = 0; index < intervals.size(); ++index) {
        const Interval& occ = *intervals[index];
        if (!(occ.duration_us > threshold)) continue;
        const double excess = occ.duration_us - median;
        Finding f;
        f.kind = FindingKind::kDurationOutlier;
        f.severity = std::min(1.0, excess / (10.0 * config.outlier_k * scale));
        f.pid = pid;
        f.tid = occ.tid;
        f.region = {name};
        f.window_start_us = occ.start_us;
        f.window_end_us = occ.end_us;
        f.evidence = {
            {"occurrence_index", static_cast<double>(index)},
            {"duration_us", occ.duration_us},
            {"median_us", median},
            {"mad_us", mad},
            {"scale_us", scale},
            {"score", excess / scale},
            {"sample_count", static_cast<double>(intervals.size())},
        };
        f.message = Quote(name) + " occurrence " + std::to_string(index) +
                    " took " + Fixed(occ.duration_us, 1) + " us vs median " +
                    Fixed(median, 1) + " us (" + Fixed(excess / scale, 1) +
                    " robust deviations)";
        findings.push_back(std::move(f));
      }
    }
  }
  return findings;
}

std::vector<Finding> DetectGaps(const TraceSession& session,
                                const AnalyzerConfig& config) {
  std::vector<Finding> findings;
  for (const ThreadTimeline& timeline : session.timelines) {
    std::vector<const Interval*> top;
    for (const Interval& interval : timeline.intervals) {
      if (interval.depth == 0) top.push_back(&interval);
    }
    if (top.size() < 2) continue;
    std::vector<double> durations;
    durations.reserve(top.size());
    for (const Interval* i : top) durations.push_back(i->duration_us);
    const double median = Median(std::move(durations));
    const double threshold = std::max(config.gap_min_us, config.gap_rel * median);

    for (size_t i = 1; i < top.size(); ++i) {
      const Interval& before = *top[i - 1];
      const Interval& after = *top[i];
      const double gap = after.start_us - before.end_us;
      if (!(gap >= threshold)) continue;
      Finding f;
      f.kind = FindingKind::kTimelineGap;
      f.severity = std::min(1.0, gap / (10.0 * threshold));
      f.pid = timeline.pid;
      f.tid = timeline.tid;
      f.region = {before.name, after.name};
      f.window_start_us = before.end_us;
      f.window_end_us = after.start_us;
      f.evidence = {
          {"gap_us", gap},
          {"threshold_us", threshold},
          {"median_top_level_us", median},
      };
      f.message = Fixed(gap, 1) + " us idle between " + Quote(before.name) +
                  " and " + Quote(after.name) + " (threshold " +
                  Fixed(threshold, 1) + " us)";
      findings.push_back(std::move(f));
    }
  }
  return findings;
}

size_t AnalysisReport::Count(FindingKind kind) const {
  return static_cast<size_t>(
      std::count_if(findings.begin(), findings.end(),
                    [kind](const Finding& f) { return f.kind == kind; }));
}

AnalysisReport Analyze(const TraceSession& session,
                       const AnalyzerConfig& config) {
  config.Validate();
  AnalysisReport report;
  for (auto* detector : {&DetectLockContention, &DetectCollectiveImbalance,
                         &DetectDurationOutliers, &DetectGaps}) {
    std::vector<Finding> found = detector(session, config);
    report.findings.insert(report.findings.end(),
                           std::make_move_iterator(found.begin()),
                           std::make_move_iterator(found.end()));
  }
  std::stable_sort(report.findings.begin(), report.findings.end(), FindingLess);
  return report;
}

std::string ReportToText(const AnalysisReport& report) {
  std::string out;
  for (const Finding& f : report.findings) {
    std::string region;
    for (size_t i = 0; i < f.region.size(); ++i) {
      if (i > 0) region += " -> ";
      region += Quote(f.region[i]);
    }
    out += Fixed(f.severity) + " " + std::string(FindingKindName(f.kind)) +
           " pid=" + ScopeText(f.pid) + " tid=" + ScopeText(f.tid) + " " +
           region + " [" + Fixed(f.window_start_us, 1) + ", " +
           Fixed(f.window_end_us, 1) + "] us: " + f.message + "\n";
  }
  return out;
}

std::string ReportToJson(const AnalysisReport& report) {
  OrderedJson out = OrderedJson::array();
  for (const Finding& f : report.findings) {
    OrderedJson j = OrderedJson::object();
    j["kind"] = FindingKindName(f.kind);
    j["severity"] = f.severity;
    j["pid"] = OptionalId(f.pid);
    j["tid"] = OptionalId(f.tid);
    j["region"] = f.region;
    j["window"] = {f.window_start_us, f.window_end_us};
    OrderedJson evidence = OrderedJson::object();
    for (const auto& [k, v] : f.evidence) evidence[k] = v;
    j["evidence"] = std::move(evidence);
    j["message"] = f.message;
    out.push_back(std::move(j));
  }
  return out.dump(1) + "\n";
}

AnalysisReport ReportFromJson(std::string_view bytes) {
  AnalysisReport report;
  try {
    Json doc = Json::parse(bytes.begin(), bytes.end());
    if (!doc.is_array()) {
      throw Error(ErrorKind::kMalformedDocument, "report must be an array");
    }
    for (const Json& j : doc) {
      Finding f;
      auto kind = ParseFindingKind(j.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorKind::kMalformedDocument, "unknown kind");
      f.kind = *kind;
      f.severity = j.at("severity").get<double>();
      if (!j.at("pid").is_null()) f.pid = j.at("pid").get<int64_t>();
      if (!j.at("tid").is_null()) f.tid = j.at("tid").get<int64_t>();
      f.region = j.at("region").get<std::vector<std::string>>();
      const Json& window = j.at("window");
      f.window_start_us = window.at(0).get<double>();
      f.window_end_us = window.at(1).get<double>();
      for (const auto& [k, v] : j.at("evidence").items()) {
        f.evidence[k] = v.get<double>();
      }
      f.message = j.at("message").get<std::string>();
      if (f.window_end_us < f.window_start_us || f.severity < 0 ||
          f.severity > 1) {
        throw Error(ErrorKind::kMalformedDocument, "finding out of range");
      }
      report.findings.push_back(std::move(f));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  return report;
}

}  // namespace proftree
