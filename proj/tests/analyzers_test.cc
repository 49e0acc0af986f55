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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <tuple>
#include <vector>

#include "proftree/error.h"
#include "proftree/pattern.h"
#include "testing/generators.h"
#include "testing/oracles.h"

namespace proftree {
namespace {

TraceSession Session(const std::vector<TraceEvent>& events) {
  return BuildIntervals(events);
}

bool IsDefaultLock(const std::string& name) {
  return GlobMatch("*lock*", name);
}

TEST(LockContentionTest, TwoThreadExample) {
  auto session = Session({MakeComplete("q lock", 0, 10, 1, 1),
                          MakeComplete("q lock", 5, 15, 1, 2)});
  auto findings = DetectLockContention(session, {});
  ASSERT_EQ(findings.size(), 1u);
  const Finding& f = findings[0];
  EXPECT_EQ(f.kind, FindingKind::kLockContention);
  EXPECT_EQ(f.evidence.at("overlap_us"), 5);
  EXPECT_EQ(f.evidence.at("overlap_count"), 1);
  EXPECT_EQ(f.evidence.at("max_overlap_us"), 5);
  EXPECT_DOUBLE_EQ(f.evidence.at("contention_fraction"), 0.2);
  EXPECT_DOUBLE_EQ(f.severity, 0.2);
  EXPECT_EQ(f.pid, 1);
  EXPECT_FALSE(f.tid.has_value());
  EXPECT_EQ(f.region, std::vector<std::string>{"q lock"});
  EXPECT_EQ(f.window_start_us, 0);
  EXPECT_EQ(f.window_end_us, 20);
}

TEST(LockContentionTest, SameThreadIsNesting) {
  auto session = Session({MakeComplete("q lock", 0, 10, 1, 1),
                          MakeComplete("q lock", 5, 5, 1, 1)});
  EXPECT_TRUE(DetectLockContention(session, {}).empty());
}

TEST(LockContentionTest, ThreeThreadsAllPairs) {
  auto session = Session({MakeComplete("m lock", 0, 10, 1, 1),
                          MakeComplete("m lock", 0, 10, 1, 2),
                          MakeComplete("m lock", 0, 10, 1, 3)});
  auto oracle = testing::BruteForceOverlaps(session, IsDefaultLock);
  ASSERT_EQ(oracle.size(), 1u);
  EXPECT_EQ(oracle.begin()->second.pairs, 3u);
  EXPECT_EQ(oracle.begin()->second.total_us, 30);

  auto findings = DetectLockContention(session, {});
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].evidence.at("overlap_us"), 30);
  EXPECT_EQ(findings[0].evidence.at("overlap_count"), 3);
  EXPECT_EQ(findings[0].evidence.at("contention_fraction"), 1.0);
  EXPECT_EQ(findings[0].severity, 1.0);
}

TEST(LockContentionTest, ProcessesAreSeparateAndPatternsApply) {
  auto session = Session({MakeComplete("q lock", 0, 10, 1, 1),
                          MakeComplete("q lock", 0, 10, 2, 2),
                          MakeComplete("compute", 0, 10, 1, 3),
                          MakeComplete("compute", 0, 10, 1, 4)});
  EXPECT_TRUE(DetectLockContention(session, {}).empty());
  AnalyzerConfig config;
  config.lock_patterns = {"comp"};
  EXPECT_EQ(DetectLockContention(session, config).size(), 1u);
}

TEST(LockContentionTest, DisjointAcrossThreadsIsEmpty) {
  testing::Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TraceEvent> events;
    double cursor = 0;
    for (int i = 0; i < 20; ++i) {
      double dur = testing::Dyadic(rng, 0, 10);
      events.push_back(MakeComplete("q lock", cursor, dur, 1,
                                    testing::UniformInt(rng, 1, 4)));
      cursor += dur + testing::Dyadic(rng, 0, 3);
    }
    EXPECT_TRUE(DetectLockContention(Session(events), {}).empty());
  }
}

TEST(LockContentionProperty, MatchesAllPairsOracleExactly) {
  testing::Rng rng(52);
  int with_overlap = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto session = Session(testing::RandomLockEvents(rng, 50));
    auto oracle = testing::BruteForceOverlaps(session, IsDefaultLock);
    auto findings = DetectLockContention(session, {});
    ASSERT_EQ(findings.size(), oracle.size());
    for (const Finding& f : findings) {
      const auto& o = oracle.at({*f.pid, f.region.at(0)});
      EXPECT_EQ(f.evidence.at("overlap_us"), o.total_us);
      EXPECT_EQ(f.evidence.at("overlap_count"), static_cast<double>(o.pairs));
      ++with_overlap;
    }
  }
  EXPECT_GT(with_overlap, 100);
}

TEST(LockContentionProperty, ExtendingAnIntervalNeverReducesOverlap) {
  testing::Rng rng(53);
  for (int trial = 0; trial < 300; ++trial) {
    auto events = testing::RandomLockEvents(rng, 30);
    auto total = [](const std::vector<TraceEvent>& ev) {
      std::map<std::pair<int64_t, std::string>, double> out;
      for (const Finding& f : DetectLockContention(Session(ev), {})) {
        out[{*f.pid, f.region[0]}] = f.evidence.at("overlap_us");
      }
      return out;
    };
    auto before = total(events);
    size_t pick = static_cast<size_t>(
        testing::UniformInt(rng, 0, int(events.size()) - 1));
    TraceEvent& e = events[pick];
    // Grow up to the next start on the same thread so nesting stays valid.
    double limit = 1e9;
    for (const TraceEvent& other : events) {
      if (other.tid == e.tid && other.timestamp_us > e.timestamp_us) {
        limit = std::min(limit, other.timestamp_us);
      }
    }
    double end = e.timestamp_us + *e.duration_us;
    double new_end = std::min(limit, end + testing::Dyadic(rng, 0, 40));
    e.duration_us = new_end - e.timestamp_us;
    auto after = total(events);
    const std::pair<int64_t, std::string> key{e.pid, e.name};
    double b = before.contains(key) ? before[key] : 0;
    double a = after.contains(key) ? after[key] : 0;
    EXPECT_GE(a, b);
  }
}

TEST(CollectiveImbalanceTest, Examples) {
  auto session = Session({MakeComplete("MPI_Barrier", 0, 1, 1, 1),
                          MakeComplete("MPI_Barrier", 0, 1, 2, 1),
                          MakeComplete("MPI_Barrier", 0, 9, 3, 1)});
  auto findings = DetectCollectiveImbalance(session, {});
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_DOUBLE_EQ(findings[0].severity, 8.0 / 9.0);
  EXPECT_DOUBLE_EQ(findings[0].evidence.at("imbalance"), 8.0 / 9.0);
  EXPECT_EQ(findings[0].evidence.at("slowest_pid"), 3);

  auto equal = Session({MakeComplete("MPI_Allreduce", 0, 4, 1, 1),
                        MakeComplete("MPI_Allreduce", 0, 4, 2, 1)});
  EXPECT_TRUE(DetectCollectiveImbalance(equal, {}).empty());
}

TEST(CollectiveImbalanceTest, MisalignedCountsSkipTrailingOccurrences) {
  std::vector<TraceEvent> events;
  for (int i = 0; i < 3; ++i) {
    events.push_back(MakeComplete("MPI_Bcast", i * 100, 10, 1, 1));
  }
  for (int i = 0; i < 2; ++i) {
    events.push_back(MakeComplete("MPI_Bcast", i * 100, 1, 2, 1));
  }
  auto findings = DetectCollectiveImbalance(Session(events), {});
  ASSERT_EQ(findings.size(), 2u);
  for (const Finding& f : findings) {
    EXPECT_LE(f.evidence.at("occurrence_index"), 1);
    EXPECT_EQ(f.evidence.at("skipped_occurrences"), 1);
    EXPECT_EQ(f.evidence.at("min_occurrences"), 2);
    EXPECT_EQ(f.evidence.at("max_occurrences"), 3);
  }
}

TEST(CollectiveImbalanceTest, UsesFirstThreadOfEachProcess) {
  auto session = Session({MakeComplete("MPI_Barrier", 0, 10, 1, 1),
                          MakeComplete("MPI_Barrier", 0, 1, 1, 2),
                          MakeComplete("MPI_Barrier", 0, 10, 2, 5)});
  EXPECT_TRUE(DetectCollectiveImbalance(session, {}).empty());
}

TEST(DurationOutlierTest, SpikeAmongConstantsAgreesWithSortOracle) {
  std::vector<TraceEvent> events;
  std::vector<double> durations;
  for (int i = 0; i < 9; ++i) durations.push_back(10);
  durations.push_back(100);
  double cursor = 0;
  for (double d : durations) {
    events.push_back(MakeComplete("step", cursor, d, 1, 1));
    cursor += d + 1;
  }
  const double m = testing::SortMedian(durations);
  const double mad = testing::SortMad(durations);
  EXPECT_EQ(m, 10);
  EXPECT_EQ(mad, 0);
  const double scale = std::max(mad, 0.01 * m);
  EXPECT_DOUBLE_EQ(m + 5.0 * scale, 10.5);

  auto findings = DetectDurationOutliers(Session(events), {});
  ASSERT_EQ(findings.size(), 1u);
  const Finding& f = findings[0];
  EXPECT_EQ(f.evidence.at("duration_us"), 100);
  EXPECT_EQ(f.evidence.at("median_us"), m);
  EXPECT_EQ(f.evidence.at("mad_us"), mad);
  EXPECT_DOUBLE_EQ(f.evidence.at("scale_us"), scale);
  EXPECT_EQ(f.severity, std::min(1.0, (100 - m) / (10 * 5.0 * scale)));
  EXPECT_EQ(f.severity, 1.0);
  EXPECT_EQ(f.tid, 1);
}

TEST(DurationOutlierTest, ConstantAndSmallSamples) {
  std::vector<TraceEvent> equal;
  for (int i = 0; i < 12; ++i) equal.push_back(MakeComplete("s", i * 10, 5, 1, 1));
  EXPECT_TRUE(DetectDurationOutliers(Session(equal), {}).empty());

  std::vector<TraceEvent> few;
  for (int i = 0; i < 4; ++i) few.push_back(MakeComplete("s", i * 10, 1, 1, 1));
  few.push_back(MakeComplete("s", 100, 1000, 1, 1));
  EXPECT_TRUE(DetectDurationOutliers(Session(few), {}).empty());
}

TEST(DurationOutlierTest, ZeroMedianUsesEpsilonGuard) {
  std::vector<TraceEvent> events;
  for (int i = 0; i < 10; ++i) events.push_back(MakeComplete("z", i, 0, 1, 1));
  events.push_back(MakeComplete("z", 20, 1, 1, 1));
  auto findings = DetectDurationOutliers(Session(events), {});
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_GT(findings[0].evidence.at("scale_us"), 0);
  EXPECT_EQ(findings[0].severity, 1.0);
}

TEST(MedianProperty, MatchesSortOracle) {
  testing::Rng rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<size_t>(testing::UniformInt(rng, 1, 40)));
    for (double& x : v) x = testing::Dyadic(rng, 0, 100);
    EXPECT_EQ(Median(v), testing::SortMedian(v));
  }
}

TEST(DurationOutlierProperty, FlagsExactlyTheOracleSet) {
  testing::Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TraceEvent> events;
    std::vector<double> durations;
    double cursor = 0;
    const int n = testing::UniformInt(rng, 10, 40);
    for (int i = 0; i < n; ++i) {
      double d = testing::UniformInt(rng, 0, 9) == 0
                     ? testing::Dyadic(rng, 50, 500)
                     : testing::Dyadic(rng, 9, 11);
      durations.push_back(d);
      events.push_back(MakeComplete("r", cursor, d, 1, 1));
      cursor += d + 1;
    }
    const double m = testing::SortMedian(durations);
    const double s = std::max(testing::SortMad(durations), 0.01 * m);
    size_t expected = 0;
    for (double d : durations) expected += d > m + 5.0 * s;
    EXPECT_EQ(DetectDurationOutliers(Session(events), {}).size(), expected);
  }
}

TEST(GapTest, Examples) {
  auto session = Session({MakeComplete("a", 0, 10, 1, 1),
                          MakeComplete("b", 30, 10, 1, 1)});
  AnalyzerConfig config;
  config.gap_min_us = 15;
  EXPECT_TRUE(DetectGaps(session, config).empty());
  config.gap_rel = 1;
  auto findings = DetectGaps(session, config);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].evidence.at("gap_us"), 20);
  EXPECT_EQ(findings[0].evidence.at("threshold_us"), 15);
  EXPECT_DOUBLE_EQ(findings[0].severity, 20.0 / 150.0);
  EXPECT_EQ(findings[0].window_start_us, 10);
  EXPECT_EQ(findings[0].window_end_us, 30);
  EXPECT_EQ(findings[0].region, (std::vector<std::string>{"a", "b"}));

  auto single = Session({MakeComplete("a", 0, 10, 1, 1)});
  EXPECT_TRUE(DetectGaps(single, config).empty());
}

TEST(GapTest, NestedIntervalsDoNotCount) {
  auto session = Session({MakeComplete("a", 0, 100, 1, 1),
                          MakeComplete("child", 1, 1, 1, 1),
                          MakeComplete("child", 90, 1, 1, 1),
                          MakeComplete("b", 100, 10, 1, 1)});
  AnalyzerConfig config;
  config.gap_min_us = 1;
  config.gap_rel = 0.01;
  EXPECT_TRUE(DetectGaps(session, config).empty());
}

TEST(AnalyzeTest, EmptyAndSingleFinding) {
  EXPECT_TRUE(Analyze(TraceSession{}, {}).findings.empty());
  auto session = Session({MakeComplete("q lock", 0, 10, 1, 1),
                          MakeComplete("q lock", 5, 15, 1, 2)});
  AnalysisReport report = Analyze(session, {});
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].kind, FindingKind::kLockContention);
  EXPECT_EQ(report.Count(FindingKind::kLockContention), 1u);
}

TEST(AnalyzeTest, JsonRoundTripAndText) {
  testing::Rng rng(56);
  AnalyzerConfig config;
  config.outlier_min_samples = 3;
  config.gap_min_us = 1;
  auto events = testing::RandomNestedEvents(
      rng, 50, 4, {"q lock", "MPI_Barrier", "work"});
  auto more = testing::RandomLockEvents(rng, 20);
  for (auto& e : more) e.pid += 10;
  events.insert(events.end(), more.begin(), more.end());
  AnalysisReport report = Analyze(Session(events), config);
  ASSERT_FALSE(report.findings.empty());
  EXPECT_EQ(ReportFromJson(ReportToJson(report)), report);
  std::string text = ReportToText(report);
  EXPECT_EQ(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')),
            report.findings.size());
  for (size_t i = 1; i < report.findings.size(); ++i) {
    const Finding& a = report.findings[i - 1];
    const Finding& b = report.findings[i];
    EXPECT_TRUE(a.severity > b.severity ||
                (a.severity == b.severity &&
                 a.window_start_us <= b.window_start_us));
  }
  for (const Finding& f : report.findings) {
    EXPECT_GE(f.severity, 0);
    EXPECT_LE(f.severity, 1);
    EXPECT_GE(f.window_end_us, f.window_start_us);
  }
}

TEST(AnalyzeTest, MalformedReportJson) {
  for (const char* bad : {"{}", "[{}]", R"([{"kind":"Nope"}])"}) {
    try {
      ReportFromJson(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kMalformedDocument);
    }
  }
}

TEST(AnalyzerConfigTest, JsonAndValidation) {
  AnalyzerConfig config;
  config.outlier_k = 3;
  config.lock_patterns = {"mutex"};
  AnalyzerConfig back = AnalyzerConfigFromJson(AnalyzerConfigToJson(config));
  EXPECT_EQ(back.outlier_k, 3);
  EXPECT_EQ(back.lock_patterns, std::vector<std::string>{"mutex"});
  EXPECT_EQ(back.gap_rel, 5.0);

  for (const char* bad :
       {R"({"outlier_k":0})", R"({"imbalance_threshold":1})",
        R"({"gap_min_us":-1})", R"({"unknown":1})", R"({"gap_rel":"x"})",
        "[]", "nope"}) {
    try {
      AnalyzerConfigFromJson(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig) << bad;
    }
  }
}

TEST(FindingKindTest, NamesRoundTrip) {
  for (FindingKind k :
       {FindingKind::kLockContention, FindingKind::kCollectiveImbalance,
        FindingKind::kDurationOutlier, FindingKind::kTimelineGap}) {
    EXPECT_EQ(ParseFindingKind(FindingKindName(k)), k);
  }
  EXPECT_FALSE(ParseFindingKind("x").has_value());
}

// The part of a finding that must not depend on absolute time or tid values.
using Shape = std::tuple<FindingKind, double, std::optional<int64_t>,
                         std::optional<int64_t>, std::vector<std::string>,
                         double>;

Shape ShapeOf(const Finding& f,
              const std::map<int64_t, int64_t>& tid_map = {}) {
  std::optional<int64_t> tid = f.tid;
  if (tid && tid_map.contains(*tid)) tid = tid_map.at(*tid);
  return {f.kind, f.severity, f.pid, tid, f.region,
          f.window_end_us - f.window_start_us};
}

AnalyzerConfig SensitiveConfig() {
  AnalyzerConfig config;
  config.outlier_min_samples = 3;
  config.gap_min_us = 5;
  config.gap_rel = 1;
  return config;
}

std::vector<TraceEvent> MixedEvents(testing::Rng& rng) {
  auto events = testing::RandomNestedEvents(
      rng, 50, 4, {"q lock", "MPI_Barrier", "work", "MPI_Allreduce"});
  auto locks = testing::RandomLockEvents(rng, 20);
  for (auto& e : locks) e.pid += 10;
  events.insert(events.end(), locks.begin(), locks.end());
  return events;
}

TEST(AnalyzeProperty, DeterministicBytes) {
  testing::Rng rng(57);
  for (int trial = 0; trial < 50; ++trial) {
    auto events = MixedEvents(rng);
    auto a = ReportToJson(Analyze(Session(events), SensitiveConfig()));
    std::reverse(events.begin(), events.end());
    auto b = ReportToJson(Analyze(Session(events), SensitiveConfig()));
    EXPECT_EQ(a, b);
  }
}

TEST(AnalyzeProperty, TimeShiftChangesOnlyWindows) {
  testing::Rng rng(58);
  for (int trial = 0; trial < 100; ++trial) {
    auto events = MixedEvents(rng);
    const double shift = testing::Dyadic(rng, 1, 100000);
    auto shifted = events;
    for (auto& e : shifted) e.timestamp_us += shift;
    auto a = Analyze(Session(events), SensitiveConfig()).findings;
    auto b = Analyze(Session(shifted), SensitiveConfig()).findings;
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(ShapeOf(a[i]), ShapeOf(b[i]));
      EXPECT_EQ(a[i].message, b[i].message);
      EXPECT_EQ(a[i].window_start_us + shift, b[i].window_start_us);
    }
  }
}

TEST(AnalyzeProperty, ThreadRelabelKeepsFindingMultiset) {
  testing::Rng rng(59);
  for (int trial = 0; trial < 100; ++trial) {
    // One thread per process carries collectives, so the first-thread
    // alignment rule cannot pick a different thread after relabeling.
    auto events = testing::RandomNestedEvents(rng, 40, 2,
                                              {"q lock", "MPI_Barrier", "w"});
    auto locks = testing::RandomLockEvents(rng, 20);
    for (auto& e : locks) e.pid += 10;
    events.insert(events.end(), locks.begin(), locks.end());

    std::vector<int64_t> tids;
    for (const auto& e : events) tids.push_back(e.tid);
    std::sort(tids.begin(), tids.end());
    tids.erase(std::unique(tids.begin(), tids.end()), tids.end());
    std::vector<int64_t> permuted = tids;
    std::shuffle(permuted.begin(), permuted.end(), rng);
    std::map<int64_t, int64_t> forward;
    for (size_t i = 0; i < tids.size(); ++i) forward[tids[i]] = permuted[i];
    auto relabeled = events;
    for (auto& e : relabeled) e.tid = forward.at(e.tid);

    std::vector<Shape> a, b;
    for (const Finding& f : Analyze(Session(events), SensitiveConfig()).findings) {
      a.push_back(ShapeOf(f, forward));
    }
    for (const Finding& f :
         Analyze(Session(relabeled), SensitiveConfig()).findings) {
      b.push_back(ShapeOf(f));
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

}  // namespace
}  // namespace proftree
