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

#include "proftree/instrument.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

#include "proftree/error.h"
#include "proftree/trace_io.h"

namespace proftree {
namespace {

// Advances by one microsecond per reading, so durations are predictable.
class TickClock : public MonotonicClock {
 public:
  double NowUs() const override { return now_.fetch_add(1) + 0.0; }

 private:
  mutable std::atomic<int64_t> now_{0};
};

RegionConfig Config(CategorySet categories) {
  RegionConfig config;
  config.enabled_categories = std::move(categories);
  config.clock = std::make_shared<TickClock>();
  return config;
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

TEST(RecorderTest, EnabledRegionRecordsOneEvent) {
  Recorder recorder(Config({"comm"}));
  RegionHandle h = recorder.BeginRegion("main", "comm");
  EXPECT_TRUE(h.enabled());
  recorder.EndRegion(h);
  TraceSession session = recorder.Flush();
  ASSERT_EQ(session.interval_count(), 1u);
  const Interval& i = session.timelines.at(0).intervals.at(0);
  EXPECT_EQ(i.name, "main");
  EXPECT_EQ(i.category, "comm");
  EXPECT_GE(i.duration_us, 0);
  EXPECT_EQ(i.pid, session.timelines[0].pid);
  EXPECT_TRUE(session.epoch_note.has_value());
}

TEST(RecorderTest, DisabledRegionRecordsNothing) {
  Recorder recorder(Config({"comm"}));
  RegionHandle h = recorder.BeginRegion("main", "util");
  EXPECT_FALSE(h.enabled());
  recorder.EndRegion(h);
  EXPECT_EQ(recorder.Flush().interval_count(), 0u);
}

TEST(RecorderTest, EmptyConfigRecordsNothingAndStarRecordsAll) {
  Recorder none{RegionConfig{}};
  none.EndRegion(none.BeginRegion("x", "anything"));
  EXPECT_EQ(none.Flush().interval_count(), 0u);

  Recorder all(Config({std::string(kAllCategories)}));
  all.EndRegion(all.BeginRegion("x", "anything"));
  all.EndRegion(all.BeginRegion("y", ""));
  EXPECT_EQ(all.Flush().interval_count(), 2u);
}

TEST(RecorderTest, OneOfTwoCategoriesEnabled) {
  Recorder recorder(Config({"comm"}));
  recorder.EndRegion(recorder.BeginRegion("send", "comm"));
  recorder.EndRegion(recorder.BeginRegion("pack", "util"));
  TraceSession session = recorder.Flush();
  ASSERT_EQ(session.interval_count(), 1u);
  EXPECT_EQ(session.timelines[0].intervals[0].name, "send");
}

TEST(RecorderTest, NonLifoEndIsReported) {
  Recorder recorder(Config({"c"}));
  RegionHandle a = recorder.BeginRegion("a", "c");
  RegionHandle b = recorder.BeginRegion("b", "c");
  try {
    recorder.EndRegion(a);
    FAIL();
  } catch (const NonLifoEndError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonLifoEnd);
    EXPECT_EQ(e.name(), "a");
    EXPECT_EQ(e.expected_top(), "b");
  }
  recorder.EndRegion(b);
  recorder.EndRegion(a);
  EXPECT_EQ(recorder.Flush().interval_count(), 2u);
}

TEST(RecorderTest, DisabledRegionsStillCheckLifo) {
  Recorder recorder(Config({}));
  RegionHandle a = recorder.BeginRegion("a", "c");
  RegionHandle b = recorder.BeginRegion("b", "c");
  EXPECT_EQ(KindOf([&] { recorder.EndRegion(a); }), ErrorKind::kNonLifoEnd);
  recorder.EndRegion(b);
  recorder.EndRegion(a);
  EXPECT_EQ(KindOf([&] { recorder.EndRegion(a); }), ErrorKind::kNonLifoEnd);
}

TEST(RecorderTest, EndOnWrongThread) {
  Recorder recorder(Config({"c"}));
  RegionHandle h = recorder.BeginRegion("a", "c");
  ErrorKind kind = ErrorKind::kIo;
  std::thread other([&] {
    try {
      recorder.EndRegion(h);
    } catch (const Error& e) {
      kind = e.kind();
    }
  });
  other.join();
  EXPECT_EQ(kind, ErrorKind::kEndOnWrongThread);
  recorder.EndRegion(h);
}

TEST(RecorderTest, EmptyNameRejected) {
  Recorder recorder(Config({"c"}));
  EXPECT_EQ(KindOf([&] { recorder.BeginRegion("", "c"); }),
            ErrorKind::kInvalidConfig);
}

TEST(RecorderTest, HandlesFromAnotherRecorderAreRejected) {
  Recorder a(Config({"c"}));
  Recorder b(Config({"c"}));
  RegionHandle h = a.BeginRegion("x", "c");
  EXPECT_EQ(KindOf([&] { b.EndRegion(h); }), ErrorKind::kEndOnWrongThread);
  a.EndRegion(h);
}

TEST(RecorderTest, ToggleIsSampledAtBegin) {
  Recorder recorder(Config({}));
  RegionHandle h = recorder.BeginRegion("late", "c");
  recorder.SetEnabledCategories({"c"});
  recorder.EndRegion(h);
  EXPECT_EQ(recorder.Flush().interval_count(), 0u);

  RegionHandle on = recorder.BeginRegion("early", "c");
  recorder.SetEnabledCategories({});
  recorder.EndRegion(on);
  TraceSession session = recorder.Flush();
  ASSERT_EQ(session.interval_count(), 1u);
  EXPECT_EQ(session.timelines[0].intervals[0].name, "early");
  EXPECT_FALSE(recorder.IsEnabled("c"));
}

TEST(RecorderTest, FlushTwiceSecondIsEmpty) {
  Recorder recorder(Config({"c"}));
  recorder.EndRegion(recorder.BeginRegion("x", "c"));
  EXPECT_EQ(recorder.Flush().interval_count(), 1u);
  EXPECT_EQ(recorder.Flush().interval_count(), 0u);
}

TEST(RecorderTest, FlushClosesOpenRegionsWithWarning) {
  Recorder recorder(Config({"c"}));
  recorder.BeginRegion("outer", "c");
  recorder.BeginRegion("inner", "c");
  std::vector<std::string> warnings;
  TraceSession session = recorder.Flush(&warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("outer"), std::string::npos);
  EXPECT_NE(warnings[0].find("inner"), std::string::npos);
  ASSERT_EQ(session.interval_count(), 2u);
  EXPECT_EQ(session.timelines[0].intervals[1].depth, 1);
}

TEST(RecorderTest, TwoThreadsDistinctTidsAndNames) {
  Recorder recorder(Config({"c"}));
  recorder.SetThreadName("main");
  recorder.EndRegion(recorder.BeginRegion("m", "c"));
  std::thread worker([&] {
    recorder.SetThreadName("worker");
    recorder.EndRegion(recorder.BeginRegion("w", "c"));
  });
  worker.join();
  TraceSession session = recorder.Flush();
  ASSERT_EQ(session.timelines.size(), 2u);
  EXPECT_NE(session.timelines[0].tid, session.timelines[1].tid);
  EXPECT_EQ(session.timelines[0].pid, session.timelines[1].pid);
  std::set<std::string> names;
  for (const auto& t : session.timelines) names.insert(*t.thread_name);
  EXPECT_EQ(names, (std::set<std::string>{"main", "worker"}));
}

TEST(RecorderTest, NestedRegionsNestInTrace) {
  Recorder recorder(Config({"c"}));
  RegionHandle a = recorder.BeginRegion("a", "c");
  RegionHandle b = recorder.BeginRegion("b", "c");
  recorder.EndRegion(recorder.BeginRegion("c", "c"));
  recorder.EndRegion(b);
  recorder.EndRegion(a);
  TraceSession session = recorder.Flush();
  const auto& intervals = session.timelines.at(0).intervals;
  ASSERT_EQ(intervals.size(), 3u);
  EXPECT_EQ(intervals[0].depth, 0);
  EXPECT_EQ(intervals[1].depth, 1);
  EXPECT_EQ(intervals[2].depth, 2);
  // The tick clock makes every reading distinct.
  EXPECT_LT(intervals[0].start_us, intervals[1].start_us);
  EXPECT_GT(intervals[0].end_us, intervals[1].end_us);
}

TEST(ScopedRegionTest, ReturnsBodyResult) {
  Recorder recorder(Config({"c"}));
  int value = ScopedRegion(recorder, "r", "c", [] { return 7; });
  EXPECT_EQ(value, 7);
  EXPECT_EQ(recorder.Flush().interval_count(), 1u);
}

TEST(ScopedRegionTest, FailurePropagatesAndRegionCloses) {
  Recorder recorder(Config({"c"}));
  EXPECT_THROW(ScopedRegion(recorder, "r", "c",
                            []() -> int { throw std::runtime_error("x"); }),
               std::runtime_error);
  std::vector<std::string> warnings;
  EXPECT_EQ(recorder.Flush(&warnings).interval_count(), 1u);
  EXPECT_TRUE(warnings.empty());
}

TEST(ScopedRegionTest, NestedScopesAndRaii) {
  Recorder recorder(Config({"c"}));
  ScopedRegion(recorder, "outer", "c", [&] {
    RegionScope scope(recorder, "inner", "c");
    ScopedRegion(recorder, "leaf", "c", [] {});
  });
  TraceSession session = recorder.Flush();
  const auto& intervals = session.timelines.at(0).intervals;
  ASSERT_EQ(intervals.size(), 3u);
  EXPECT_EQ(intervals[2].name, "leaf");
  EXPECT_EQ(intervals[2].depth, 2);
}

TEST(RegionConfigTest, ParseCategoryList) {
  EXPECT_EQ(ParseCategoryList("a, b,,c "), (CategorySet{"a", "b", "c"}));
  EXPECT_TRUE(ParseCategoryList("").empty());
}

TEST(RegionConfigTest, EnvironmentSeedsCategories) {
  ::setenv(kCategoriesEnvVar, "send,lock", 1);
  EXPECT_EQ(RegionConfig::FromEnvironment({"x"}).enabled_categories,
            (CategorySet{"lock", "send"}));
  ::unsetenv(kCategoriesEnvVar);
  EXPECT_EQ(RegionConfig::FromEnvironment({"x"}).enabled_categories,
            (CategorySet{"x"}));
}

TEST(SteadyClockTest, MonotoneAndQuantized) {
  SteadyClock clock;
  double prev = clock.NowUs();
  for (int i = 0; i < 1000; ++i) {
    double now = clock.NowUs();
    EXPECT_GE(now, prev);
    EXPECT_EQ(now * 1024, std::floor(now * 1024));
    prev = now;
  }
}

TEST(RecorderStressTest, ManyThreadsStayWellNested) {
  Recorder recorder(Config({"on"}));
  constexpr int kThreads = 8;
  constexpr int kRegions = 2000;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&recorder, t] {
      for (int i = 0; i < kRegions; ++i) {
        RegionScope outer(recorder, "outer", "on");
        RegionScope hidden(recorder, "hidden", "off");
        if ((i + t) % 3 == 0) RegionScope inner(recorder, "inner", "on");
      }
    });
  }
  for (auto& t : threads) t.join();
  TraceSession session = recorder.Flush();
  EXPECT_EQ(session.timelines.size(), static_cast<size_t>(kThreads));
  size_t inner = 0;
  for (const auto& timeline : session.timelines) {
    for (const auto& i : timeline.intervals) {
      EXPECT_NE(i.name, "hidden");
      inner += i.name == "inner";
    }
  }
  EXPECT_GT(inner, 0u);
  EXPECT_EQ(session.interval_count(), kThreads * kRegions + inner);
  // Survives the exchange format too.
  EXPECT_EQ(ReadChromiumSession(WriteChromiumTrace(session)).interval_count(),
            session.interval_count());
}

double MedianPairNs(Recorder& recorder, std::string_view category) {
  constexpr int kBatch = 1000;
  std::vector<double> per_pair;
  for (int round = 0; round < 51; ++round) {
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < kBatch; ++i) {
      recorder.EndRegion(recorder.BeginRegion("hot", category));
    }
    auto end = std::chrono::steady_clock::now();
    per_pair.push_back(
        std::chrono::duration<double, std::nano>(end - start).count() / kBatch);
    recorder.Flush();
  }
  std::sort(per_pair.begin(), per_pair.end());
  return per_pair[per_pair.size() / 2];
}

TEST(RecorderOverheadTest, DisabledAndEnabledPairCosts) {
  Recorder recorder(RegionConfig{{"on"}, nullptr, 4096});
  const double disabled = MedianPairNs(recorder, "off");
  const double enabled = MedianPairNs(recorder, "on");
  RecordProperty("disabled_pair_ns", std::to_string(disabled));
  RecordProperty("enabled_pair_ns", std::to_string(enabled));
  EXPECT_LT(disabled, 50.0);
  EXPECT_LT(enabled, 1000.0);
}

}  // namespace
}  // namespace proftree
