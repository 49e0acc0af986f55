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

#ifndef PROFTREE_INSTRUMENT_H_
#define PROFTREE_INSTRUMENT_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "proftree/trace_model.h"

namespace proftree {

class MonotonicClock {
 public:
  virtual ~MonotonicClock() = default;
  // Microseconds since the clock's epoch; never decreases.
  virtual double NowUs() const = 0;
};

// std::chrono::steady_clock relative to construction time. Readings are
// quantized to 2^-10 us so that sums and differences of timestamps are exact
// in double precision for any realistic session length.
class SteadyClock : public MonotonicClock {
 public:
  SteadyClock();
  double NowUs() const override;

 private:
  std::chrono::steady_clock::time_point epoch_;
};

using CategorySet = std::set<std::string, std::less<>>;

// Matches every category when present in a CategorySet.
inline constexpr std::string_view kAllCategories = "*";

inline constexpr const char* kCategoriesEnvVar = "PROFTREE_CATEGORIES";

struct RegionConfig {
  // Empty records nothing.
  CategorySet enabled_categories;
  std::shared_ptr<const MonotonicClock> clock;
  size_t buffer_capacity_hint = 4096;

  // Seeds enabled_categories from PROFTREE_CATEGORIES (comma separated) when
  // the variable is set, otherwise uses `fallback`.
  static RegionConfig FromEnvironment(CategorySet fallback = {});
};

CategorySet ParseCategoryList(std::string_view comma_separated);

class Recorder;

// Token pairing a begin with its end. Cheap to copy; only meaningful on the
// thread that opened it.
class RegionHandle {
 public:
  RegionHandle() = default;

  bool enabled() const { return enabled_; }
  double open_timestamp_us() const { return open_timestamp_us_; }

 private:
  friend class Recorder;

  const void* owner_ = nullptr;
  uint64_t id_ = 0;
  double open_timestamp_us_ = 0;
  bool enabled_ = false;
};

// Collects scoped regions into per-thread append-only buffers.
//
// BeginRegion/EndRegion may be called concurrently from any number of
// threads. Flush must run while no other thread is inside the recorder.
class Recorder {
 public:
  explicit Recorder(RegionConfig config = {});
  ~Recorder();

  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  // Enablement is decided here; toggling the category before the matching
  // end has no effect on this region.
  RegionHandle BeginRegion(std::string_view name, std::string_view category);
  // Throws NonLifoEndError or Error(kEndOnWrongThread).
  void EndRegion(const RegionHandle& handle);

  void SetEnabledCategories(CategorySet categories);
  CategorySet enabled_categories() const;
  bool IsEnabled(std::string_view category) const;

  // Names the calling thread in flushed sessions.
  void SetThreadName(std::string name);

  // Drains every thread's buffer into one session. Regions still open are
  // closed at the flush instant and described in `warnings`.
  TraceSession Flush(std::vector<std::string>* warnings = nullptr);

  const MonotonicClock& clock() const { return *clock_; }
  double NowUs() const { return clock_->NowUs(); }

  // Process-wide recorder seeded from PROFTREE_CATEGORIES.
  static Recorder& Default();

 private:
  struct ThreadBuffer;

  ThreadBuffer& LocalBuffer();

  const uint64_t uid_;
  std::shared_ptr<const MonotonicClock> clock_;
  size_t capacity_hint_;
  const int64_t pid_;
  std::string epoch_note_;

  mutable std::mutex config_mutex_;
  CategorySet categories_;
  std::atomic<uint64_t> config_version_{1};

  std::mutex registry_mutex_;
  std::vector<std::unique_ptr<ThreadBuffer>> buffers_;
};

// Ends its region on scope exit, including during unwinding. End-time errors
// are swallowed here; use ScopedRegion to observe them.
class RegionScope {
 public:
  RegionScope(Recorder& recorder, std::string_view name,
              std::string_view category)
      : recorder_(recorder), handle_(recorder.BeginRegion(name, category)) {}
  ~RegionScope();

  RegionScope(const RegionScope&) = delete;
  RegionScope& operator=(const RegionScope&) = delete;

 private:
  Recorder& recorder_;
  RegionHandle handle_;
};

// Runs `body` inside a region and returns its result. The region is closed
// before an exception from `body` propagates.
template <typename Body>
decltype(auto) ScopedRegion(Recorder& recorder, std::string_view name,
                            std::string_view category, Body&& body) {
  RegionHandle handle = recorder.BeginRegion(name, category);
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<Body>>) {
      std::invoke(std::forward<Body>(body));
      recorder.EndRegion(handle);
    } else {
      auto result = std::invoke(std::forward<Body>(body));
      recorder.EndRegion(handle);
      return result;
    }
  } catch (...) {
    try {
      recorder.EndRegion(handle);
    } catch (...) {
      // Already ended (the throw came from EndRegion itself) or misnested;
      // the original exception is the one worth reporting.
    }
    throw;
  }
}

// Caliper-style free functions on Recorder::Default().
RegionHandle BeginRegion(std::string_view name, std::string_view category);
void EndRegion(const RegionHandle& handle);

}  // namespace proftree

#endif  // PROFTREE_INSTRUMENT_H_
