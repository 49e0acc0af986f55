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

#include <sys/syscall.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <ctime>

#include "proftree/error.h"

namespace proftree {

SteadyClock::SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}

double SteadyClock::NowUs() const {
  const int64_t ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - epoch_)
                         .count();
  // ns * 1024 / 1000 units of 2^-10 us.
  return static_cast<double>(ns * 128 / 125) / 1024.0;
}

CategorySet ParseCategoryList(std::string_view list) {
  CategorySet out;
  while (!list.empty()) {
    size_t comma = list.find(',');
    std::string_view item = list.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace(item);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return out;
}

RegionConfig RegionConfig::FromEnvironment(CategorySet fallback) {
  RegionConfig config;
  if (const char* env = std::getenv(kCategoriesEnvVar)) {
    config.enabled_categories = ParseCategoryList(env);
  } else {
    config.enabled_categories = std::move(fallback);
  }
  return config;
}

namespace {

std::atomic<uint64_t> next_recorder_uid{1};

int64_t CurrentTid() { return static_cast<int64_t>(::syscall(SYS_gettid)); }

bool CategoryEnabled(const CategorySet& set, std::string_view category) {
  if (set.empty()) return false;
  return set.find(category) != set.end() ||
         set.find(kAllCategories) != set.end();
}

std::string WallClockNote() {
  std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[64];
  std::strftime(buffer, sizeof(buffer), "epoch %Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

struct TlsEntry {
  uint64_t recorder_uid;
  void* buffer;
};

thread_local std::vector<TlsEntry> tls_buffers;

}  // namespace

struct Recorder::ThreadBuffer {
  struct Slot {
    std::string name;
    std::string category;
    double start_us = 0;
    double duration_us = -1;  // negative while open
  };
  struct Open {
    std::string name;  // reassigned in place so capacity is reused
    uint64_t id = 0;
    size_t slot = 0;
    bool enabled = false;
  };

  int64_t tid = 0;
  std::string thread_name;
  std::vector<Slot> events;
  std::vector<Open> stack;
  size_t depth = 0;
  uint64_t next_id = 1;
  uint64_t seen_version = 0;
  CategorySet categories;
  bool all_enabled = false;
  // One-entry memo: hot loops almost always reuse the previous category.
  bool memo_valid = false;
  bool memo_enabled = false;
  std::string memo_category;
};

Recorder::Recorder(RegionConfig config)
    : uid_(next_recorder_uid.fetch_add(1)),
      clock_(config.clock ? std::move(config.clock)
                          : std::make_shared<SteadyClock>()),
      capacity_hint_(std::max<size_t>(1, config.buffer_capacity_hint)),
      pid_(static_cast<int64_t>(::getpid())),
      epoch_note_(WallClockNote()),
      categories_(std::move(config.enabled_categories)) {}

Recorder::~Recorder() = default;

Recorder::ThreadBuffer& Recorder::LocalBuffer() {
  for (const TlsEntry& entry : tls_buffers) {
    if (entry.recorder_uid == uid_) {
      return *static_cast<ThreadBuffer*>(entry.buffer);
    }
  }
  auto buffer = std::make_unique<ThreadBuffer>();
  buffer->tid = CurrentTid();
  buffer->events.reserve(capacity_hint_);
  buffer->stack.resize(16);
  ThreadBuffer* raw = buffer.get();
  {
    std::lock_guard<std::mutex> lock(registry_mutex_);
    buffers_.push_back(std::move(buffer));
  }
  tls_buffers.push_back({uid_, raw});
  return *raw;
}

RegionHandle Recorder::BeginRegion(std::string_view name,
                                   std::string_view category) {
  if (name.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "region name must be non-empty");
  }
  ThreadBuffer& buffer = LocalBuffer();
  const uint64_t version = config_version_.load(std::memory_order_acquire);
  if (version != buffer.seen_version) {
    std::lock_guard<std::mutex> lock(config_mutex_);
    buffer.categories = categories_;
    buffer.all_enabled = buffer.categories.contains(kAllCategories);
    buffer.memo_valid = false;
    buffer.seen_version = config_version_.load(std::memory_order_relaxed);
  }
  if (!buffer.memo_valid || buffer.memo_category != category) {
    buffer.memo_category.assign(category);
    buffer.memo_enabled =
        buffer.all_enabled || buffer.categories.contains(category);
    buffer.memo_valid = true;
  }

  RegionHandle handle;
  handle.owner_ = &buffer;
  handle.id_ = buffer.next_id++;
  handle.enabled_ = buffer.memo_enabled;

  if (buffer.depth == buffer.stack.size()) buffer.stack.resize(buffer.depth * 2);
  ThreadBuffer::Open& open = buffer.stack[buffer.depth++];
  open.name.assign(name);
  open.id = handle.id_;
  open.enabled = handle.enabled_;

  if (handle.enabled_) {
    handle.open_timestamp_us_ = clock_->NowUs();
    open.slot = buffer.events.size();
    buffer.events.push_back({std::string(name), std::string(category),
                             handle.open_timestamp_us_, -1});
  }
  return handle;
}

void Recorder::EndRegion(const RegionHandle& handle) {
  ThreadBuffer& buffer = LocalBuffer();
  if (handle.owner_ != &buffer) {
    throw Error(ErrorKind::kEndOnWrongThread,
                "region handle closed on a thread that did not open it");
  }
  if (buffer.depth == 0) {
    throw NonLifoEndError("(unknown)", "(none)");
  }
  ThreadBuffer::Open& top = buffer.stack[buffer.depth - 1];
  if (top.id != handle.id_) {
    std::string name = "(unknown)";
    for (size_t i = 0; i < buffer.depth; ++i) {
      if (buffer.stack[i].id == handle.id_) name = buffer.stack[i].name;
    }
    throw NonLifoEndError(name, top.name);
  }
  if (top.enabled) {
    ThreadBuffer::Slot& slot = buffer.events[top.slot];
    slot.duration_us = clock_->NowUs() - slot.start_us;
  }
  --buffer.depth;
}

void Recorder::SetEnabledCategories(CategorySet categories) {
  std::lock_guard<std::mutex> lock(config_mutex_);
  categories_ = std::move(categories);
  config_version_.fetch_add(1, std::memory_order_release);
}

CategorySet Recorder::enabled_categories() const {
  std::lock_guard<std::mutex> lock(config_mutex_);
  return categories_;
}

bool Recorder::IsEnabled(std::string_view category) const {
  std::lock_guard<std::mutex> lock(config_mutex_);
  return CategoryEnabled(categories_, category);
}

void Recorder::SetThreadName(std::string name) {
  LocalBuffer().thread_name = std::move(name);
}

TraceSession Recorder::Flush(std::vector<std::string>* warnings) {
  std::vector<TraceEvent> events;
  ThreadNames names;
  {
    std::lock_guard<std::mutex> lock(registry_mutex_);
    const double now = clock_->NowUs();
    size_t total = 0;
    for (const auto& buffer : buffers_) total += buffer->events.size();
    events.reserve(total);
    for (const auto& buffer : buffers_) {
      if (!buffer->thread_name.empty()) {
        names[{pid_, buffer->tid}] = buffer->thread_name;
      }
      if (buffer->depth > 0 && warnings) {
        std::vector<std::string> open;
        for (size_t i = 0; i < buffer->depth; ++i) {
          open.push_back(buffer->stack[i].name);
        }
        warnings->push_back(
            UnclosedBeginError(std::move(open), pid_, buffer->tid).what());
      }
      for (ThreadBuffer::Slot& slot : buffer->events) {
        double duration = slot.duration_us;
        if (duration < 0) duration = now - slot.start_us;
        events.push_back(MakeComplete(std::move(slot.name), slot.start_us,
                                      duration, pid_, buffer->tid,
                                      std::move(slot.category)));
      }
      buffer->events.clear();
      buffer->depth = 0;
    }
  }
  TraceSession session = BuildIntervals(events, names);
  session.epoch_note = epoch_note_;
  return session;
}

Recorder& Recorder::Default() {
  static Recorder recorder(RegionConfig::FromEnvironment());
  return recorder;
}

RegionScope::~RegionScope() {
  try {
    recorder_.EndRegion(handle_);
  } catch (const Error&) {
  }
}

RegionHandle BeginRegion(std::string_view name, std::string_view category) {
  return Recorder::Default().BeginRegion(name, category);
}

void EndRegion(const RegionHandle& handle) {
  Recorder::Default().EndRegion(handle);
}

}  // namespace proftree
