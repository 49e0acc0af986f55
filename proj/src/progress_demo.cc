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

#include "proftree/progress_demo.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "proftree/analyzers.h"
#include "proftree/error.h"
#include "proftree/trace_io.h"

namespace proftree {

namespace {

struct Request {
  int producer = 0;
  int sequence = 0;
};

void BusyWait(double us) {
  if (us <= 0) return;
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::nanoseconds(static_cast<int64_t>(us * 1000));
  while (std::chrono::steady_clock::now() < until) {
  }
}

constexpr auto kIdleBackoff = std::chrono::microseconds(20);

// State shared by the producers and the progress thread of one run.
class Engine {
 public:
  Engine(const DemoConfig& config, Recorder& recorder)
      : config_(config),
        recorder_(recorder),
        total_(static_cast<uint64_t>(config.producer_count) *
               static_cast<uint64_t>(config.requests_per_producer)) {}

  void Post(const Request& request) {
    RegionScope lock_region(recorder_, kQueueLockRegion, kLockCategory);
    std::lock_guard<std::mutex> lock(mutex_);
    if (config_.discipline == Discipline::kSharedQueue) {
      shared_.push_back(request);
    } else {
      incoming_.push_back(request);
    }
    enqueued_.fetch_add(1, std::memory_order_relaxed);
  }

  void RunProgress() {
    recorder_.SetThreadName("progress");
    bool first = true;
    while (completed_.load(std::memory_order_acquire) < total_) {
      size_t serviced = config_.discipline == Discipline::kSharedQueue
                            ? SharedPass()
                            : DualPass();
      if (first) {
        started_.store(true, std::memory_order_release);
        first = false;
      }
      if (serviced == 0) std::this_thread::sleep_for(kIdleBackoff);
    }
  }

  void WaitForStart() const {
    while (!started_.load(std::memory_order_acquire)) {
      std::this_thread::yield();
    }
  }

  uint64_t enqueued() const { return enqueued_.load(); }
  uint64_t completed() const { return completed_.load(); }

 private:
  void Service() {
    RegionScope step(recorder_, kProgressStepRegion, kProgressCategory);
    BusyWait(config_.service_time_us);
  }

  // Drains the shared queue while holding its lock.
  size_t SharedPass() {
    size_t serviced = 0;
    RegionScope lock_region(recorder_, kQueueLockRegion, kLockCategory);
    std::lock_guard<std::mutex> lock(mutex_);
    while (!shared_.empty()) {
      shared_.pop_front();
      Service();
      completed_.fetch_add(1, std::memory_order_release);
      ++serviced;
    }
    return serviced;
  }

  // Swaps the incoming queue out under the lock, services outside it.
  size_t DualPass() {
    {
      RegionScope lock_region(recorder_, kQueueLockRegion, kLockCategory);
      std::lock_guard<std::mutex> lock(mutex_);
      RegionScope swap(recorder_, kQueueSwapRegion, kQueueCategory);
      internal_.swap(incoming_);
    }
    const size_t serviced = internal_.size();
    for (size_t i = 0; i < serviced; ++i) {
      Service();
      completed_.fetch_add(1, std::memory_order_release);
    }
    internal_.clear();
    return serviced;
  }

  const DemoConfig& config_;
  Recorder& recorder_;
  const uint64_t total_;

  std::mutex mutex_;
  std::deque<Request> shared_;
  std::vector<Request> incoming_;
  // Owned by the progress thread.
  std::vector<Request> internal_;

  std::atomic<bool> started_{false};
  std::atomic<uint64_t> enqueued_{0};
  std::atomic<uint64_t> completed_{0};
};

void RunProducer(int index, const DemoConfig& config, Engine& engine,
                 Recorder& recorder, std::vector<double>& latencies) {
  recorder.SetThreadName("producer " + std::to_string(index));
  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL +
                      static_cast<uint64_t>(index));
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  latencies.reserve(static_cast<size_t>(config.requests_per_producer));
  engine.WaitForStart();
  for (int i = 0; i < config.requests_per_producer; ++i) {
    const double pause_us = config.compute_time_us * jitter(rng);
    const double begin = recorder.NowUs();
    {
      RegionScope isend(recorder, kIsendRegion, kSendCategory);
      engine.Post({index, i});
    }
    latencies.push_back(recorder.NowUs() - begin);
    std::this_thread::sleep_for(
        std::chrono::nanoseconds(static_cast<int64_t>(pause_us * 1000)));
  }
}

}  // namespace

std::string_view DisciplineName(Discipline discipline) {
  return discipline == Discipline::kSharedQueue ? "shared" : "dual";
}

std::optional<Discipline> ParseDiscipline(std::string_view name) {
  if (name == "shared") return Discipline::kSharedQueue;
  if (name == "dual") return Discipline::kDualQueue;
  return std::nullopt;
}

CategorySet DemoCategories() {
  return {std::string(kSendCategory), std::string(kLockCategory),
          std::string(kProgressCategory), std::string(kQueueCategory)};
}

void DemoConfig::Validate() const {
  if (producer_count < 1) {
    throw Error(ErrorKind::kInvalidConfig, "producer_count must be >= 1");
  }
  if (requests_per_producer < 1) {
    throw Error(ErrorKind::kInvalidConfig,
                "requests_per_producer must be >= 1");
  }
  if (!(service_time_us >= 0) || !std::isfinite(service_time_us)) {
    throw Error(ErrorKind::kInvalidConfig,
                "service_time_us must be non-negative");
  }
  if (!(compute_time_us >= 0) || !std::isfinite(compute_time_us)) {
    throw Error(ErrorKind::kInvalidConfig,
                "compute_time_us must be non-negative");
  }
}

std::vector<double> DemoResult::AllLatencies() const {
  std::vector<double> all;
  for (const auto& list : isend_latency_us) {
    all.insert(all.end(), list.begin(), list.end());
  }
  return all;
}

double DemoResult::MeanLatencyUs() const {
  std::vector<double> all = AllLatencies();
  if (all.empty()) return 0.0;
  return std::accumulate(all.begin(), all.end(), 0.0) /
         static_cast<double>(all.size());
}

double DemoResult::MedianLatencyUs() const { return Median(AllLatencies()); }

double DemoResult::P99LatencyUs() const {
  return Percentile(AllLatencies(), 99.0);
}

double Percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const size_t index =
      static_cast<size_t>(std::clamp(rank, 1.0, double(values.size()))) - 1;
  return values[index];
}

DemoResult RunDemo(const DemoConfig& config) {
  config.Validate();
  RegionConfig region_config =
      config.categories ? RegionConfig{*config.categories, nullptr, 4096}
                        : RegionConfig::FromEnvironment(DemoCategories());
  region_config.buffer_capacity_hint =
      static_cast<size_t>(config.requests_per_producer) * 4 + 64;
  Recorder recorder(std::move(region_config));
  Engine engine(config, recorder);

  DemoResult result;
  result.config = config;
  result.isend_latency_us.resize(static_cast<size_t>(config.producer_count));

  const double start = recorder.NowUs();
  std::thread progress([&engine] { engine.RunProgress(); });
  std::vector<std::thread> producers;
  producers.reserve(static_cast<size_t>(config.producer_count));
  for (int i = 0; i < config.producer_count; ++i) {
    producers.emplace_back([&, i] {
      RunProducer(i, config, engine, recorder,
                  result.isend_latency_us[static_cast<size_t>(i)]);
    });
  }
  for (std::thread& t : producers) t.join();
  progress.join();
  result.total_runtime_us = recorder.NowUs() - start;

  result.enqueued_count = engine.enqueued();
  result.completed_count = engine.completed();
  result.trace = recorder.Flush();
  return result;
}

SweepRow SummarizeRun(const DemoResult& result) {
  SweepRow row;
  row.discipline = result.config.discipline;
  row.producer_count = result.config.producer_count;
  row.requests_per_producer = result.config.requests_per_producer;
  row.service_time_us = result.config.service_time_us;
  row.seed = result.config.seed;
  row.mean_isend_us = result.MeanLatencyUs();
  row.median_isend_us = result.MedianLatencyUs();
  row.p99_isend_us = result.P99LatencyUs();
  row.total_runtime_us = result.total_runtime_us;
  row.completed_count = result.completed_count;
  return row;
}

std::vector<SweepRow> Sweep(std::span<const DemoConfig> configs,
                            const std::optional<std::filesystem::path>&
                                trace_dir) {
  std::vector<SweepRow> rows;
  rows.reserve(configs.size());
  for (const DemoConfig& config : configs) {
    DemoResult result = RunDemo(config);
    if (trace_dir) {
      WriteFile(*trace_dir /
                    TraceFileName(config.discipline, config.producer_count),
                WriteChromiumTrace(result.trace));
    }
    rows.push_back(SummarizeRun(result));
  }
  return rows;
}

std::string TraceFileName(Discipline discipline, int producer_count) {
  return std::string(DisciplineName(discipline)) + "_" +
         std::to_string(producer_count) + ".trace.json";
}

std::string SweepToCsv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "discipline,producers,requests,service_us,seed,mean_isend_us,"
         "median_isend_us,p99_isend_us,total_runtime_us,completed\n";
  for (const SweepRow& row : rows) {
    out << DisciplineName(row.discipline) << ',' << row.producer_count << ','
        << row.requests_per_producer << ',' << FormatNumber(row.service_time_us)
        << ',' << row.seed << ',' << FormatNumber(row.mean_isend_us) << ','
        << FormatNumber(row.median_isend_us) << ','
        << FormatNumber(row.p99_isend_us) << ','
        << FormatNumber(row.total_runtime_us) << ',' << row.completed_count
        << '\n';
  }
  return out.str();
}

}  // namespace proftree
