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

#include "proftree/trace_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "proftree/error.h"

namespace proftree {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Largest magnitude at which every integer is exactly representable.
constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

OrderedJson NumberJson(double value) {
  if (std::isfinite(value) && std::floor(value) == value &&
      std::fabs(value) < kMaxExactInteger) {
    return OrderedJson(static_cast<int64_t>(value));
  }
  return OrderedJson(value);
}

Json Parse(std::string_view bytes) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
}

std::string Stringify(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

int64_t ReadId(const Json& event, size_t index, const char* field) {
  auto it = event.find(field);
  if (it == event.end()) throw MissingFieldError(index, field);
  if (it->is_number_integer()) return it->get<int64_t>();
  if (it->is_number_float()) {
    double v = it->get<double>();
    if (std::floor(v) == v && std::fabs(v) < kMaxExactInteger) {
      return static_cast<int64_t>(v);
    }
  }
  throw Error(ErrorKind::kMalformedDocument,
              "event " + std::to_string(index) + " has non-integer \"" +
                  field + "\"");
}

double ReadTime(const Json& event, size_t index, const char* field) {
  auto it = event.find(field);
  if (it == event.end()) throw MissingFieldError(index, field);
  if (!it->is_number()) {
    throw Error(ErrorKind::kMalformedDocument,
                "event " + std::to_string(index) + " has non-numeric \"" +
                    field + "\"");
  }
  double v = it->get<double>();
  if (!std::isfinite(v) || v < 0) {
    throw Error(ErrorKind::kMalformedDocument,
                "event " + std::to_string(index) + " has negative or "
                "non-finite \"" + field + "\"");
  }
  return v;
}

std::string ReadString(const Json& event, size_t index, const char* field) {
  auto it = event.find(field);
  if (it == event.end()) throw MissingFieldError(index, field);
  if (!it->is_string()) {
    throw Error(ErrorKind::kMalformedDocument,
                "event " + std::to_string(index) + " has non-string \"" +
                    field + "\"");
  }
  return it->get<std::string>();
}

OrderedJson EventJson(std::string_view name, std::string_view category,
                      std::string_view phase, double ts,
                      const std::optional<double>& dur, int64_t pid,
                      int64_t tid, const Attributes& attributes) {
  OrderedJson out = OrderedJson::object();
  out["name"] = name;
  if (!category.empty()) out["cat"] = category;
  out["ph"] = phase;
  out["ts"] = NumberJson(ts);
  if (dur) out["dur"] = NumberJson(*dur);
  out["pid"] = pid;
  out["tid"] = tid;
  if (!attributes.empty()) {
    OrderedJson args = OrderedJson::object();
    for (const auto& [k, v] : attributes) args[k] = v;
    out["args"] = std::move(args);
  }
  return out;
}

OrderedJson ThreadNameJson(int64_t pid, int64_t tid, const std::string& name) {
  OrderedJson out = OrderedJson::object();
  out["name"] = "thread_name";
  out["ph"] = "M";
  out["ts"] = 0;
  out["pid"] = pid;
  out["tid"] = tid;
  out["args"] = OrderedJson{{"name", name}};
  return out;
}

std::string WrapEvents(OrderedJson events) {
  OrderedJson doc = OrderedJson::object();
  doc["traceEvents"] = std::move(events);
  doc["displayTimeUnit"] = "ms";
  return doc.dump();
}

bool ApproxLessEqual(double a, double b) {
  constexpr double kRel = 1e-9;
  return a <= b + kRel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

ChromiumTrace ReadChromiumTrace(std::string_view bytes) {
  Json doc = Parse(bytes);
  const Json* events = nullptr;
  if (doc.is_array()) {
    events = &doc;
  } else if (doc.is_object()) {
    auto it = doc.find("traceEvents");
    if (it == doc.end() || !it->is_array()) {
      throw Error(ErrorKind::kMalformedDocument,
                  "object form requires a \"traceEvents\" array");
    }
    events = &*it;
  } else {
    throw Error(ErrorKind::kMalformedDocument,
                "expected an array or an object with \"traceEvents\"");
  }

  ChromiumTrace trace;
  trace.events.reserve(events->size());
  for (size_t i = 0; i < events->size(); ++i) {
    const Json& e = (*events)[i];
    if (!e.is_object()) {
      throw Error(ErrorKind::kMalformedDocument,
                  "event " + std::to_string(i) + " is not an object");
    }
    std::string name = ReadString(e, i, "name");
    std::string ph = ReadString(e, i, "ph");

    if (ph == "M") {
      if (name != "thread_name") {
        ++trace.skipped_events;
        continue;
      }
      int64_t pid = ReadId(e, i, "pid");
      int64_t tid = ReadId(e, i, "tid");
      auto args = e.find("args");
      if (args == e.end() || !args->is_object() || !args->contains("name")) {
        throw MissingFieldError(i, "args.name");
      }
      trace.thread_names[{pid, tid}] = Stringify((*args)["name"]);
      continue;
    }

    TraceEvent event;
    if (ph == "B") {
      event.phase = Phase::kBegin;
    } else if (ph == "E") {
      event.phase = Phase::kEnd;
    } else if (ph == "X") {
      event.phase = Phase::kComplete;
    } else {
      ++trace.skipped_events;
      continue;
    }
    event.name = std::move(name);
    event.timestamp_us = ReadTime(e, i, "ts");
    event.pid = ReadId(e, i, "pid");
    event.tid = ReadId(e, i, "tid");
    if (event.phase == Phase::kComplete) {
      event.duration_us = ReadTime(e, i, "dur");
    }
    if (auto cat = e.find("cat"); cat != e.end() && !cat->is_null()) {
      event.category = Stringify(*cat);
    }
    if (auto args = e.find("args"); args != e.end() && args->is_object()) {
      for (const auto& [k, v] : args->items()) {
        event.attributes[k] = Stringify(v);
      }
    }
    trace.events.push_back(std::move(event));
  }
  return trace;
}

TraceSession ReadChromiumSession(std::string_view bytes) {
  ChromiumTrace trace = ReadChromiumTrace(bytes);
  return BuildIntervals(trace.events, trace.thread_names);
}

std::string WriteChromiumTrace(const TraceSession& session) {
  OrderedJson events = OrderedJson::array();
  for (const ThreadTimeline& timeline : session.timelines) {
    if (timeline.thread_name) {
      events.push_back(
          ThreadNameJson(timeline.pid, timeline.tid, *timeline.thread_name));
    }
    for (const Interval& interval : timeline.intervals) {
      events.push_back(EventJson(interval.name, interval.category, "X",
                                 interval.start_us, interval.duration_us,
                                 interval.pid, interval.tid,
                                 interval.attributes));
    }
  }
  return WrapEvents(std::move(events));
}

std::string WriteChromiumTrace(std::span<const TraceEvent> events) {
  OrderedJson out = OrderedJson::array();
  for (const TraceEvent& event : events) {
    std::string_view phase = event.phase == Phase::kBegin ? "B"
                             : event.phase == Phase::kEnd ? "E"
                                                          : "X";
    std::optional<double> dur;
    if (event.phase == Phase::kComplete) {
      dur = event.duration_us.value_or(0.0);
    }
    out.push_back(EventJson(event.name, event.category, phase,
                            event.timestamp_us, dur, event.pid, event.tid,
                            event.attributes));
  }
  return WrapEvents(std::move(out));
}

void ValidateProfileDocument(const NativeProfileDocument& doc) {
  if (doc.run_count < 1) {
    throw Error(ErrorKind::kMalformedDocument, "run_count must be positive");
  }
  std::set<std::vector<std::string>> paths;
  for (const ProfileDocumentNode& node : doc.nodes) {
    if (node.path.empty()) {
      throw Error(ErrorKind::kMalformedDocument, "node with empty path");
    }
    if (!paths.insert(node.path).second) {
      throw PathError(ErrorKind::kDuplicatePath, node.path);
    }
  }
  for (const ProfileDocumentNode& node : doc.nodes) {
    if (node.path.size() > 1) {
      std::vector<std::string> parent(node.path.begin(), node.path.end() - 1);
      if (!paths.contains(parent)) {
        throw PathError(ErrorKind::kDanglingPath, node.path);
      }
    }
    const std::string where = " at " + JoinPath(node.path);
    if (node.count == 0) {
      if (node.sum != 0 || node.min != 0 || node.max != 0 || node.sum_sq != 0) {
        throw Error(ErrorKind::kMalformedDocument,
                    "count 0 requires zero statistics" + where);
      }
      continue;
    }
    const double n = static_cast<double>(node.count);
    const double mean = node.sum / n;
    if (!ApproxLessEqual(node.min, mean) || !ApproxLessEqual(mean, node.max)) {
      throw Error(ErrorKind::kMalformedDocument,
                  "mean outside [min, max]" + where);
    }
    if (!ApproxLessEqual(node.sum * node.sum / n, node.sum_sq)) {
      throw Error(ErrorKind::kMalformedDocument,
                  "sum_sq below sum^2/count" + where);
    }
  }
}

NativeProfileDocument ReadProfile(std::string_view bytes) {
  Json doc = Parse(bytes);
  NativeProfileDocument out;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::kMalformedDocument,
                                      "profile must be a JSON object");
    out.metric_name = doc.at("metric_name").get<std::string>();
    const Json& runs = doc.at("run_count");
    if (!runs.is_number_unsigned() || runs.get<uint64_t>() == 0) {
      throw Error(ErrorKind::kMalformedDocument,
                  "run_count must be a positive integer");
    }
    out.run_count = runs.get<uint64_t>();
    if (auto it = doc.find("label"); it != doc.end()) {
      out.label = it->get<std::string>();
    }
    for (const Json& n : doc.at("nodes")) {
      ProfileDocumentNode node;
      node.path = n.at("path").get<std::vector<std::string>>();
      const Json& count = n.at("count");
      if (!count.is_number_unsigned()) {
        throw Error(ErrorKind::kMalformedDocument,
                    "count must be a non-negative integer");
      }
      node.count = count.get<uint64_t>();
      node.sum = n.at("sum").get<double>();
      node.min = n.at("min").get<double>();
      node.max = n.at("max").get<double>();
      node.sum_sq = n.at("sum_sq").get<double>();
      out.nodes.push_back(std::move(node));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  ValidateProfileDocument(out);
  return out;
}

std::string WriteProfile(const NativeProfileDocument& doc) {
  ValidateProfileDocument(doc);
  std::vector<const ProfileDocumentNode*> nodes;
  nodes.reserve(doc.nodes.size());
  for (const ProfileDocumentNode& node : doc.nodes) nodes.push_back(&node);
  // Lexicographic order on name vectors is depth-first with sorted siblings.
  std::sort(nodes.begin(), nodes.end(),
            [](const ProfileDocumentNode* a, const ProfileDocumentNode* b) {
              return a->path < b->path;
            });

  OrderedJson out = OrderedJson::object();
  out["metric_name"] = doc.metric_name;
  out["run_count"] = doc.run_count;
  out["label"] = doc.label;
  OrderedJson list = OrderedJson::array();
  for (const ProfileDocumentNode* node : nodes) {
    OrderedJson n = OrderedJson::object();
    n["path"] = node->path;
    n["count"] = node->count;
    n["sum"] = node->sum;
    n["min"] = node->min;
    n["max"] = node->max;
    n["sum_sq"] = node->sum_sq;
    list.push_back(std::move(n));
  }
  out["nodes"] = std::move(list);
  return out.dump(1) + "\n";
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo,
                "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo,
                "cannot write " + path.string());
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

std::string FormatNumber(double value) { return NumberJson(value).dump(); }

}  // namespace proftree
