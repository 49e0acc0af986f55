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

#include "proftree/compare.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "proftree/error.h"
#include "proftree/trace_io.h"

namespace proftree {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;
using ComparisonLevel = std::map<std::string, ComparisonNode>;
using ProfileLevel = std::map<std::string, ProfileNode>;

std::optional<double> OneSidedMetric(const ProfileNode& node, Metric metric) {
  try {
    return NodeMetric(node, metric);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void Unify(const ProfileLevel* baseline, const ProfileLevel* experimental,
           Metric metric, Path& path, ComparisonLevel& out,
           std::vector<Path>& zero_paths) {
  std::vector<std::string> names;
  if (baseline) {
    for (const auto& [name, node] : *baseline) names.push_back(name);
  }
  if (experimental) {
    for (const auto& [name, node] : *experimental) {
      if (!baseline || !baseline->contains(name)) names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());

  for (const std::string& name : names) {
    const ProfileNode* b = nullptr;
    const ProfileNode* e = nullptr;
    if (baseline) {
      if (auto it = baseline->find(name); it != baseline->end()) b = &it->second;
    }
    if (experimental) {
      if (auto it = experimental->find(name); it != experimental->end()) {
        e = &it->second;
      }
    }
    path.push_back(name);
    ComparisonNode& node = out[name];
    node.name = name;
    if (b && e) {
      node.presence = Presence::kBoth;
      try {
        node.baseline = NodeMetric(*b, metric);
        node.experimental = NodeMetric(*e, metric);
      } catch (const Error&) {
        throw Error(ErrorKind::kUndefinedMetric,
                    std::string(MetricName(metric)) + " at " + JoinPath(path));
      }
      if (*node.experimental > 0) {
        node.ratio = *node.baseline / *node.experimental;
      } else {
        node.zero_denominator = true;
        zero_paths.push_back(path);
      }
    } else if (b) {
      node.presence = Presence::kBaselineOnly;
      node.baseline = OneSidedMetric(*b, metric);
    } else {
      node.presence = Presence::kExperimentalOnly;
      node.experimental = OneSidedMetric(*e, metric);
    }
    if (b) node.baseline_sum = b->stats.sum;
    if (e) node.experimental_sum = e->stats.sum;
    Unify(b ? &b->children : nullptr, e ? &e->children : nullptr, metric,
          path, node.children, zero_paths);
    path.pop_back();
  }
}

void Walk(const ComparisonLevel& level, Path& path,
          const std::function<void(const Path&, const ComparisonNode&)>& fn) {
  for (const auto& [name, node] : level) {
    path.push_back(name);
    fn(path, node);
    Walk(node.children, path, fn);
    path.pop_back();
  }
}

std::string FormatFixed(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, value);
  return buffer;
}

// Shared box-drawing layout for both tree kinds.
template <typename Node, typename LineFn>
void RenderLevel(const std::map<std::string, Node>& level,
                 const std::string& prefix, bool top, const LineFn& line,
                 std::string& out) {
  size_t i = 0;
  for (const auto& [name, node] : level) {
    const bool last = ++i == level.size();
    std::string child_prefix;
    if (top) {
      out += line(node);
    } else {
      out += prefix + (last ? "└─ " : "├─ ") + line(node);
      child_prefix = prefix + (last ? "   " : "│  ");
    }
    out += '\n';
    RenderLevel(node.children, child_prefix, false, line, out);
  }
}

constexpr const char* kRed = "\033[31m";
constexpr const char* kGreen = "\033[32m";
constexpr const char* kReset = "\033[0m";

OrderedJson OptionalJson(const std::optional<double>& value) {
  return value ? OrderedJson(*value) : OrderedJson(nullptr);
}

std::optional<double> OptionalFromJson(const Json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

std::string CsvField(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string CsvNumber(const std::optional<double>& value) {
  return value ? FormatNumber(*value) : std::string();
}

}  // namespace

std::string_view PresenceName(Presence presence) {
  switch (presence) {
    case Presence::kBoth:
      return "both";
    case Presence::kBaselineOnly:
      return "baseline_only";
    case Presence::kExperimentalOnly:
      return "experimental_only";
  }
  return "both";
}

std::optional<Presence> ParsePresence(std::string_view name) {
  for (Presence p : {Presence::kBoth, Presence::kBaselineOnly,
                     Presence::kExperimentalOnly}) {
    if (PresenceName(p) == name) return p;
  }
  return std::nullopt;
}

const ComparisonNode* ComparisonTree::Find(const Path& path) const {
  const ComparisonLevel* level = &roots;
  const ComparisonNode* node = nullptr;
  for (const std::string& name : path) {
    auto it = level->find(name);
    if (it == level->end()) return nullptr;
    node = &it->second;
    level = &node->children;
  }
  return node;
}

void ComparisonTree::ForEach(
    const std::function<void(const Path&, const ComparisonNode&)>& fn) const {
  Path path;
  Walk(roots, path, fn);
}

ComparisonTree Compare(const CallTreeProfile& baseline,
                       const CallTreeProfile& experimental, Metric metric) {
  ComparisonTree tree;
  tree.metric = metric;
  tree.baseline_label = baseline.label;
  tree.experimental_label = experimental.label;
  Path path;
  Unify(&baseline.roots, &experimental.roots, metric, path, tree.roots,
        tree.zero_denominator_paths);
  return tree;
}

std::vector<RankedNode> RankWorst(const ComparisonTree& tree, size_t n,
                                  RankWeight weight_by) {
  std::vector<RankedNode> ranked;
  tree.ForEach([&](const Path& path, const ComparisonNode& node) {
    if (!node.ratio) return;
    double weight = weight_by == RankWeight::kBaselineSum ? node.baseline_sum : 1.0;
    ranked.push_back({path, *node.ratio, weight});
  });
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedNode& a, const RankedNode& b) {
              if (a.ratio != b.ratio) return a.ratio < b.ratio;
              if (a.weight != b.weight) return a.weight > b.weight;
              return a.path < b.path;
            });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

std::string RenderTree(const ComparisonTree& tree,
                       const RenderOptions& options) {
  auto line = [&options](const ComparisonNode& node) {
    std::string text;
    const char* color = nullptr;
    if (node.ratio) {
      text = FormatFixed(*node.ratio, options.precision) + " " + node.name;
      if (*node.ratio < options.low_threshold) {
        text += " ";
        text += kSlowerMarker;
        color = kRed;
      } else if (*node.ratio > options.high_threshold) {
        text += " ";
        text += kFasterMarker;
        color = kGreen;
      }
    } else if (node.zero_denominator) {
      text = "n/a " + node.name + " (zero experimental time)";
    } else if (node.presence == Presence::kBaselineOnly) {
      text = "n/a " + node.name + " (baseline only)";
    } else {
      text = "n/a " + node.name + " (experimental only)";
    }
    if (options.ansi_color && color) text = color + text + kReset;
    return text;
  };
  std::string out;
  RenderLevel(tree.roots, "", true, line, out);
  return out;
}

std::string RenderTree(const CallTreeProfile& profile,
                       const RenderOptions& options) {
  auto line = [&options](const ProfileNode& node) {
    std::string value;
    try {
      value = FormatFixed(NodeMetric(node, options.profile_metric),
                          options.precision);
    } catch (const Error&) {
      value = "n/a";
    }
    return value + " " + node.name;
  };
  std::string out;
  RenderLevel(profile.roots, "", true, line, out);
  return out;
}

SummaryStats ComputeSummaryStats(const ComparisonTree& tree,
                                 const PatternSet& filter) {
  std::vector<double> ratios;
  tree.ForEach([&](const Path&, const ComparisonNode& node) {
    if (!node.ratio) return;
    if (!filter.empty() && !filter.Matches(node.name)) return;
    ratios.push_back(*node.ratio);
  });
  if (ratios.empty()) {
    std::string what = "no compared nodes";
    if (!filter.empty()) what += " match " + JoinPath(filter.patterns(), ", ");
    throw Error(ErrorKind::kNoMatchingNodes, what);
  }
  double sum = 0;
  double log_sum = 0;
  for (double r : ratios) {
    sum += r;
    log_sum += std::log(r);
  }
  const double n = static_cast<double>(ratios.size());
  return {std::exp(log_sum / n), sum / n, ratios.size()};
}

std::string ComparisonToJson(const ComparisonTree& tree) {
  OrderedJson out = OrderedJson::object();
  out["metric"] = MetricName(tree.metric);
  out["baseline_label"] = tree.baseline_label;
  out["experimental_label"] = tree.experimental_label;
  OrderedJson nodes = OrderedJson::array();
  tree.ForEach([&nodes](const Path& path, const ComparisonNode& node) {
    OrderedJson n = OrderedJson::object();
    n["path"] = path;
    n["presence"] = PresenceName(node.presence);
    n["baseline"] = OptionalJson(node.baseline);
    n["experimental"] = OptionalJson(node.experimental);
    n["ratio"] = OptionalJson(node.ratio);
    n["zero_denominator"] = node.zero_denominator;
    n["baseline_sum"] = node.baseline_sum;
    n["experimental_sum"] = node.experimental_sum;
    nodes.push_back(std::move(n));
  });
  out["nodes"] = std::move(nodes);
  return out.dump(1) + "\n";
}

ComparisonTree ComparisonFromJson(std::string_view bytes) {
  ComparisonTree tree;
  try {
    Json doc = Json::parse(bytes.begin(), bytes.end());
    auto metric = ParseMetric(doc.at("metric").get<std::string>());
    if (!metric) throw Error(ErrorKind::kMalformedDocument, "unknown metric");
    tree.metric = *metric;
    tree.baseline_label = doc.at("baseline_label").get<std::string>();
    tree.experimental_label = doc.at("experimental_label").get<std::string>();
    for (const Json& n : doc.at("nodes")) {
      Path path = n.at("path").get<Path>();
      if (path.empty()) {
        throw Error(ErrorKind::kMalformedDocument, "node with empty path");
      }
      ComparisonLevel* level = &tree.roots;
      for (size_t i = 0; i + 1 < path.size(); ++i) {
        auto it = level->find(path[i]);
        if (it == level->end()) {
          throw PathError(ErrorKind::kDanglingPath, path);
        }
        level = &it->second.children;
      }
      if (level->contains(path.back())) {
        throw PathError(ErrorKind::kDuplicatePath, path);
      }
      ComparisonNode& node = (*level)[path.back()];
      node.name = path.back();
      auto presence = ParsePresence(n.at("presence").get<std::string>());
      if (!presence) {
        throw Error(ErrorKind::kMalformedDocument, "unknown presence");
      }
      node.presence = *presence;
      node.baseline = OptionalFromJson(n.at("baseline"));
      node.experimental = OptionalFromJson(n.at("experimental"));
      node.ratio = OptionalFromJson(n.at("ratio"));
      node.zero_denominator = n.at("zero_denominator").get<bool>();
      node.baseline_sum = n.at("baseline_sum").get<double>();
      node.experimental_sum = n.at("experimental_sum").get<double>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  tree.ForEach([&tree](const Path& path, const ComparisonNode& node) {
    if (node.zero_denominator) tree.zero_denominator_paths.push_back(path);
  });
  return tree;
}

std::string ComparisonToCsv(const ComparisonTree& tree) {
  std::ostringstream out;
  out << "path,presence,baseline,experimental,ratio,zero_denominator\n";
  tree.ForEach([&out](const Path& path, const ComparisonNode& node) {
    out << CsvField(JoinPath(path)) << ',' << PresenceName(node.presence)
        << ',' << CsvNumber(node.baseline) << ','
        << CsvNumber(node.experimental) << ',' << CsvNumber(node.ratio) << ','
        << (node.zero_denominator ? "true" : "false") << '\n';
  });
  return out.str();
}

}  // namespace proftree
