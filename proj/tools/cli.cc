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

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "proftree/analyzers.h"
#include "proftree/compare.h"
#include "proftree/error.h"
#include "proftree/pattern.h"
#include "proftree/profile.h"
#include "proftree/progress_demo.h"
#include "proftree/trace_io.h"

namespace proftree {

namespace {

namespace fs = std::filesystem;

// Raised for flag combinations CLI11 cannot express.
struct UsageError {
  std::string message;
};

std::string Fixed(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, value);
  return buffer;
}

fs::path ProfilePathFor(const fs::path& trace, const std::optional<fs::path>& dir) {
  std::string name = trace.filename().string();
  for (std::string_view suffix : {".trace.json", ".json"}) {
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      name.resize(name.size() - suffix.size());
      break;
    }
  }
  name += kProfileExtension;
  return (dir ? *dir : trace.parent_path()) / name;
}

CallTreeProfile LoadProfile(const fs::path& path) {
  try {
    return FromDocument(ReadProfile(ReadFile(path)));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

TraceSession LoadTrace(const fs::path& path) {
  try {
    TraceSession session = ReadChromiumSession(ReadFile(path));
    session.source = path.string();
    return session;
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> output_dir;
  std::optional<std::string> label;
  std::optional<int64_t> pid;
};

int Ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
  int status = kExitOk;
  std::optional<fs::path> dir;
  if (args.output_dir) {
    dir = *args.output_dir;
    fs::create_directories(*dir);
  }
  for (const std::string& input : args.inputs) {
    try {
      TraceSession session = LoadTrace(input);
      if (args.pid) session = FilterByPid(session, *args.pid);
      fs::path target = ProfilePathFor(input, dir);
      std::string label = args.label.value_or(
          target.filename().string().substr(
              0, target.filename().string().size() - kProfileExtension.size()));
      CallTreeProfile profile = ProfileFromSession(session, label);
      WriteFile(target, WriteProfile(ToDocument(profile)));
      out << target.string() << "\n";
    } catch (const Error& e) {
      err << "proftree ingest: " << e.what() << "\n";
      status = kExitDomainError;
    }
  }
  return status;
}

// --- aggregate ------------------------------------------------------------

struct AggregateArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string agg = "mean";
  std::optional<std::string> label;
};

int Aggregate(const AggregateArgs& args, std::ostream& out) {
  if (args.inputs.empty()) {
    throw Error(ErrorKind::kEmptyInput, "aggregate needs at least one profile");
  }
  auto metric = ParseMetric(args.agg);
  if (!metric) throw UsageError{"unknown --agg " + args.agg};
  std::vector<CallTreeProfile> profiles;
  profiles.reserve(args.inputs.size());
  for (const std::string& input : args.inputs) {
    profiles.push_back(LoadProfile(input));
  }
  CallTreeProfile merged = MergeProfiles(profiles);
  if (args.label) merged.label = *args.label;
  WriteFile(args.output, WriteProfile(ToDocument(merged)));
  RenderOptions options;
  options.profile_metric = *metric;
  out << "# " << merged.label << ": " << merged.run_count << " runs, "
      << args.agg << " " << merged.metric_name << "\n"
      << RenderTree(merged, options);
  return kExitOk;
}

// --- compare --------------------------------------------------------------

struct CompareArgs {
  std::string baseline;
  std::string experimental;
  std::string metric = "mean";
  size_t top = 10;
  std::vector<std::string> filter;
  std::string format = "tree";
  std::string weight_by = "none";
  double low = 0.9;
  double high = 1.1;
  int precision = 2;
  bool color = false;
};

int CompareCommand(const CompareArgs& args, std::ostream& out) {
  auto metric = ParseMetric(args.metric);
  if (!metric) throw UsageError{"unknown --metric " + args.metric};
  RankWeight weight = RankWeight::kNone;
  if (args.weight_by == "baseline_sum") {
    weight = RankWeight::kBaselineSum;
  } else if (args.weight_by != "none") {
    throw UsageError{"unknown --weight-by " + args.weight_by};
  }
  CallTreeProfile baseline = LoadProfile(args.baseline);
  CallTreeProfile experimental = LoadProfile(args.experimental);
  ComparisonTree tree = Compare(baseline, experimental, *metric);
  std::vector<RankedNode> worst = RankWorst(tree, args.top, weight);
  const PatternSet filter(args.filter);

  if (args.format == "csv") {
    out << ComparisonToCsv(tree);
    return kExitOk;
  }
  // Summary may fail with NoMatchingNodes; compute it before writing anything.
  SummaryStats summary = ComputeSummaryStats(tree, filter);

  if (args.format == "json") {
    nlohmann::ordered_json doc =
        nlohmann::ordered_json::parse(ComparisonToJson(tree));
    nlohmann::ordered_json ranked = nlohmann::ordered_json::array();
    for (const RankedNode& r : worst) {
      ranked.push_back({{"path", r.path}, {"ratio", r.ratio}, {"weight", r.weight}});
    }
    doc["worst"] = std::move(ranked);
    doc["summary"] = {{"geometric_mean_ratio", summary.geometric_mean_ratio},
                      {"arithmetic_mean_ratio", summary.arithmetic_mean_ratio},
                      {"node_count", summary.node_count},
                      {"filter", args.filter}};
    out << doc.dump(1) << "\n";
    return kExitOk;
  }

  RenderOptions options;
  options.precision = args.precision;
  options.low_threshold = args.low;
  options.high_threshold = args.high;
  options.ansi_color = args.color;
  out << "# " << MetricName(*metric) << " ratio, baseline \"" << baseline.label
      << "\" (" << baseline.run_count << " runs) / experimental \""
      << experimental.label << "\" (" << experimental.run_count
      << " runs); >1 means experimental is faster\n";
  out << RenderTree(tree, options);
  out << "\n# worst " << worst.size() << "\n";
  for (size_t i = 0; i < worst.size(); ++i) {
    out << (i + 1) << "\t" << Fixed(worst[i].ratio, args.precision + 1) << "\t"
        << FormatNumber(worst[i].weight) << "\t" << JoinPath(worst[i].path)
        << "\n";
  }
  out << "\n# summary";
  if (!filter.empty()) out << " (" << JoinPath(args.filter, ", ") << ")";
  out << ": geometric mean " << Fixed(summary.geometric_mean_ratio, 3)
      << ", arithmetic mean " << Fixed(summary.arithmetic_mean_ratio, 3)
      << " over " << summary.node_count << " nodes\n";
  if (!tree.zero_denominator_paths.empty()) {
    out << "# zero experimental time at:";
    for (const Path& p : tree.zero_denominator_paths) out << " " << JoinPath(p);
    out << "\n";
  }
  return kExitOk;
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  std::optional<std::string> config;
  std::string format = "text";
  std::vector<std::string> lock_patterns;
  std::vector<std::string> collective_patterns;
  std::optional<double> outlier_k;
  std::optional<int> outlier_min_samples;
  std::optional<double> gap_min_us;
  std::optional<double> gap_rel;
  std::optional<double> imbalance_threshold;
};

int AnalyzeCommand(const AnalyzeArgs& args, std::ostream& out) {
  AnalyzerConfig config;
  if (args.config) config = AnalyzerConfigFromJson(ReadFile(*args.config));
  if (!args.lock_patterns.empty()) config.lock_patterns = args.lock_patterns;
  if (!args.collective_patterns.empty()) {
    config.collective_patterns = args.collective_patterns;
  }
  if (args.outlier_k) config.outlier_k = *args.outlier_k;
  if (args.outlier_min_samples) config.outlier_min_samples = *args.outlier_min_samples;
  if (args.gap_min_us) config.gap_min_us = *args.gap_min_us;
  if (args.gap_rel) config.gap_rel = *args.gap_rel;
  if (args.imbalance_threshold) {
    config.imbalance_threshold = *args.imbalance_threshold;
  }
  config.Validate();
  if (args.format != "text" && args.format != "json") {
    throw UsageError{"unknown --format " + args.format};
  }
  AnalysisReport report = Analyze(LoadTrace(args.input), config);
  out << (args.format == "json" ? ReportToJson(report) : ReportToText(report));
  return kExitOk;
}

// --- demo -----------------------------------------------------------------

struct DemoArgs {
  std::string discipline = "both";
  std::optional<int> producers;
  int requests = 200;
  double service_us = 100.0;
  double compute_us = 600.0;
  uint64_t seed = 1;
  std::vector<int> sweep;
  std::optional<std::string> emit_traces;
};

int DemoCommand(const DemoArgs& args, std::ostream& out) {
  std::vector<Discipline> disciplines;
  if (args.discipline == "both") {
    disciplines = {Discipline::kSharedQueue, Discipline::kDualQueue};
  } else if (auto d = ParseDiscipline(args.discipline)) {
    disciplines = {*d};
  } else {
    throw UsageError{"--discipline must be shared, dual or both"};
  }
  if (args.producers && !args.sweep.empty()) {
    throw UsageError{"--producers and --sweep are mutually exclusive"};
  }
  std::vector<int> counts = args.sweep;
  if (counts.empty()) counts.push_back(args.producers.value_or(1));

  std::vector<DemoConfig> configs;
  for (Discipline d : disciplines) {
    for (int n : counts) {
      DemoConfig config;
      config.discipline = d;
      config.producer_count = n;
      config.requests_per_producer = args.requests;
      config.service_time_us = args.service_us;
      config.compute_time_us = args.compute_us;
      config.seed = args.seed;
      try {
        config.Validate();
      } catch (const Error& e) {
        throw UsageError{e.what()};
      }
      configs.push_back(config);
    }
  }
  std::optional<fs::path> trace_dir;
  if (args.emit_traces) {
    trace_dir = *args.emit_traces;
    fs::create_directories(*trace_dir);
  }
  out << SweepToCsv(Sweep(configs, trace_dir));
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Comparison and timeline profiling of communication libraries",
               "proftree"};
  app.require_subcommand(1);

  IngestArgs ingest;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Build one .prof.json per Chromium trace");
  ingest_cmd->add_option("traces", ingest.inputs, "Chromium trace files")
      ->required();
  ingest_cmd->add_option("-o,--output-dir", ingest.output_dir,
                         "Directory for the profiles (default: beside input)");
  ingest_cmd->add_option("--label", ingest.label, "Profile label");
  ingest_cmd->add_option("--pid", ingest.pid, "Keep only this process");

  AggregateArgs aggregate;
  CLI::App* aggregate_cmd =
      app.add_subcommand("aggregate", "Merge profiles from repeated runs");
  aggregate_cmd->add_option("profiles", aggregate.inputs, "Profile files");
  aggregate_cmd->add_option("-o,--output", aggregate.output, "Merged profile")
      ->required();
  aggregate_cmd->add_option("--agg", aggregate.agg,
                            "Statistic shown in the summary tree");
  aggregate_cmd->add_option("--label", aggregate.label, "Label of the result");

  CompareArgs compare;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Divide baseline by experimental per calling context");
  compare_cmd->add_option("baseline", compare.baseline)->required();
  compare_cmd->add_option("experimental", compare.experimental)->required();
  compare_cmd->add_option("--metric", compare.metric,
                          "mean|min|max|sum|variance|count");
  compare_cmd->add_option("--top", compare.top, "Rows in the worst-N table");
  compare_cmd->add_option("--filter", compare.filter,
                          "Region patterns for the summary (e.g. MPI_*)");
  compare_cmd->add_option("--format", compare.format, "tree|json|csv")
      ->check(CLI::IsMember({"tree", "json", "csv"}));
  compare_cmd->add_option("--weight-by", compare.weight_by,
                          "none|baseline_sum");
  compare_cmd->add_option("--low", compare.low, "Slower marker threshold");
  compare_cmd->add_option("--high", compare.high, "Faster marker threshold");
  compare_cmd->add_option("--precision", compare.precision);
  compare_cmd->add_flag("--color", compare.color, "ANSI colors");

  AnalyzeArgs analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Scan a trace for timeline problems");
  analyze_cmd->add_option("trace", analyze.input)->required();
  analyze_cmd->add_option("--config", analyze.config, "Analyzer config JSON");
  analyze_cmd->add_option("--format", analyze.format, "text|json");
  analyze_cmd->add_option("--lock-pattern", analyze.lock_patterns);
  analyze_cmd->add_option("--collective-pattern", analyze.collective_patterns);
  analyze_cmd->add_option("--outlier-k", analyze.outlier_k);
  analyze_cmd->add_option("--outlier-min-samples", analyze.outlier_min_samples);
  analyze_cmd->add_option("--gap-min-us", analyze.gap_min_us);
  analyze_cmd->add_option("--gap-rel", analyze.gap_rel);
  analyze_cmd->add_option("--imbalance-threshold", analyze.imbalance_threshold);

  DemoArgs demo;
  CLI::App* demo_cmd = app.add_subcommand(
      "demo", "Run the progress-thread queue harness and print CSV");
  demo_cmd->add_option("--discipline", demo.discipline, "shared|dual|both");
  demo_cmd->add_option("--producers", demo.producers);
  demo_cmd->add_option("--requests", demo.requests);
  demo_cmd->add_option("--service-us", demo.service_us);
  demo_cmd->add_option("--compute-us", demo.compute_us);
  demo_cmd->add_option("--seed", demo.seed);
  demo_cmd->add_option("--sweep", demo.sweep, "Producer counts, e.g. 1,2,4,8")
      ->delimiter(',');
  demo_cmd->add_option("--emit-traces", demo.emit_traces,
                       "Directory for per-cell Chromium traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return Ingest(ingest, out, err);
    if (*aggregate_cmd) return Aggregate(aggregate, out);
    if (*compare_cmd) return CompareCommand(compare, out);
    if (*analyze_cmd) return AnalyzeCommand(analyze, out);
    if (*demo_cmd) return DemoCommand(demo, out);
  } catch (const UsageError& e) {
    err << "proftree: " << e.message << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "proftree: " << e.what() << "\n";
    return e.kind() == ErrorKind::kEmptyInput ||
                   e.kind() == ErrorKind::kInvalidConfig
               ? kExitUsage
               : kExitDomainError;
  } catch (const std::exception& e) {
    err << "proftree: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace proftree
