/*
 * Copyright 2026 The migsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: run | sweep | compare | curve | gen-traces | stats.
//
// Exit codes: 0 success, 1 I/O, 2 validation (including manifests that fail
// profile validation), 3 model-domain errors raised during evaluation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "migsim/fleet.hpp"
#include "migsim/manifest.hpp"
#include "migsim/sweep.hpp"
#include "migsim/tracekit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace migsim;

namespace {

// ---------------------------------------------------------------------------
// failure plumbing

struct CliFailure {
  ModelError error;
  int code;
};

int model_exit_code(errc kind) {
  switch (kind) {
    case errc::io_error:
      return 1;
    case errc::schema_violation:
    case errc::validation_failed:
    case errc::invalid_spec:
    case errc::empty_series:
    case errc::zero_containers:
    case errc::non_positive_memory:
    case errc::non_positive_rate:
    case errc::negative_dirty_rate:
    case errc::negative_gap:
    case errc::empty_trace:
    case errc::lambda_not_less_than_one:
      return 2;
    default:
      return 3;
  }
}

[[noreturn]] void fail_parse(const ModelError& e) {
  throw CliFailure{e, e.kind() == errc::io_error ? 1 : 2};
}

[[noreturn]] void fail_model(const ModelError& e) { throw CliFailure{e, model_exit_code(e.kind())}; }

template <typename Fn>
auto parse_phase(Fn&& fn) {
  try {
    return fn();
  } catch (const ModelError& e) {
    fail_parse(e);
  }
}

template <typename Fn>
auto model_phase(Fn&& fn) {
  try {
    return fn();
  } catch (const ModelError& e) {
    fail_model(e);
  }
}

// ---------------------------------------------------------------------------
// output helpers

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) fail_model(ModelError(errc::io_error, "cannot open for writing: " + out_path));
  out << text;
  if (!out) fail_model(ModelError(errc::io_error, "write failed: " + out_path));
}

std::string policy_text(const HandoffPolicy& policy) {
  if (const FixedSteps* fs = std::get_if<FixedSteps>(&policy))
    return "fixed:" + std::to_string(fs->count);
  if (const Deadline* dl = std::get_if<Deadline>(&policy))
    return "deadline:" + format_double(dl->budget_s);
  return "align:" + std::to_string(std::get<AlignToPrecopy>(policy).rounds);
}

json violations_to_json(const std::vector<BandwidthViolation>& report) {
  json arr = json::array();
  for (const BandwidthViolation& v : report)
    arr.push_back({{"start_s", v.start_s},
                   {"end_s", v.end_s},
                   {"aggregate_rate_mbps", v.aggregate_rate_mbps}});
  return arr;
}

json steps_to_json(const std::vector<StepLog>& steps) {
  json arr = json::array();
  for (const StepLog& s : steps)
    arr.push_back({{"index", s.index},
                   {"volume_mb", s.volume_mb},
                   {"duration_s", s.duration_s},
                   {"lambda", s.lambda},
                   {"start_s", s.start_s},
                   {"end_s", s.end_s},
                   {"rate_mbps", s.rate_mbps}});
  return arr;
}

json outcome_to_json(const FleetOutcome& outcome, bool with_steps) {
  json doc;
  doc["fleet"] = {{"downtime_s", outcome.fleet_downtime_s},
                  {"migration_time_s", outcome.fleet_migration_time_s},
                  {"overhead_mb", outcome.fleet_overhead_mb},
                  {"bandwidth_violations", violations_to_json(outcome.bandwidth_report)}};
  json containers = json::array();
  for (const MigrationOutcome& o : outcome.per_container) {
    json c = {{"id", o.container_id},
              {"downtime_s", o.downtime_s},
              {"migration_time_s", o.migration_time_s},
              {"overhead_mb", o.overhead_mb},
              {"stop_volume_mb", o.stop_volume_mb},
              {"steps", o.steps.size()}};
    if (with_steps) c["step_log"] = steps_to_json(o.steps);
    containers.push_back(std::move(c));
  }
  doc["containers"] = std::move(containers);
  return doc;
}

std::string outcome_to_csv(const FleetOutcome& outcome) {
  std::ostringstream out;
  out << "container_id,downtime_s,migration_time_s,overhead_mb,stop_volume_mb\n";
  for (const MigrationOutcome& o : outcome.per_container)
    out << o.container_id << ',' << format_double(o.downtime_s) << ','
        << format_double(o.migration_time_s) << ',' << format_double(o.overhead_mb) << ','
        << format_double(o.stop_volume_mb) << '\n';
  out << "fleet," << format_double(outcome.fleet_downtime_s) << ','
      << format_double(outcome.fleet_migration_time_s) << ','
      << format_double(outcome.fleet_overhead_mb) << ",\n";
  return out.str();
}

json stats_to_json(const TraceStats& s, std::size_t count) {
  return {{"count", count},     {"min", s.min},   {"max", s.max},
          {"median", s.median}, {"mean", s.mean}, {"std", s.stddev}};
}

// ---------------------------------------------------------------------------
// common options

struct CommonOpts {
  std::string manifest;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int repeat = 1;
  std::string method = "both";
  std::optional<int> rounds;
  std::optional<std::string> policy;
  std::optional<double> migrror_gap;
  std::optional<double> align_delay;
  bool with_steps = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--manifest", opts.manifest, "fleet manifest path")->required();
  cmd->add_option("--out", opts.out, "output path (default: stdout)");
  cmd->add_option("--format", opts.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", opts.seed, "seed for trace regeneration")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
  cmd->add_option("--repeat", opts.repeat, "repeats with re-seeded trace generation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rounds", opts.rounds, "pre-copy rounds override");
  cmd->add_option("--policy", opts.policy, "hand-off policy: fixed:N|deadline:SECONDS|align:M");
  cmd->add_option("--migrror-gap", opts.migrror_gap, "event gap for averaged-to-trace expansion");
  cmd->add_option("--align-delay", opts.align_delay,
                  "pre-copy inter-round delay used for hand-off alignment");
}

SweepConfig resolve_config(const FleetSpec& spec, const CommonOpts& opts) {
  SweepConfig cfg = sweep_config_from_spec(spec);
  if (opts.rounds) {
    cfg.precopy_rounds = *opts.rounds;
    if (std::holds_alternative<AlignToPrecopy>(cfg.migrror_policy))
      cfg.migrror_policy = AlignToPrecopy{*opts.rounds};
  }
  if (opts.policy) cfg.migrror_policy = parse_phase([&] { return parse_policy_text(*opts.policy); });
  if (opts.migrror_gap) cfg.migrror_event_gap_s = *opts.migrror_gap;
  if (opts.align_delay) cfg.precopy_delay_s = *opts.align_delay;
  cfg.run_precopy = opts.method != "migrror";
  cfg.run_migrror = opts.method != "precopy";
  return cfg;
}

json config_to_json(const CommonOpts& opts, const FleetSpec& spec, const SweepConfig& cfg) {
  json j;
  j["manifest"] = opts.manifest;
  j["containers"] = spec.containers.size();
  j["total_bandwidth_mbps"] = spec.total_bandwidth_mbps;
  j["precopy_rounds"] = cfg.precopy_rounds;
  j["precopy_delay_s"] = cfg.precopy_delay_s;
  j["migrror_policy"] = policy_text(cfg.migrror_policy);
  j["migrror_event_gap_s"] = cfg.migrror_event_gap_s;
  j["seed"] = opts.seed;
  j["repeat"] = opts.repeat;
  return j;
}

// ---------------------------------------------------------------------------
// run

Method single_method(const std::string& name) {
  if (name == "precopy") return Method::precopy;
  if (name == "migrror") return Method::migrror;
  fail_parse(ModelError(errc::invalid_spec, "this command needs --method precopy or migrror"));
}

FleetSpec prepare_run_spec(const FleetSpec& base, const CommonOpts& opts, const SweepConfig& cfg) {
  Method target =
      std::holds_alternative<PrecopyMethod>(base.method) ? Method::precopy : Method::migrror;
  if (opts.method != "both") target = single_method(opts.method);
  return make_method_fleet(base, target, cfg);
}

int cmd_run(const CommonOpts& opts) {
  const ManifestDocument doc = parse_phase([&] { return load_manifest(opts.manifest); });
  const SweepConfig cfg = resolve_config(doc.spec, opts);

  if (opts.repeat <= 1) {
    const FleetSpec spec = model_phase([&] { return prepare_run_spec(doc.spec, opts, cfg); });
    const FleetOutcome outcome = model_phase([&] { return run_fleet(spec); });
    if (opts.format == "csv") {
      write_output(outcome_to_csv(outcome), opts.out);
    } else {
      json out = outcome_to_json(outcome, opts.with_steps);
      out["config"] = config_to_json(opts, spec, cfg);
      write_output(out.dump(2) + "\n", opts.out);
    }
    return 0;
  }

  // repeats: re-seed trace generation when the manifest records its generator
  const std::uint64_t base_seed =
      opts.seed_given ? opts.seed : (doc.generator ? doc.generator->seed : 0);
  std::vector<FleetOutcome> outcomes;
  for (int k = 0; k < opts.repeat; ++k) {
    FleetSpec spec = doc.spec;
    if (doc.generator)
      spec = model_phase([&] {
        return build_generated_fleet(*doc.generator, base_seed + static_cast<std::uint64_t>(k));
      });
    spec = model_phase([&] { return prepare_run_spec(spec, opts, cfg); });
    outcomes.push_back(model_phase([&] { return run_fleet(spec); }));
  }

  auto metric_stats = [&](auto&& get) {
    std::vector<double> series;
    for (const FleetOutcome& o : outcomes) series.push_back(get(o));
    return trace_stats(series);
  };
  const TraceStats td = metric_stats([](const FleetOutcome& o) { return o.fleet_downtime_s; });
  const TraceStats tm =
      metric_stats([](const FleetOutcome& o) { return o.fleet_migration_time_s; });
  const TraceStats ta = metric_stats([](const FleetOutcome& o) { return o.fleet_overhead_mb; });

  if (opts.format == "csv") {
    std::ostringstream out;
    out << "metric,mean,std,min,max\n";
    const auto row = [&](const char* name, const TraceStats& s) {
      out << name << ',' << format_double(s.mean) << ',' << format_double(s.stddev) << ','
          << format_double(s.min) << ',' << format_double(s.max) << '\n';
    };
    row("fleet_downtime_s", td);
    row("fleet_migration_time_s", tm);
    row("fleet_overhead_mb", ta);
    write_output(out.str(), opts.out);
  } else {
    json out;
    out["config"] = config_to_json(opts, doc.spec, cfg);
    out["repeats"] = opts.repeat;
    out["fleet"] = {{"downtime_s", stats_to_json(td, outcomes.size())},
                    {"migration_time_s", stats_to_json(tm, outcomes.size())},
                    {"overhead_mb", stats_to_json(ta, outcomes.size())}};
    write_output(out.dump(2) + "\n", opts.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep & curve

struct AxisOpts {
  std::string parameter;
  std::string values;
  std::string range;
};

SweepAxis resolve_axis(const AxisOpts& opts, SweepParameter fallback_parameter) {
  SweepAxis axis;
  axis.parameter =
      opts.parameter.empty()
          ? fallback_parameter
          : parse_phase([&] { return sweep_parameter_from_name(opts.parameter); });
  if (!opts.values.empty()) {
    std::istringstream in(opts.values);
    std::string token;
    while (std::getline(in, token, ',')) {
      try {
        axis.values.push_back(std::stod(token));
      } catch (const std::exception&) {
        fail_parse(ModelError(errc::invalid_spec, "bad axis value: '" + token + "'"));
      }
    }
  } else if (!opts.range.empty()) {
    double start = 0.0, stop = 0.0;
    int steps = 0;
    std::istringstream in(opts.range);
    char c1 = 0, c2 = 0;
    in >> start >> c1 >> stop >> c2 >> steps;
    if (!in || c1 != ':' || c2 != ':')
      fail_parse(ModelError(errc::invalid_spec, "range must be start:stop:steps"));
    const SweepParameter parameter = axis.parameter;
    axis = parse_phase([&] { return make_linear_axis(parameter, start, stop, steps); });
  } else {
    fail_parse(ModelError(errc::invalid_spec, "provide --values or --range"));
  }
  parse_phase([&] {
    validate_axis(axis);
    return 0;
  });
  return axis;
}

json sweep_rows_to_json(const SweepResult& result) {
  json rows = json::array();
  for (const SweepRow& row : result.rows) {
    json r = {{"axis_value", row.axis_value},
              {"method", method_name(row.method)},
              {"ok", row.ok}};
    if (row.ok) {
      r["downtime_s"] = row.downtime_s;
      r["migration_time_s"] = row.migration_time_s;
      r["overhead_mb"] = row.overhead_mb;
    } else {
      r["error"] = row.error;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string sweep_to_csv(const SweepResult& result, const json& config) {
  std::ostringstream out;
  out << "# config " << config.dump() << '\n';
  out << "axis_value,method,status,downtime_s,migration_time_s,overhead_mb\n";
  for (const SweepRow& row : result.rows) {
    out << format_double(row.axis_value) << ',' << method_name(row.method) << ','
        << (row.ok ? "ok" : row.error) << ',';
    if (row.ok)
      out << format_double(row.downtime_s) << ',' << format_double(row.migration_time_s) << ','
          << format_double(row.overhead_mb) << '\n';
    else
      out << ",,\n";
  }
  return out.str();
}

int cmd_sweep(const CommonOpts& opts, const AxisOpts& axis_opts) {
  if (opts.repeat > 1)
    fail_parse(
        ModelError(errc::invalid_spec, "--repeat applies to 'run' (sweeps are deterministic)"));
  const FleetSpec base = parse_phase([&] { return parse_fleet_manifest(opts.manifest); });
  const SweepAxis axis = resolve_axis(axis_opts, SweepParameter::transfer_rate_mbps);
  const SweepConfig cfg = resolve_config(base, opts);
  const SweepResult result = model_phase([&] { return run_sweep(base, axis, cfg); });

  json config = config_to_json(opts, base, cfg);
  config["axis"] = {{"parameter", sweep_parameter_name(axis.parameter)}, {"values", axis.values}};
  config["methods"] = opts.method;
  if (opts.format == "csv") {
    write_output(sweep_to_csv(result, config), opts.out);
  } else {
    json out;
    out["config"] = std::move(config);
    out["rows"] = sweep_rows_to_json(result);
    write_output(out.dump(2) + "\n", opts.out);
  }
  return 0;
}

int cmd_curve(const CommonOpts& opts, const AxisOpts& axis_opts) {
  if (opts.repeat > 1)
    fail_parse(
        ModelError(errc::invalid_spec, "--repeat applies to 'run' (curves are deterministic)"));
  const FleetSpec base = parse_phase([&] { return parse_fleet_manifest(opts.manifest); });
  const SweepAxis axis = resolve_axis(axis_opts, SweepParameter::transfer_rate_mbps);
  const SweepConfig cfg = resolve_config(base, opts);
  const auto points = model_phase([&] { return downtime_vs_time_curve(base, axis, cfg); });

  json config = config_to_json(opts, base, cfg);
  config["axis"] = {{"parameter", sweep_parameter_name(axis.parameter)}, {"values", axis.values}};
  if (opts.format == "csv") {
    std::ostringstream out;
    out << "# config " << config.dump() << '\n';
    out << "method,migration_time_s,downtime_s,axis_value\n";
    for (const CurvePoint& p : points)
      out << method_name(p.method) << ',' << format_double(p.migration_time_s) << ','
          << format_double(p.downtime_s) << ',' << format_double(p.axis_value) << '\n';
    write_output(out.str(), opts.out);
  } else {
    json rows = json::array();
    for (const CurvePoint& p : points)
      rows.push_back({{"method", method_name(p.method)},
                      {"migration_time_s", p.migration_time_s},
                      {"downtime_s", p.downtime_s},
                      {"axis_value", p.axis_value}});
    json out;
    out["config"] = std::move(config);
    out["points"] = std::move(rows);
    write_output(out.dump(2) + "\n", opts.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare

json triple_to_json(const MetricTriple& t) {
  return {{"downtime_s", t.downtime_s},
          {"migration_time_s", t.migration_time_s},
          {"overhead_mb", t.overhead_mb}};
}

int cmd_compare(const CommonOpts& opts) {
  if (opts.repeat > 1) fail_parse(ModelError(errc::invalid_spec, "--repeat applies to 'run'"));
  const FleetSpec spec = parse_phase([&] { return parse_fleet_manifest(opts.manifest); });
  const CompareResult result = model_phase([&] { return compare_avg_vs_nonavg(spec); });

  if (opts.format == "csv") {
    std::ostringstream out;
    out << "# config " << json{{"manifest", opts.manifest},
                               {"containers", spec.containers.size()}}.dump()
        << '\n';
    out << "container_id,metric,nonavg,avg,abs_dev,pct_dev\n";
    const auto emit = [&](const CompareRow& row) {
      const auto line = [&](const char* metric, double raw, double avg, double abs, double pct) {
        out << row.container_id << ',' << metric << ',' << format_double(raw) << ','
            << format_double(avg) << ',' << format_double(abs) << ',' << format_double(pct)
            << '\n';
      };
      line("downtime_s", row.nonavg.downtime_s, row.avg.downtime_s, row.abs_dev.downtime_s,
           row.pct_dev.downtime_s);
      line("migration_time_s", row.nonavg.migration_time_s, row.avg.migration_time_s,
           row.abs_dev.migration_time_s, row.pct_dev.migration_time_s);
      line("overhead_mb", row.nonavg.overhead_mb, row.avg.overhead_mb, row.abs_dev.overhead_mb,
           row.pct_dev.overhead_mb);
    };
    for (const CompareRow& row : result.rows) emit(row);
    emit(result.fleet);
    write_output(out.str(), opts.out);
  } else {
    json rows = json::array();
    const auto row_json = [&](const CompareRow& row) {
      return json{{"container_id", row.container_id},
                  {"nonavg", triple_to_json(row.nonavg)},
                  {"avg", triple_to_json(row.avg)},
                  {"abs_dev", triple_to_json(row.abs_dev)},
                  {"pct_dev", triple_to_json(row.pct_dev)}};
    };
    for (const CompareRow& row : result.rows) rows.push_back(row_json(row));
    json out;
    out["config"] = {{"manifest", opts.manifest}, {"containers", spec.containers.size()}};
    out["rows"] = std::move(rows);
    out["fleet"] = row_json(result.fleet);
    write_output(out.dump(2) + "\n", opts.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen-traces

struct GenOpts {
  std::string out_dir;
  std::size_t count = 20;
  std::size_t events = 50;
  double memory_mb = 200.0;
  double bandwidth = 1000.0;
  std::optional<double> handoff_rate;
  std::uint64_t seed = 0;
  std::string rate_dist = "uniform:50:150";
  std::string dirty_dist = "tnormal:28.979:31.89:0.02323:145.076";
  std::string gap_dist = "fixed:0.01";
  std::string rate_order = "shuffled";
  std::string dirty_order = "shuffled";
  std::string gap_order = "shuffled";
  std::optional<std::string> policy;
};

SeriesGenerator parse_series_text(const std::string& dist, const std::string& order) {
  std::vector<std::string> parts;
  std::istringstream in(dist);
  std::string token;
  while (std::getline(in, token, ':')) parts.push_back(token);
  const auto num = [&](std::size_t i) {
    try {
      return std::stod(parts.at(i));
    } catch (const std::exception&) {
      throw ModelError(errc::invalid_spec, "bad distribution spec: '" + dist + "'");
    }
  };
  if (parts.empty()) throw ModelError(errc::invalid_spec, "empty distribution spec");
  if (parts[0] == "fixed" && parts.size() == 2) return fixed_series(num(1));
  if (parts[0] == "uniform" && parts.size() == 3)
    return sampled_series(Uniform{num(1), num(2)}, parse_ordering_text(order));
  if (parts[0] == "tnormal" && parts.size() == 5)
    return sampled_series(TruncatedNormal{num(1), num(2), num(3), num(4)},
                          parse_ordering_text(order));
  throw ModelError(errc::invalid_spec,
                   "distribution must be fixed:X, uniform:MIN:MAX, or tnormal:MEAN:STD:MIN:MAX "
                   "(got '" +
                       dist + "')");
}

int cmd_gen_traces(const GenOpts& opts) {
  GeneratorSpec gen;
  gen.count = opts.count;
  gen.events = opts.events;
  gen.memory_mb = opts.memory_mb;
  gen.total_bandwidth_mbps = opts.bandwidth;
  gen.seed = opts.seed;
  parse_phase([&] {
    gen.handoff_rate_mbps =
        opts.handoff_rate ? *opts.handoff_rate
                          : (opts.count > 0 ? allocate_equal(opts.bandwidth, opts.count) : 0.0);
    gen.rate = parse_series_text(opts.rate_dist, opts.rate_order);
    gen.dirty = parse_series_text(opts.dirty_dist, opts.dirty_order);
    gen.gap = parse_series_text(opts.gap_dist, opts.gap_order);
    if (opts.policy) gen.policy = parse_policy_text(*opts.policy);
    return 0;
  });

  const FleetSpec fleet = model_phase([&] { return build_generated_fleet(gen, gen.seed); });
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  const fs::path manifest = fs::path(opts.out_dir) / "manifest.json";
  model_phase([&] {
    write_fleet_manifest(manifest, fleet, gen);
    return 0;
  });
  std::cout << "wrote " << fleet.containers.size() << " trace(s) and " << manifest.string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& input, const CommonOpts& opts) {
  std::vector<std::pair<std::string, RateTrace>> traces;
  parse_phase([&] {
    const fs::path path(input);
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
          files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const fs::path& f : files) traces.emplace_back(f.filename().string(), read_trace_csv(f));
      if (traces.empty())
        throw ModelError(errc::empty_series, "no trace files under " + path.string());
    } else {
      traces.emplace_back(path.filename().string(), read_trace_csv(path));
    }
    return 0;
  });

  struct Columns {
    std::vector<double> rate, dirty, gap;
  };
  const auto split = [](const RateTrace& t) {
    Columns c;
    for (const TraceEvent& e : t.events) {
      c.rate.push_back(e.rate_mbps);
      c.dirty.push_back(e.dirty_mbps);
      c.gap.push_back(e.gap_s);
    }
    return c;
  };

  Columns all;
  std::vector<std::pair<std::string, Columns>> per_file;
  for (const auto& [name, trace] : traces) {
    Columns c = split(trace);
    all.rate.insert(all.rate.end(), c.rate.begin(), c.rate.end());
    all.dirty.insert(all.dirty.end(), c.dirty.begin(), c.dirty.end());
    all.gap.insert(all.gap.end(), c.gap.begin(), c.gap.end());
    per_file.emplace_back(name, std::move(c));
  }

  const bool aggregate = traces.size() > 1;
  if (opts.format == "csv") {
    std::ostringstream out;
    out << "file,series,count,min,max,median,mean,std\n";
    const auto emit = [&](const std::string& file, const char* series,
                          const std::vector<double>& values) {
      const TraceStats s = model_phase([&] { return trace_stats(values); });
      out << file << ',' << series << ',' << values.size() << ',' << format_double(s.min) << ','
          << format_double(s.max) << ',' << format_double(s.median) << ','
          << format_double(s.mean) << ',' << format_double(s.stddev) << '\n';
    };
    for (const auto& [name, c] : per_file) {
      emit(name, "rate_mbps", c.rate);
      emit(name, "dirty_mbps", c.dirty);
      emit(name, "gap_s", c.gap);
    }
    if (aggregate) {
      emit("(all)", "rate_mbps", all.rate);
      emit("(all)", "dirty_mbps", all.dirty);
      emit("(all)", "gap_s", all.gap);
    }
    write_output(out.str(), opts.out);
  } else {
    const auto columns_json = [&](const Columns& c) {
      return json{{"rate_mbps",
                   stats_to_json(model_phase([&] { return trace_stats(c.rate); }), c.rate.size())},
                  {"dirty_mbps", stats_to_json(model_phase([&] { return trace_stats(c.dirty); }),
                                               c.dirty.size())},
                  {"gap_s",
                   stats_to_json(model_phase([&] { return trace_stats(c.gap); }), c.gap.size())}};
    };
    json files = json::array();
    for (const auto& [name, c] : per_file) {
      json f = columns_json(c);
      f["file"] = name;
      files.push_back(std::move(f));
    }
    json out;
    out["files"] = std::move(files);
    if (aggregate) out["aggregate"] = columns_json(all);
    write_output(out.dump(2) + "\n", opts.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven cost model for simultaneous container/VM migration "
               "(pre-copy vs event mirroring)"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "evaluate a fleet manifest");
  add_common(run, run_opts);
  run->add_option("--method", run_opts.method, "precopy|migrror (default: as in the manifest)")
      ->check(CLI::IsMember({"precopy", "migrror", "both"}));
  run->add_flag("--steps", run_opts.with_steps, "include per-step logs in JSON output");

  CommonOpts sweep_opts;
  AxisOpts sweep_axis;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter across the fleet");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_axis.parameter,
                    "memory_mb|transfer_rate_mbps|dirty_rate_mbps|lambda")
      ->required();
  sweep->add_option("--values", sweep_axis.values, "comma-separated axis values");
  sweep->add_option("--range", sweep_axis.range, "linear axis start:stop:steps");
  sweep->add_option("--method", sweep_opts.method, "both|precopy|migrror")
      ->check(CLI::IsMember({"both", "precopy", "migrror"}));

  CommonOpts compare_opts;
  CLI::App* compare = app.add_subcommand(
      "compare", "average vs non-average parameter values on traced containers");
  add_common(compare, compare_opts);

  CommonOpts curve_opts;
  AxisOpts curve_axis;
  CLI::App* curve =
      app.add_subcommand("curve", "downtime as a function of migration time across rates");
  add_common(curve, curve_opts);
  curve->add_option("--param", curve_axis.parameter, "axis parameter (default transfer rate)");
  curve->add_option("--values", curve_axis.values, "comma-separated axis values");
  curve->add_option("--range", curve_axis.range, "linear axis start:stop:steps");
  curve->add_option("--method", curve_opts.method, "both|precopy|migrror")
      ->check(CLI::IsMember({"both", "precopy", "migrror"}));

  GenOpts gen_opts;
  CLI::App* gen = app.add_subcommand("gen-traces", "generate synthetic traces plus a manifest");
  gen->add_option("--out-dir", gen_opts.out_dir, "output directory")->required();
  gen->add_option("--count", gen_opts.count, "number of containers");
  gen->add_option("--events", gen_opts.events, "events per trace");
  gen->add_option("--memory-mb", gen_opts.memory_mb, "container memory size (MB)");
  gen->add_option("--bandwidth", gen_opts.bandwidth, "total reserved bandwidth (Mbps)");
  gen->add_option("--handoff-rate", gen_opts.handoff_rate,
                  "stop-and-copy rate (default: bandwidth/count)");
  gen->add_option("--seed", gen_opts.seed, "generation seed");
  gen->add_option("--rate-dist", gen_opts.rate_dist, "fixed:X|uniform:MIN:MAX|tnormal:M:S:MIN:MAX");
  gen->add_option("--dirty-dist", gen_opts.dirty_dist, "distribution of dirtying rates");
  gen->add_option("--gap-dist", gen_opts.gap_dist, "distribution of inter-event gaps");
  gen->add_option("--rate-order", gen_opts.rate_order,
                  "shuffled|ascending|descending|front-loaded[:F]|back-loaded[:F]");
  gen->add_option("--dirty-order", gen_opts.dirty_order, "ordering of dirtying rates");
  gen->add_option("--gap-order", gen_opts.gap_order, "ordering of gaps");
  gen->add_option("--policy", gen_opts.policy, "hand-off policy stored in the manifest");

  CommonOpts stats_opts;
  std::string stats_input;
  CLI::App* stats = app.add_subcommand("stats", "summary statistics of trace files");
  stats->add_option("--input", stats_input, "trace CSV or directory of them")->required();
  stats->add_option("--out", stats_opts.out, "output path (default: stdout)");
  stats->add_option("--format", stats_opts.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_axis);
    if (compare->parsed()) return cmd_compare(compare_opts);
    if (curve->parsed()) return cmd_curve(curve_opts, curve_axis);
    if (gen->parsed()) return cmd_gen_traces(gen_opts);
    if (stats->parsed()) return cmd_stats(stats_input, stats_opts);
  } catch (const CliFailure& failure) {
    json err;
    err["error"]["kind"] = errc_name(failure.error.kind());
    err["error"]["message"] = failure.error.what();
    if (!failure.error.container_id().empty())
      err["error"]["container"] = failure.error.container_id();
    if (failure.error.step()) err["error"]["step"] = *failure.error.step();
    std::cerr << err.dump() << "\n";
    return failure.code;
  } catch (const std::exception& e) {
    json err;
    err["error"]["kind"] = "Internal";
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
