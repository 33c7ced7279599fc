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

#pragma once

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/fleet.hpp"
#include "migsim/migrror.hpp"
#include "migsim/precopy.hpp"
#include "migsim/tracekit.hpp"

/// Parameter sweeps and average-vs-non-average comparisons over a base
/// fleet. A sweep clones the base spec, overrides one parameter on every
/// container, and evaluates the pre-copy and/or mirroring method at each
/// axis value. Failed axis values are reported as failed rows; the sweep
/// continues.
namespace migsim {

enum class SweepParameter { memory_mb, transfer_rate_mbps, dirty_rate_mbps, lambda };

inline const char* sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::memory_mb: return "memory_mb";
    case SweepParameter::transfer_rate_mbps: return "transfer_rate_mbps";
    case SweepParameter::dirty_rate_mbps: return "dirty_rate_mbps";
    case SweepParameter::lambda: return "lambda";
  }
  return "unknown";
}

inline SweepParameter sweep_parameter_from_name(const std::string& name) {
  if (name == "memory_mb") return SweepParameter::memory_mb;
  if (name == "transfer_rate_mbps") return SweepParameter::transfer_rate_mbps;
  if (name == "dirty_rate_mbps") return SweepParameter::dirty_rate_mbps;
  if (name == "lambda") return SweepParameter::lambda;
  throw ModelError(errc::invalid_spec, "unknown sweep parameter '" + name + "'");
}

struct SweepAxis {
  SweepParameter parameter = SweepParameter::transfer_rate_mbps;
  std::vector<double> values;
};

inline SweepAxis make_linear_axis(SweepParameter parameter, double start, double stop, int steps) {
  if (steps < 1) throw ModelError(errc::invalid_spec, "axis needs at least one step");
  SweepAxis axis{parameter, {}};
  axis.values.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    axis.values.push_back(start);
    return axis;
  }
  for (int i = 0; i < steps; ++i)
    axis.values.push_back(start + (stop - start) * static_cast<double>(i) /
                                      static_cast<double>(steps - 1));
  return axis;
}

inline void validate_axis(const SweepAxis& axis) {
  if (axis.values.empty()) throw ModelError(errc::invalid_spec, "sweep axis has no values");
  for (double v : axis.values) {
    if (!(v > 0.0)) throw ModelError(errc::invalid_spec, "axis values must be positive");
    if (axis.parameter == SweepParameter::lambda && !(v < 1.0))
      throw ModelError(errc::invalid_spec, "lambda axis values must be < 1");
  }
}

enum class Method { precopy, migrror };

inline const char* method_name(Method m) {
  return m == Method::precopy ? "precopy" : "migrror";
}

/// Resolved per-sweep settings shared by both method legs. The pre-copy
/// delay doubles as the mirroring align reference delay so both methods
/// trigger hand-off at the same instant.
struct SweepConfig {
  int precopy_rounds = 10;
  double precopy_delay_s = 0.1;
  HandoffPolicy migrror_policy = AlignToPrecopy{10};
  double migrror_event_gap_s = 0.01;
  bool run_precopy = true;
  bool run_migrror = true;
};

inline SweepConfig sweep_config_from_spec(const FleetSpec& base) {
  SweepConfig cfg;
  if (const PrecopyMethod* pre = std::get_if<PrecopyMethod>(&base.method)) {
    cfg.precopy_rounds = pre->rounds;
    cfg.precopy_delay_s = pre->inter_round_delay_s;
    cfg.migrror_policy = AlignToPrecopy{pre->rounds};
  } else {
    const MigrrorMethod& mir = std::get<MigrrorMethod>(base.method);
    cfg.migrror_policy = mir.policy;
    cfg.precopy_delay_s = mir.align_delay_s;
    cfg.migrror_event_gap_s = mir.event_gap_s;
    if (const AlignToPrecopy* align = std::get_if<AlignToPrecopy>(&mir.policy))
      cfg.precopy_rounds = align->rounds;
  }
  return cfg;
}

/// Rewrites the base spec to run the given method. When crossing methods,
/// averaged containers get the leg-appropriate delay: the pre-copy
/// inter-round delay on the pre-copy leg, the event gap on the mirroring
/// leg. Within the base's own method the containers are untouched.
inline FleetSpec make_method_fleet(FleetSpec base, Method target, const SweepConfig& cfg) {
  const bool base_is_precopy = std::holds_alternative<PrecopyMethod>(base.method);
  const bool crossing = (target == Method::precopy) != base_is_precopy;
  const double delay =
      target == Method::precopy ? cfg.precopy_delay_s : cfg.migrror_event_gap_s;
  if (crossing) {
    for (ContainerProfile& c : base.containers)
      if (c.is_averaged()) std::get<AveragedParams>(c.params).inter_round_delay_s = delay;
  }
  if (target == Method::precopy)
    base.method = PrecopyMethod{cfg.precopy_rounds, cfg.precopy_delay_s};
  else
    base.method = MigrrorMethod{cfg.migrror_policy, cfg.precopy_delay_s, cfg.migrror_event_gap_s};
  return base;
}

/// Overrides the swept parameter on every container. Sweeps are defined on
/// averaged parameters; the lambda axis sets the dirtying rate to
/// lambda * rate with the rate held fixed, and the transfer-rate axis moves
/// the hand-off rate together with the average rate.
inline FleetSpec apply_axis_override(FleetSpec spec, SweepParameter parameter, double value) {
  for (ContainerProfile& c : spec.containers) {
    if (!c.is_averaged())
      throw ModelError(errc::averaged_params_required,
                       "sweeps override averaged parameters; container '" + c.id + "' is traced");
    AveragedParams& params = std::get<AveragedParams>(c.params);
    switch (parameter) {
      case SweepParameter::memory_mb:
        c.memory_mb = value;
        break;
      case SweepParameter::transfer_rate_mbps:
        params.avg_rate_mbps = value;
        c.handoff_rate_mbps = value;
        break;
      case SweepParameter::dirty_rate_mbps:
        params.avg_dirty_mbps = value;
        break;
      case SweepParameter::lambda:
        params.avg_dirty_mbps = value * params.avg_rate_mbps;
        break;
    }
  }
  return spec;
}

struct SweepRow {
  double axis_value = 0.0;
  Method method = Method::precopy;
  bool ok = false;
  std::string error;
  double downtime_s = 0.0;
  double migration_time_s = 0.0;
  double overhead_mb = 0.0;
};

struct SweepResult {
  SweepAxis axis;
  SweepConfig config;
  std::vector<SweepRow> rows;
};

inline SweepResult run_sweep(const FleetSpec& base, const SweepAxis& axis,
                             const SweepConfig& cfg) {
  validate_axis(axis);
  SweepResult result{axis, cfg, {}};
  std::vector<Method> methods;
  if (cfg.run_precopy) methods.push_back(Method::precopy);
  if (cfg.run_migrror) methods.push_back(Method::migrror);
  if (methods.empty()) throw ModelError(errc::invalid_spec, "no method selected");
  for (double value : axis.values) {
    for (Method method : methods) {
      SweepRow row;
      row.axis_value = value;
      row.method = method;
      try {
        const FleetSpec spec =
            apply_axis_override(make_method_fleet(base, method, cfg), axis.parameter, value);
        const FleetOutcome outcome = run_fleet(spec);
        row.ok = true;
        row.downtime_s = outcome.fleet_downtime_s;
        row.migration_time_s = outcome.fleet_migration_time_s;
        row.overhead_mb = outcome.fleet_overhead_mb;
      } catch (const ModelError& e) {
        row.error = std::string(errc_name(e.kind())) + ": " + e.what();
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// average vs non-average comparison (mirroring method, full trace)

struct MetricTriple {
  double downtime_s = 0.0;
  double migration_time_s = 0.0;
  double overhead_mb = 0.0;
};

struct CompareRow {
  std::string container_id;
  MetricTriple nonavg;
  MetricTriple avg;
  MetricTriple abs_dev;  // nonavg - avg
  MetricTriple pct_dev;  // 100 * (nonavg - avg) / avg, 0 when both are 0
};

struct CompareResult {
  std::vector<CompareRow> rows;
  CompareRow fleet;
};

namespace detail {

inline double pct_of(double raw, double avg) {
  if (avg == 0.0) return 0.0;  // only reachable when raw is 0 as well
  return 100.0 * (raw - avg) / avg;
}

inline void fill_deviation(CompareRow& row) {
  row.abs_dev = {row.nonavg.downtime_s - row.avg.downtime_s,
                 row.nonavg.migration_time_s - row.avg.migration_time_s,
                 row.nonavg.overhead_mb - row.avg.overhead_mb};
  row.pct_dev = {pct_of(row.nonavg.downtime_s, row.avg.downtime_s),
                 pct_of(row.nonavg.migration_time_s, row.avg.migration_time_s),
                 pct_of(row.nonavg.overhead_mb, row.avg.overhead_mb)};
}

}  // namespace detail

/// Runs the mirroring engine twice per traced container: once on the raw
/// trace and once on a constant trace built from the trace's mean rate and
/// mean dirtying rate (same event count and gaps). Deviations are exactly
/// zero iff the trace is constant in both quantities.
inline CompareResult compare_avg_vs_nonavg(const FleetSpec& spec) {
  if (spec.containers.empty()) throw ModelError(errc::zero_containers, "fleet has no containers");
  CompareResult result;
  MetricTriple fleet_raw{0.0, 0.0, 0.0};
  MetricTriple fleet_avg{0.0, 0.0, 0.0};
  for (const ContainerProfile& profile : spec.containers) {
    if (!profile.is_traced())
      throw ModelError(errc::traced_params_required,
                       "the comparison needs traced containers; container '" + profile.id +
                           "' is averaged");
    const RateTrace& trace = profile.trace();
    const HandoffPolicy policy = FixedSteps{static_cast<int>(trace.events.size())};
    const MigrationOutcome raw = migrror_outcome(profile, policy);

    std::vector<double> rates, dirties;
    rates.reserve(trace.events.size());
    dirties.reserve(trace.events.size());
    for (const TraceEvent& e : trace.events) {
      rates.push_back(e.rate_mbps);
      dirties.push_back(e.dirty_mbps);
    }
    const double mean_rate = series_mean(rates);
    const double mean_dirty = series_mean(dirties);
    ContainerProfile averaged = profile;
    RateTrace constant;
    constant.events.reserve(trace.events.size());
    for (const TraceEvent& e : trace.events)
      constant.events.push_back(TraceEvent{mean_rate, mean_dirty, e.gap_s});
    averaged.params = std::move(constant);
    const MigrationOutcome avg = migrror_outcome(averaged, policy);

    CompareRow row;
    row.container_id = profile.id;
    row.nonavg = {raw.downtime_s, raw.migration_time_s, raw.overhead_mb};
    row.avg = {avg.downtime_s, avg.migration_time_s, avg.overhead_mb};
    detail::fill_deviation(row);
    result.rows.push_back(std::move(row));

    fleet_raw.downtime_s = std::max(fleet_raw.downtime_s, raw.downtime_s);
    fleet_raw.migration_time_s = std::max(fleet_raw.migration_time_s, raw.migration_time_s);
    fleet_raw.overhead_mb += raw.overhead_mb;
    fleet_avg.downtime_s = std::max(fleet_avg.downtime_s, avg.downtime_s);
    fleet_avg.migration_time_s = std::max(fleet_avg.migration_time_s, avg.migration_time_s);
    fleet_avg.overhead_mb += avg.overhead_mb;
  }
  result.fleet.container_id = "fleet";
  result.fleet.nonavg = fleet_raw;
  result.fleet.avg = fleet_avg;
  detail::fill_deviation(result.fleet);
  return result;
}

// ---------------------------------------------------------------------------
// downtime as a function of migration time

struct CurvePoint {
  Method method = Method::precopy;
  double axis_value = 0.0;
  double migration_time_s = 0.0;
  double downtime_s = 0.0;
};

/// (migration time, downtime) pairs per method across a transfer-rate axis,
/// ordered by migration time within each method. Failed axis values are
/// dropped.
inline std::vector<CurvePoint> downtime_vs_time_curve(const FleetSpec& base, const SweepAxis& axis,
                                                      const SweepConfig& cfg) {
  const SweepResult sweep = run_sweep(base, axis, cfg);
  std::vector<CurvePoint> points;
  points.reserve(sweep.rows.size());
  for (Method method : {Method::precopy, Method::migrror}) {
    for (const SweepRow& row : sweep.rows)
      if (row.ok && row.method == method)
        points.push_back({method, row.axis_value, row.migration_time_s, row.downtime_s});
  }
  std::stable_sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    if (a.method != b.method) return a.method < b.method;
    return a.migration_time_s < b.migration_time_s;
  });
  return points;
}

}  // namespace migsim
