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
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/migrror.hpp"
#include "migsim/precopy.hpp"
#include "migsim/tracekit.hpp"

/// Simultaneous migration of p containers under a shared bandwidth budget.
/// All containers start at t = 0. Fleet downtime and migration time are the
/// per-container maxima, overhead is the sum, and the reserved-bandwidth
/// constraint is checked on the merged timeline by a sweep line.
namespace migsim {

/// Pre-copy fleet method: m rounds per container. `inter_round_delay_s`
/// records the method-level delay default (container parameters may
/// override it individually at manifest load).
struct PrecopyMethod {
  int rounds = 10;
  double inter_round_delay_s = 0.1;

  bool operator==(const PrecopyMethod&) const = default;
};

/// Mirroring fleet method. For AlignToPrecopy, the per-container reference
/// is built from the container's own rates (averaged values, or trace means
/// for traced containers) combined with `align_delay_s` as the paired
/// pre-copy inter-round delay. `event_gap_s` records the method-level gap
/// default used when averaged containers are expanded into event traces.
struct MigrrorMethod {
  HandoffPolicy policy = FixedSteps{10};
  double align_delay_s = 0.1;
  double event_gap_s = 0.01;

  bool operator==(const MigrrorMethod&) const = default;
};

using FleetMethod = std::variant<PrecopyMethod, MigrrorMethod>;

struct FleetSpec {
  std::vector<ContainerProfile> containers;
  double total_bandwidth_mbps = 0.0;
  FleetMethod method;

  bool operator==(const FleetSpec&) const = default;
};

/// Equal split of the reserved bandwidth across p containers.
inline double allocate_equal(double total_bandwidth_mbps, std::size_t count) {
  if (count == 0) throw ModelError(errc::zero_containers, "cannot allocate across zero containers");
  if (!(total_bandwidth_mbps > 0.0))
    throw ModelError(errc::invalid_spec, "total bandwidth must be > 0");
  return total_bandwidth_mbps / static_cast<double>(count);
}

/// Sweeps the merged timeline of all transfer intervals (step transfer
/// portions plus each stop-and-copy phase; gaps carry zero rate) and
/// reports every maximal constant-rate interval whose aggregate rate
/// exceeds the reserved bandwidth. Empty report means feasible.
inline std::vector<BandwidthViolation> validate_bandwidth_timeline(
    std::span<const MigrationOutcome> outcomes, double total_bandwidth_mbps) {
  struct Edge {
    double time;
    double delta;
  };
  std::vector<Edge> edges;
  for (const MigrationOutcome& outcome : outcomes) {
    for (const StepLog& step : outcome.steps) {
      if (step.volume_mb <= 0.0) continue;
      const double transfer_end = step.start_s + step.volume_mb / step.rate_mbps;
      edges.push_back({step.start_s, step.rate_mbps});
      edges.push_back({transfer_end, -step.rate_mbps});
    }
    if (outcome.downtime_s > 0.0 && !outcome.steps.empty()) {
      const double start = outcome.steps.back().end_s;
      edges.push_back({start, outcome.handoff_rate_mbps});
      edges.push_back({start + outcome.downtime_s, -outcome.handoff_rate_mbps});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.time < b.time; });

  const double threshold =
      total_bandwidth_mbps + 1e-9 * std::max(1.0, total_bandwidth_mbps);
  std::vector<BandwidthViolation> report;
  double aggregate = 0.0;
  std::size_t i = 0;
  while (i < edges.size()) {
    const double t = edges[i].time;
    for (; i < edges.size() && edges[i].time == t; ++i) aggregate += edges[i].delta;
    if (i == edges.size()) break;
    const double next = edges[i].time;
    if (next > t && aggregate > threshold) {
      if (!report.empty() && report.back().end_s == t &&
          report.back().aggregate_rate_mbps == aggregate) {
        report.back().end_s = next;
      } else {
        report.push_back({t, next, aggregate});
      }
    }
  }
  return report;
}

namespace detail {

inline MigrationOutcome run_container(const ContainerProfile& profile, const FleetMethod& method) {
  if (const PrecopyMethod* pre = std::get_if<PrecopyMethod>(&method)) {
    if (!profile.is_averaged())
      throw ModelError(errc::averaged_params_required,
                       "the pre-copy method needs averaged parameters; supply averaged values or "
                       "reduce the trace to its means");
    return precopy_outcome(profile, pre->rounds);
  }
  const MigrrorMethod& mir = std::get<MigrrorMethod>(method);
  std::optional<AveragedParams> align_reference;
  if (std::holds_alternative<AlignToPrecopy>(mir.policy)) {
    AveragedParams ref;
    if (profile.is_averaged()) {
      ref.avg_rate_mbps = profile.averaged().avg_rate_mbps;
      ref.avg_dirty_mbps = profile.averaged().avg_dirty_mbps;
    } else {
      std::vector<double> rates, dirties;
      rates.reserve(profile.trace().events.size());
      dirties.reserve(profile.trace().events.size());
      for (const TraceEvent& e : profile.trace().events) {
        rates.push_back(e.rate_mbps);
        dirties.push_back(e.dirty_mbps);
      }
      ref.avg_rate_mbps = series_mean(rates);
      ref.avg_dirty_mbps = series_mean(dirties);
    }
    ref.inter_round_delay_s = mir.align_delay_s;
    align_reference = ref;
  }
  return migrror_outcome(profile, mir.policy, align_reference);
}

}  // namespace detail

/// Runs the selected engine on every container (all starting at t = 0),
/// aggregates the fleet metrics, and attaches the bandwidth report.
/// Constraint violations are reported, not fatal.
inline FleetOutcome run_fleet(const FleetSpec& spec) {
  if (spec.containers.empty())
    throw ModelError(errc::zero_containers, "fleet has no containers");
  if (!(spec.total_bandwidth_mbps > 0.0))
    throw ModelError(errc::invalid_spec, "total bandwidth must be > 0");

  FleetOutcome fleet;
  fleet.per_container.reserve(spec.containers.size());
  for (const ContainerProfile& profile : spec.containers) {
    try {
      fleet.per_container.push_back(detail::run_container(profile, spec.method));
    } catch (const ModelError& e) {
      throw e.with_container(profile.id);
    }
  }
  fleet.fleet_downtime_s = 0.0;
  fleet.fleet_migration_time_s = 0.0;
  fleet.fleet_overhead_mb = 0.0;
  for (const MigrationOutcome& outcome : fleet.per_container) {
    fleet.fleet_downtime_s = std::max(fleet.fleet_downtime_s, outcome.downtime_s);
    fleet.fleet_migration_time_s = std::max(fleet.fleet_migration_time_s, outcome.migration_time_s);
    fleet.fleet_overhead_mb += outcome.overhead_mb;
  }
  fleet.bandwidth_report = validate_bandwidth_timeline(fleet.per_container,
                                                       spec.total_bandwidth_mbps);
  return fleet;
}

}  // namespace migsim
