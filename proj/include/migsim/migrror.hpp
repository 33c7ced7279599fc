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

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/precopy.hpp"

/// Mirroring (MiGrror) migration cost model on per-event traces.
///
/// Event 1 ships the full memory image; event i >= 2 ships what was dirtied
/// during event i-1, at that event's own transfer rate:
///   t_i = d_{i-1} * t_{i-1} / r_i + gap_i.
/// Hand-off pays a stop-and-copy downtime of d_n * t_n / r_s, where r_s is
/// the profile's hand-off rate. Event counts come from a HandoffPolicy; a
/// profile with averaged parameters is expanded on the fly into a constant
/// trace (rate, dirty, gap) = (avg_rate, avg_dirty, inter_round_delay), under
/// which the recursion reduces term-by-term to the pre-copy one.
namespace migsim {

/// Hard cap on on-the-fly expansion of averaged parameters, so a deadline
/// that outruns the recursion's convergent horizon fails instead of spinning.
inline constexpr std::size_t kMaxExpandedEvents = 2'000'000;

/// Constant trace realizing averaged parameters event-by-event.
inline RateTrace constant_trace(const AveragedParams& params, std::size_t length) {
  RateTrace trace;
  trace.events.assign(length, TraceEvent{params.avg_rate_mbps, params.avg_dirty_mbps,
                                         params.inter_round_delay_s});
  return trace;
}

namespace detail {

struct MigrrorRun {
  std::vector<StepLog> steps;
  double final_dirty_mbps = 0.0;
};

struct EventSource {
  const RateTrace* trace = nullptr;  // null when expanding averaged params
  TraceEvent constant;

  std::size_t available() const {
    return trace ? trace->events.size() : kMaxExpandedEvents;
  }
  const TraceEvent& at(std::size_t i) const {
    return trace ? trace->events[i] : constant;
  }
};

inline double resolve_deadline(const ContainerProfile& profile, const AlignToPrecopy& align,
                               const std::optional<AveragedParams>& reference) {
  if (align.rounds < 1)
    throw ModelError(errc::invalid_spec, "align rounds must be >= 1");
  AveragedParams ref;
  if (reference) {
    ref = *reference;
  } else if (profile.is_averaged()) {
    ref = profile.averaged();
  } else {
    throw ModelError(errc::missing_align_reference,
                     "aligning a traced profile to pre-copy requires paired averaged parameters");
  }
  ContainerProfile paired{profile.id, profile.memory_mb, profile.handoff_rate_mbps, ref};
  return precopy_prehandoff_duration(paired, align.rounds);
}

inline MigrrorRun run_migrror(const ContainerProfile& profile, const HandoffPolicy& policy,
                              const std::optional<AveragedParams>& align_reference) {
  validate_profile(profile);

  EventSource source;
  if (profile.is_traced()) {
    source.trace = &profile.trace();
  } else {
    const AveragedParams& ap = profile.averaged();
    source.constant = TraceEvent{ap.avg_rate_mbps, ap.avg_dirty_mbps, ap.inter_round_delay_s};
  }

  std::size_t fixed_count = 0;
  double deadline = std::numeric_limits<double>::quiet_NaN();
  if (const FixedSteps* fs = std::get_if<FixedSteps>(&policy)) {
    if (fs->count < 1) throw ModelError(errc::invalid_spec, "fixed step count must be >= 1");
    fixed_count = static_cast<std::size_t>(fs->count);
  } else if (const Deadline* dl = std::get_if<Deadline>(&policy)) {
    if (!(dl->budget_s > 0.0))
      throw ModelError(errc::invalid_spec, "deadline budget must be > 0");
    deadline = dl->budget_s;
  } else {
    deadline = resolve_deadline(profile, std::get<AlignToPrecopy>(policy), align_reference);
  }
  const bool by_deadline = fixed_count == 0;

  MigrrorRun run;
  double clock = 0.0;
  double prev_duration = 0.0;
  double prev_dirty = 0.0;
  for (std::size_t i = 0;; ++i) {
    if (by_deadline) {
      if (i >= 1 && clock >= deadline) break;
    } else if (i == fixed_count) {
      break;
    }
    if (i == source.available()) {
      if (source.trace) {
        throw ModelError(errc::trace_too_short,
                         "trace has " + std::to_string(source.trace->events.size()) +
                             " events, fewer than the hand-off policy requires");
      }
      throw ModelError(errc::trace_too_short, "event expansion cap reached before the deadline");
    }
    const TraceEvent& event = source.at(i);
    const double volume = (i == 0) ? profile.memory_megabits() : prev_dirty * prev_duration;
    const double duration = volume / event.rate_mbps + event.gap_s;
    StepLog step;
    step.index = static_cast<int>(i) + 1;
    step.volume_mb = volume;
    step.duration_s = duration;
    step.lambda = (i == 0) ? 0.0 : prev_dirty / event.rate_mbps;
    step.start_s = clock;
    step.end_s = clock + duration;
    step.rate_mbps = event.rate_mbps;
    run.steps.push_back(step);
    clock = step.end_s;
    prev_duration = duration;
    prev_dirty = event.dirty_mbps;
    // Expanding a zero-dirty, zero-gap profile can never advance the clock
    // again; a deadline beyond this point is unreachable.
    if (by_deadline && !source.trace && duration == 0.0 && clock < deadline)
      throw ModelError(errc::deadline_unreachable,
                       "remaining events have zero duration; the deadline cannot be reached");
  }
  run.final_dirty_mbps = prev_dirty;
  return run;
}

}  // namespace detail

/// Per-event volumes and times under the given hand-off policy.
/// `align_reference` supplies the paired averaged parameters for
/// AlignToPrecopy; it defaults to the profile's own averaged parameters and
/// is mandatory for traced profiles under that policy.
inline std::vector<StepLog> migrror_events(
    const ContainerProfile& profile, const HandoffPolicy& policy,
    const std::optional<AveragedParams>& align_reference = std::nullopt) {
  return detail::run_migrror(profile, policy, align_reference).steps;
}

/// Bundled outcome: step log, stop-and-copy downtime, migration time, and
/// overhead.
inline MigrationOutcome migrror_outcome(
    const ContainerProfile& profile, const HandoffPolicy& policy,
    const std::optional<AveragedParams>& align_reference = std::nullopt) {
  detail::MigrrorRun run = detail::run_migrror(profile, policy, align_reference);
  MigrationOutcome out;
  out.container_id = profile.id;
  out.steps = std::move(run.steps);
  out.stop_volume_mb = run.final_dirty_mbps * out.steps.back().duration_s;
  out.downtime_s = out.stop_volume_mb / profile.handoff_rate_mbps;
  out.migration_time_s = out.steps.back().end_s + out.downtime_s;
  double volume_sum = 0.0;
  for (const StepLog& s : out.steps) volume_sum += s.volume_mb;
  out.overhead_mb = volume_sum + out.stop_volume_mb;
  out.handoff_rate_mbps = profile.handoff_rate_mbps;
  return out;
}

/// Stop-and-copy downtime: final event's dirtying rate over the hand-off
/// rate, times the final event time.
inline double migrror_downtime(const ContainerProfile& profile, const HandoffPolicy& policy,
                               const std::optional<AveragedParams>& align_reference = std::nullopt) {
  return migrror_outcome(profile, policy, align_reference).downtime_s;
}

/// Total migration time: sum of event times plus downtime.
inline double migrror_migration_time(
    const ContainerProfile& profile, const HandoffPolicy& policy,
    const std::optional<AveragedParams>& align_reference = std::nullopt) {
  return migrror_outcome(profile, policy, align_reference).migration_time_s;
}

/// Total transferred data in megabits, including the stop-and-copy payload.
inline double migrror_overhead(const ContainerProfile& profile, const HandoffPolicy& policy,
                               const std::optional<AveragedParams>& align_reference = std::nullopt) {
  return migrror_outcome(profile, policy, align_reference).overhead_mb;
}

}  // namespace migsim
