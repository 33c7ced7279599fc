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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

/// Shared domain types and validation for the migration cost models.
///
/// Unit conventions, applied everywhere in this library:
///   - data volumes are megabits (memory sizes enter in MB and are
///     converted exactly once, x8, at ingestion),
///   - rates are megabits/second,
///   - times are seconds.
/// Field names ending in `_mb` on step logs and outcomes denote megabits;
/// only `memory_mb` on a profile is megabytes.
namespace migsim {

inline constexpr double kMegabitsPerMegabyte = 8.0;

inline double megabytes_to_megabits(double mb) { return mb * kMegabitsPerMegabyte; }
inline double megabits_to_megabytes(double mbit) { return mbit / kMegabitsPerMegabyte; }

enum class errc {
  non_positive_memory,
  non_positive_rate,
  negative_dirty_rate,
  negative_gap,
  lambda_not_less_than_one,
  empty_trace,
  trace_too_short,
  deadline_unreachable,
  missing_align_reference,
  averaged_params_required,
  traced_params_required,
  zero_containers,
  empty_series,
  invalid_spec,
  schema_violation,
  validation_failed,
  io_error,
};

inline const char* errc_name(errc e) {
  switch (e) {
    case errc::non_positive_memory: return "NonPositiveMemory";
    case errc::non_positive_rate: return "NonPositiveRate";
    case errc::negative_dirty_rate: return "NegativeDirtyRate";
    case errc::negative_gap: return "NegativeGap";
    case errc::lambda_not_less_than_one: return "LambdaNotLessThanOne";
    case errc::empty_trace: return "EmptyTrace";
    case errc::trace_too_short: return "TraceTooShort";
    case errc::deadline_unreachable: return "DeadlineUnreachable";
    case errc::missing_align_reference: return "MissingAlignReference";
    case errc::averaged_params_required: return "AveragedParamsRequired";
    case errc::traced_params_required: return "TracedParamsRequired";
    case errc::zero_containers: return "ZeroContainers";
    case errc::empty_series: return "EmptySeries";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::schema_violation: return "SchemaViolation";
    case errc::validation_failed: return "ValidationFailed";
    case errc::io_error: return "Io";
  }
  return "Unknown";
}

/// Thrown by validation, the engines, and the file layer. `kind()` is the
/// machine-readable discriminant; `step()` is the 1-based round/event index
/// when one applies, and `container_id()` is filled by fleet-level wrappers.
class ModelError : public std::runtime_error {
 public:
  ModelError(errc kind, std::string message, std::optional<int> step = std::nullopt,
             std::string container_id = {})
      : std::runtime_error(std::move(message)),
        kind_(kind),
        step_(step),
        container_id_(std::move(container_id)) {}

  errc kind() const { return kind_; }
  std::optional<int> step() const { return step_; }
  const std::string& container_id() const { return container_id_; }

  ModelError with_container(const std::string& id) const {
    return ModelError(kind_, what() + std::string(" (container ") + id + ")", step_, id);
  }

 private:
  errc kind_;
  std::optional<int> step_;
  std::string container_id_;
};

/// Averaged migration parameters: one transfer rate, one dirtying rate, and
/// one inter-round delay shared by every round.
struct AveragedParams {
  double avg_rate_mbps = 0.0;
  double avg_dirty_mbps = 0.0;
  double inter_round_delay_s = 0.0;

  double lambda() const { return avg_dirty_mbps / avg_rate_mbps; }

  bool operator==(const AveragedParams&) const = default;
};

/// One synchronization event of a non-average trace. `gap_s` is the idle
/// time appended after this event's transfer completes.
struct TraceEvent {
  double rate_mbps = 0.0;
  double dirty_mbps = 0.0;
  double gap_s = 0.0;

  bool operator==(const TraceEvent&) const = default;
};

/// Ordered per-event samples of transfer rate, dirtying rate, and gap.
struct RateTrace {
  std::vector<TraceEvent> events;

  bool operator==(const RateTrace&) const = default;
};

/// One migrating VM/container. `handoff_rate_mbps` is the rate available
/// during the stop-and-copy phase; it is consumed by the mirroring model
/// only (the pre-copy model hands off at its average rate).
struct ContainerProfile {
  std::string id;
  double memory_mb = 0.0;
  double handoff_rate_mbps = 0.0;
  std::variant<AveragedParams, RateTrace> params;

  double memory_megabits() const { return megabytes_to_megabits(memory_mb); }

  bool is_averaged() const { return std::holds_alternative<AveragedParams>(params); }
  bool is_traced() const { return std::holds_alternative<RateTrace>(params); }

  const AveragedParams& averaged() const { return std::get<AveragedParams>(params); }
  const RateTrace& trace() const { return std::get<RateTrace>(params); }

  bool operator==(const ContainerProfile&) const = default;
};

/// Hand-off trigger policies for the mirroring engine.
struct FixedSteps {
  int count = 1;
  bool operator==(const FixedSteps&) const = default;
};

/// Run events while the cumulative step end stays below the budget; the
/// event during which the budget elapses is the last one.
struct Deadline {
  double budget_s = 0.0;
  bool operator==(const Deadline&) const = default;
};

/// Deadline whose budget is the pre-hand-off duration of an m-round
/// pre-copy run on the paired averaged parameters.
struct AlignToPrecopy {
  int rounds = 1;
  bool operator==(const AlignToPrecopy&) const = default;
};

using HandoffPolicy = std::variant<FixedSteps, Deadline, AlignToPrecopy>;

/// Per-round/per-event record. `volume_mb` is in megabits; `duration_s`
/// covers the transfer plus the trailing gap; `lambda` is 0 for step 1 by
/// convention (no prior dirtying interval exists). `rate_mbps` is the rate
/// in force during the transfer portion, kept for bandwidth accounting.
struct StepLog {
  int index = 0;
  double volume_mb = 0.0;
  double duration_s = 0.0;
  double lambda = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  double rate_mbps = 0.0;

  bool operator==(const StepLog&) const = default;
};

/// Per-container result. Two identities hold up to 1e-9 relative:
/// migration_time_s == sum of step durations + downtime_s, and
/// overhead_mb == sum of step volumes + stop_volume_mb.
struct MigrationOutcome {
  std::string container_id;
  double downtime_s = 0.0;
  double migration_time_s = 0.0;
  double overhead_mb = 0.0;
  double stop_volume_mb = 0.0;
  double handoff_rate_mbps = 0.0;
  std::vector<StepLog> steps;

  bool operator==(const MigrationOutcome&) const = default;
};

/// Interval during which the aggregate transfer rate exceeded the reserved
/// bandwidth. Intervals are half-open [start_s, end_s).
struct BandwidthViolation {
  double start_s = 0.0;
  double end_s = 0.0;
  double aggregate_rate_mbps = 0.0;

  bool operator==(const BandwidthViolation&) const = default;
};

/// Aggregate over p simultaneously migrating containers: max downtime, max
/// migration time, summed overhead, plus the capacity report.
struct FleetOutcome {
  std::vector<MigrationOutcome> per_container;
  double fleet_downtime_s = 0.0;
  double fleet_migration_time_s = 0.0;
  double fleet_overhead_mb = 0.0;
  std::vector<BandwidthViolation> bandwidth_report;
};

namespace detail {

inline void validate_averaged(const AveragedParams& p) {
  if (!(p.avg_rate_mbps > 0.0))
    throw ModelError(errc::non_positive_rate, "avg_rate_mbps must be > 0");
  if (p.avg_dirty_mbps < 0.0)
    throw ModelError(errc::negative_dirty_rate, "avg_dirty_mbps must be >= 0");
  if (p.inter_round_delay_s < 0.0)
    throw ModelError(errc::negative_gap, "inter_round_delay_s must be >= 0");
  if (!(p.lambda() < 1.0))
    throw ModelError(errc::lambda_not_less_than_one,
                     "dirtying/transfer ratio must be < 1 for the iterative model to converge");
}

inline void validate_trace(const RateTrace& t) {
  if (t.events.empty()) throw ModelError(errc::empty_trace, "trace has no events");
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const TraceEvent& e = t.events[i];
    const int step = static_cast<int>(i) + 1;
    if (!(e.rate_mbps > 0.0))
      throw ModelError(errc::non_positive_rate, "event rate_mbps must be > 0", step);
    if (e.dirty_mbps < 0.0)
      throw ModelError(errc::negative_dirty_rate, "event dirty_mbps must be >= 0", step);
    if (e.gap_s < 0.0) throw ModelError(errc::negative_gap, "event gap_s must be >= 0", step);
    if (i > 0) {
      const double lambda = t.events[i - 1].dirty_mbps / e.rate_mbps;
      if (!(lambda < 1.0))
        throw ModelError(errc::lambda_not_less_than_one,
                         "per-event dirtying/transfer ratio must be < 1", step);
    }
  }
}

}  // namespace detail

/// Checks every profile invariant, including lambda < 1 for averaged
/// parameters and for every consecutive event pair of a trace. Returns the
/// profile unchanged on success; pure and idempotent.
inline const ContainerProfile& validate_profile(const ContainerProfile& profile) {
  if (!(profile.memory_mb > 0.0))
    throw ModelError(errc::non_positive_memory, "memory_mb must be > 0");
  if (!(profile.handoff_rate_mbps > 0.0))
    throw ModelError(errc::non_positive_rate, "handoff_rate_mbps must be > 0");
  if (profile.is_averaged())
    detail::validate_averaged(profile.averaged());
  else
    detail::validate_trace(profile.trace());
  return profile;
}

}  // namespace migsim
