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

#include <cmath>
#include <numeric>
#include <vector>

#include "migsim/core.hpp"

/// Pre-copy live-migration cost model on averaged parameters.
///
/// Round 1 ships the full memory image; round i >= 2 ships what was dirtied
/// during round i-1 (dirtying accrues across the trailing inter-round gap as
/// well). With lambda = avg_dirty/avg_rate the round times obey
/// t_i = lambda * t_{i-1} + tau, and hand-off after m rounds pays a
/// stop-and-copy downtime of lambda * t_m.
///
/// The recursion is the ground truth here; the closed forms are derived
/// accelerators and are cross-checked against it in the test suite.
namespace migsim {

namespace detail {

inline const AveragedParams& require_averaged(const ContainerProfile& profile) {
  validate_profile(profile);
  if (!profile.is_averaged())
    throw ModelError(errc::averaged_params_required,
                     "the pre-copy model requires averaged parameters");
  return profile.averaged();
}

inline void require_positive_rounds(int rounds) {
  if (rounds < 1) throw ModelError(errc::invalid_spec, "round count must be >= 1");
}

}  // namespace detail

/// Per-round volumes and times for m rounds, evaluated by the recursion.
inline std::vector<StepLog> precopy_rounds(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  detail::require_positive_rounds(rounds);

  std::vector<StepLog> steps;
  steps.reserve(static_cast<std::size_t>(rounds));
  const double lambda = ap.lambda();
  double clock = 0.0;
  double prev_duration = 0.0;
  for (int i = 1; i <= rounds; ++i) {
    const double volume = (i == 1) ? profile.memory_megabits() : ap.avg_dirty_mbps * prev_duration;
    const double duration = volume / ap.avg_rate_mbps + ap.inter_round_delay_s;
    StepLog step;
    step.index = i;
    step.volume_mb = volume;
    step.duration_s = duration;
    step.lambda = (i == 1) ? 0.0 : lambda;
    step.start_s = clock;
    step.end_s = clock + duration;
    step.rate_mbps = ap.avg_rate_mbps;
    steps.push_back(step);
    clock = step.end_s;
    prev_duration = duration;
  }
  return steps;
}

/// Closed form of the round-i time:
/// (M/r) * lambda^(i-1) + tau * (1 - lambda^i) / (1 - lambda).
inline double precopy_round_time_closed_form(const ContainerProfile& profile, int round_index) {
  const AveragedParams& ap = detail::require_averaged(profile);
  detail::require_positive_rounds(round_index);
  const double lambda = ap.lambda();
  const double first = profile.memory_megabits() / ap.avg_rate_mbps;
  const double geometric =
      (lambda == 0.0) ? 1.0 : (1.0 - std::pow(lambda, round_index)) / (1.0 - lambda);
  return first * std::pow(lambda, round_index - 1) + ap.inter_round_delay_s * geometric;
}

/// Stop-and-copy downtime after m rounds, from the recursion:
/// TD = stop_volume / avg_rate with stop_volume = avg_dirty * t_m.
inline double precopy_downtime(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  const std::vector<StepLog> steps = precopy_rounds(profile, rounds);
  const double stop_volume = ap.avg_dirty_mbps * steps.back().duration_s;
  return stop_volume / ap.avg_rate_mbps;
}

/// Closed form of the downtime:
/// (M/r) * lambda^m + lambda * tau * (1 - lambda^m) / (1 - lambda).
inline double precopy_downtime_closed_form(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  detail::require_positive_rounds(rounds);
  const double lambda = ap.lambda();
  const double first = profile.memory_megabits() / ap.avg_rate_mbps;
  const double geometric =
      (lambda == 0.0) ? 1.0 : (1.0 - std::pow(lambda, rounds)) / (1.0 - lambda);
  return first * std::pow(lambda, rounds) + lambda * ap.inter_round_delay_s * geometric;
}

/// Selects the closed form used for the m-round time sum. The published
/// variant carries a lambda^(m+1) factor in the delay coefficient; it
/// disagrees with the recursion (already at m = 1 it yields
/// tau*(1-lambda-lambda^2)/(1-lambda) instead of tau) and is exposed for
/// side-by-side study only. All shipped results use recursion_consistent.
enum class TimeSumForm { recursion_consistent, as_published };

/// Closed form of sum_{i=1..m} t_i.
inline double precopy_time_sum_closed_form(const ContainerProfile& profile, int rounds,
                                           TimeSumForm form = TimeSumForm::recursion_consistent) {
  const AveragedParams& ap = detail::require_averaged(profile);
  detail::require_positive_rounds(rounds);
  const double lambda = ap.lambda();
  const double m = static_cast<double>(rounds);
  const double first = profile.memory_megabits() / ap.avg_rate_mbps;
  if (lambda == 0.0) return first + ap.inter_round_delay_s * m;
  const double lambda_m = std::pow(lambda, rounds);
  const double one_minus = 1.0 - lambda;
  const double tail = (form == TimeSumForm::recursion_consistent)
                          ? lambda * (1.0 - lambda_m)
                          : lambda * (1.0 - lambda_m * lambda);
  return first * (1.0 - lambda_m) / one_minus +
         ap.inter_round_delay_s * (m * one_minus - tail) / (one_minus * one_minus);
}

/// Pre-hand-off duration: sum of the m round times, from the recursion.
/// This is the hand-off trigger instant shared with the mirroring model.
inline double precopy_prehandoff_duration(const ContainerProfile& profile, int rounds) {
  const std::vector<StepLog> steps = precopy_rounds(profile, rounds);
  return steps.back().end_s;
}

/// Total migration time: sum of round times plus downtime.
inline double precopy_migration_time(const ContainerProfile& profile, int rounds) {
  return precopy_prehandoff_duration(profile, rounds) + precopy_downtime(profile, rounds);
}

/// Total transferred data in megabits: initial image, per-round dirty
/// retransmissions, and the stop-and-copy payload.
inline double precopy_overhead(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  const std::vector<StepLog> steps = precopy_rounds(profile, rounds);
  double total = 0.0;
  for (const StepLog& s : steps) total += s.volume_mb;
  return total + ap.avg_dirty_mbps * steps.back().duration_s;
}

/// Closed form of the overhead for zero inter-round delay:
/// 8M * (1 - lambda^(m+1)) / (1 - lambda).
inline double precopy_overhead_closed_form(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  detail::require_positive_rounds(rounds);
  if (ap.inter_round_delay_s != 0.0)
    throw ModelError(errc::invalid_spec,
                     "the overhead closed form holds for zero inter-round delay only");
  const double lambda = ap.lambda();
  const double mem = profile.memory_megabits();
  if (lambda == 0.0) return mem;
  return mem * (1.0 - std::pow(lambda, rounds + 1)) / (1.0 - lambda);
}

/// Bundles the step log with downtime, migration time, and overhead.
inline MigrationOutcome precopy_outcome(const ContainerProfile& profile, int rounds) {
  const AveragedParams& ap = detail::require_averaged(profile);
  MigrationOutcome out;
  out.container_id = profile.id;
  out.steps = precopy_rounds(profile, rounds);
  out.stop_volume_mb = ap.avg_dirty_mbps * out.steps.back().duration_s;
  out.downtime_s = out.stop_volume_mb / ap.avg_rate_mbps;
  out.migration_time_s = out.steps.back().end_s + out.downtime_s;
  double volume_sum = 0.0;
  for (const StepLog& s : out.steps) volume_sum += s.volume_mb;
  out.overhead_mb = volume_sum + out.stop_volume_mb;
  // The pre-copy stop-and-copy phase runs at the average rate (there is no
  // separate hand-off rate in this model).
  out.handoff_rate_mbps = ap.avg_rate_mbps;
  return out;
}

}  // namespace migsim
