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

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "migsim/migrror.hpp"
#include "migsim/precopy.hpp"
#include "oracle.hpp"

using namespace migsim;
using Catch::Matchers::WithinRel;
using testutil::averaged_profile;
using testutil::traced_profile;

namespace {

struct RandomTrace {
  std::vector<double> rates, dirties, gaps;
};

RandomTrace sample_trace(std::mt19937_64& rng, std::size_t events, double max_gap = 0.5) {
  std::uniform_real_distribution<double> rate(50.0, 500.0);
  std::uniform_real_distribution<double> frac(0.0, 0.95);
  std::uniform_real_distribution<double> gap(0.0, max_gap);
  RandomTrace t;
  for (std::size_t i = 0; i < events; ++i) t.rates.push_back(rate(rng));
  for (std::size_t i = 0; i < events; ++i) {
    // keep every consecutive dirty/rate ratio below 1
    const double cap = (i + 1 < events) ? t.rates[i + 1] : 100.0;
    t.dirties.push_back(frac(rng) * cap);
    t.gaps.push_back(gap(rng));
  }
  return t;
}

}  // namespace

TEST_CASE("event recursion matches the hand-stepped fixtures") {
  const ContainerProfile p =
      traced_profile(200.0, {200.0, 200.0}, {50.0, 150.0}, {1.0, 1.0}, 200.0);
  const auto steps = migrror_events(p, FixedSteps{2});
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].duration_s == 9.0);
  CHECK(steps[1].duration_s == 3.25);
  CHECK(steps[0].volume_mb == 1600.0);
  CHECK(steps[1].volume_mb == 450.0);
  CHECK(steps[0].lambda == 0.0);
  CHECK(steps[1].lambda == 0.25);

  const auto expected = oracle::migrror(1600.0, {200.0, 200.0}, {50.0, 150.0}, {1.0, 1.0}, 200.0, 2);
  CHECK(steps[0].duration_s == expected.durations[0]);
  CHECK(steps[1].duration_s == expected.durations[1]);

  const MigrationOutcome out = migrror_outcome(p, FixedSteps{2});
  CHECK(out.downtime_s == 2.4375);
  CHECK(out.migration_time_s == 14.6875);
  CHECK(out.overhead_mb == 2537.5);
  CHECK(out.stop_volume_mb == 487.5);
  CHECK(out.downtime_s == expected.downtime);

  CHECK(out.steps.front().start_s == 0.0);
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    CHECK(out.steps[i].end_s == out.steps[i].start_s + out.steps[i].duration_s);
    if (i > 0) CHECK(out.steps[i].start_s == out.steps[i - 1].end_s);
  }
}

TEST_CASE("dirty-rate ordering moves the downtime at a fixed mean") {
  const double down_late = migrror_downtime(
      traced_profile(200.0, {200.0, 200.0}, {50.0, 150.0}, {1.0, 1.0}, 200.0), FixedSteps{2});
  const double down_early = migrror_downtime(
      traced_profile(200.0, {200.0, 200.0}, {150.0, 50.0}, {1.0, 1.0}, 200.0), FixedSteps{2});
  const double down_const = migrror_downtime(
      traced_profile(200.0, {200.0, 200.0}, {100.0, 100.0}, {1.0, 1.0}, 200.0), FixedSteps{2});
  CHECK(down_late == 2.4375);
  CHECK(down_early == 1.9375);
  CHECK(down_const == 2.75);
}

TEST_CASE("transfer-rate ordering moves the migration time at a fixed mean") {
  // same mean rate 200 in both runs; dirty stays at 50 so every per-event
  // ratio remains below 1
  const double slow_first = migrror_migration_time(
      traced_profile(200.0, {100.0, 300.0}, {50.0, 50.0}, {0.0, 0.0}, 200.0), FixedSteps{2});
  const double fast_first = migrror_migration_time(
      traced_profile(200.0, {300.0, 100.0}, {50.0, 50.0}, {0.0, 0.0}, 200.0), FixedSteps{2});
  CHECK_THAT(slow_first, WithinRel(16.0 + 800.0 / 300.0 + 50.0 * (800.0 / 300.0) / 200.0, 1e-12));
  CHECK_THAT(fast_first,
             WithinRel(1600.0 / 300.0 + 800.0 / 300.0 + 50.0 * (800.0 / 300.0) / 200.0, 1e-12));
  CHECK(slow_first > fast_first);
}

TEST_CASE("zero dirtying collapses to the initial copy") {
  const ContainerProfile p = traced_profile(200.0, {200.0, 200.0}, {0.0, 0.0}, {0.0, 0.0}, 200.0);
  const auto steps = migrror_events(p, FixedSteps{2});
  CHECK(steps[0].duration_s == 8.0);
  CHECK(steps[1].duration_s == 0.0);
  CHECK(steps[0].volume_mb == 1600.0);
  CHECK(steps[1].volume_mb == 0.0);
  const MigrationOutcome out = migrror_outcome(p, FixedSteps{2});
  CHECK(out.downtime_s == 0.0);
  CHECK(out.overhead_mb == 1600.0);
}

TEST_CASE("a constant trace degenerates to the pre-copy recursion") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> mem(10.0, 4000.0);
  std::uniform_real_distribution<double> rate(10.0, 1000.0);
  std::uniform_real_distribution<double> lambda(1e-6, 0.99);
  std::uniform_real_distribution<double> delay(0.0, 1.0);
  std::uniform_int_distribution<int> rounds(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = rate(rng);
    const double d = lambda(rng) * r;
    const double tau = delay(rng);
    const int m = rounds(rng);
    const ContainerProfile averaged = averaged_profile(mem(rng), r, d, tau);
    const ContainerProfile traced =
        traced_profile(averaged.memory_mb, std::vector<double>(m, r), std::vector<double>(m, d),
                       std::vector<double>(m, tau), r);

    const MigrationOutcome pre = precopy_outcome(averaged, m);
    const MigrationOutcome mir = migrror_outcome(traced, FixedSteps{m});
    REQUIRE(pre.steps.size() == mir.steps.size());
    for (std::size_t i = 0; i < pre.steps.size(); ++i) {
      CHECK_THAT(mir.steps[i].volume_mb, WithinRel(pre.steps[i].volume_mb, 1e-12));
      CHECK_THAT(mir.steps[i].duration_s, WithinRel(pre.steps[i].duration_s, 1e-12));
      CHECK(mir.steps[i].lambda == pre.steps[i].lambda);
    }
    CHECK_THAT(mir.downtime_s, WithinRel(pre.downtime_s, 1e-12));
    CHECK_THAT(mir.migration_time_s, WithinRel(pre.migration_time_s, 1e-12));
    CHECK_THAT(mir.overhead_mb, WithinRel(pre.overhead_mb, 1e-12));
  }
}

TEST_CASE("an averaged profile expands into its constant trace") {
  const ContainerProfile averaged = averaged_profile(200.0, 200.0, 100.0, 0.05);
  const ContainerProfile traced = traced_profile(
      200.0, std::vector<double>(10, 200.0), std::vector<double>(10, 100.0),
      std::vector<double>(10, 0.05), 200.0);
  const MigrationOutcome a = migrror_outcome(averaged, FixedSteps{10});
  const MigrationOutcome b = migrror_outcome(traced, FixedSteps{10});
  CHECK(a.downtime_s == b.downtime_s);
  CHECK(a.migration_time_s == b.migration_time_s);
  CHECK(a.overhead_mb == b.overhead_mb);
}

TEST_CASE("zero-gap downtime ignores the dirty-rate ordering, migration time does not") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> mem(10.0, 1000.0);
  std::uniform_real_distribution<double> rate(50.0, 500.0);
  std::uniform_int_distribution<std::size_t> length(2, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = length(rng);
    const double r = rate(rng);
    const double handoff = rate(rng);
    std::uniform_real_distribution<double> dirty(1.0, 0.9 * r);
    std::vector<double> dirties;
    for (std::size_t i = 0; i < n; ++i) dirties.push_back(dirty(rng));

    const double memory = mem(rng);
    const auto run = [&](const std::vector<double>& ds) {
      return migrror_outcome(traced_profile(memory, std::vector<double>(n, r), ds,
                                            std::vector<double>(n, 0.0), handoff),
                             FixedSteps{static_cast<int>(n)});
    };

    const MigrationOutcome original = run(dirties);
    std::vector<double> shuffled = dirties;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng() % i]);
    const MigrationOutcome permuted = run(shuffled);
    CHECK_THAT(permuted.downtime_s, WithinRel(original.downtime_s, 1e-12));

    // closed product: 8M * prod(d) / (prod(r) * r_s)
    double product = megabytes_to_megabits(memory);
    for (std::size_t i = 0; i < n; ++i) product *= dirties[i] / r;
    CHECK_THAT(original.downtime_s, WithinRel(product / handoff, 1e-9));

    std::vector<double> ascending = dirties;
    std::sort(ascending.begin(), ascending.end());
    std::vector<double> descending = ascending;
    std::reverse(descending.begin(), descending.end());
    if (ascending.front() != ascending.back()) {
      const double tm_asc = run(ascending).migration_time_s;
      const double tm_desc = run(descending).migration_time_s;
      CHECK(tm_asc < tm_desc);
    }
  }
}

TEST_CASE("equal-mean traces can diverge in downtime by more than 20 percent") {
  const double spread = migrror_downtime(
      traced_profile(200.0, {200.0, 200.0}, {10.0, 190.0}, {1.0, 1.0}, 200.0), FixedSteps{2});
  const double constant = migrror_downtime(
      traced_profile(200.0, {200.0, 200.0}, {100.0, 100.0}, {1.0, 1.0}, 200.0), FixedSteps{2});
  CHECK(std::abs(spread - constant) / constant >= 0.20);
}

TEST_CASE("a deadline cuts the same prefix as the matching fixed-step run") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomTrace t = sample_trace(rng, 10, 0.2);
    const ContainerProfile p = traced_profile(100.0, t.rates, t.dirties, t.gaps, 200.0);
    const auto full = migrror_events(p, FixedSteps{10});
    for (std::size_t k = 1; k <= 10; ++k) {
      const auto fixed = migrror_events(p, FixedSteps{static_cast<int>(k)});
      const auto deadline = migrror_events(p, Deadline{full[k - 1].end_s});
      REQUIRE(deadline.size() >= k);
      for (std::size_t i = 0; i < k; ++i) CHECK(deadline[i] == fixed[i]);
    }
  }
}

TEST_CASE("deadline semantics: the event the budget falls into is the last one") {
  const ContainerProfile p =
      traced_profile(200.0, {200.0, 200.0, 200.0}, {50.0, 50.0, 50.0}, {1.0, 1.0, 1.0}, 200.0);
  const auto all = migrror_events(p, FixedSteps{3});  // ends at 9, 12.25, ...

  CHECK(migrror_events(p, Deadline{0.5}).size() == 1);   // within event 1
  CHECK(migrror_events(p, Deadline{9.0}).size() == 1);   // exactly at the end of event 1
  CHECK(migrror_events(p, Deadline{9.1}).size() == 2);   // within event 2
  CHECK(migrror_events(p, Deadline{all[1].end_s}).size() == 2);
  CHECK(migrror_events(p, Deadline{all[1].end_s + 0.01}).size() == 3);
}

TEST_CASE("aligning to the paired pre-copy run reproduces its round count") {
  const ContainerProfile averaged = averaged_profile(200.0, 200.0, 100.0, 0.1);
  const auto aligned = migrror_events(averaged, AlignToPrecopy{10});
  const auto fixed = migrror_events(averaged, FixedSteps{10});
  REQUIRE(aligned.size() == 10);
  for (std::size_t i = 0; i < aligned.size(); ++i) CHECK(aligned[i] == fixed[i]);

  SECTION("a traced profile needs the paired averaged parameters") {
    const ContainerProfile traced =
        traced_profile(200.0, {200.0, 200.0}, {50.0, 50.0}, {0.01, 0.01}, 200.0);
    try {
      migrror_events(traced, AlignToPrecopy{10});
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == errc::missing_align_reference);
    }
    // the horizon comes from the reference, not the trace
    const AveragedParams reference{200.0, 100.0, 0.1};
    const ContainerProfile fine = traced_profile(
        200.0, std::vector<double>(4000, 200.0), std::vector<double>(4000, 50.0),
        std::vector<double>(4000, 0.01), 200.0);
    const auto events = migrror_events(fine, AlignToPrecopy{10}, reference);
    const ContainerProfile paired = averaged_profile(200.0, 200.0, 100.0, 0.1);
    const double horizon = precopy_prehandoff_duration(paired, 10);
    CHECK(events.back().end_s >= horizon);
    CHECK(events[events.size() - 2].end_s < horizon);
  }
}

TEST_CASE("policy errors") {
  const ContainerProfile p =
      traced_profile(200.0, {200.0, 200.0}, {50.0, 50.0}, {1.0, 1.0}, 200.0);
  try {
    migrror_events(p, FixedSteps{3});
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::trace_too_short);
  }
  try {
    migrror_events(p, Deadline{100.0});
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::trace_too_short);
  }
  CHECK_THROWS_AS(migrror_events(p, FixedSteps{0}), ModelError);
  CHECK_THROWS_AS(migrror_events(p, Deadline{0.0}), ModelError);
  CHECK_THROWS_AS(migrror_events(p, Deadline{-1.0}), ModelError);

  SECTION("a dead expansion cannot reach a deadline") {
    const ContainerProfile silent = averaged_profile(200.0, 200.0, 0.0, 0.0);
    try {
      migrror_events(silent, Deadline{100.0});
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == errc::deadline_unreachable);
    }
  }
}

TEST_CASE("outcome sum identities hold for random traces") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> mem(10.0, 1000.0);
  std::uniform_int_distribution<std::size_t> length(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = length(rng);
    const RandomTrace t = sample_trace(rng, n);
    const MigrationOutcome out = migrror_outcome(
        traced_profile(mem(rng), t.rates, t.dirties, t.gaps, 200.0),
        FixedSteps{static_cast<int>(n)});
    double durations = 0.0, volumes = 0.0;
    for (const StepLog& s : out.steps) {
      durations += s.duration_s;
      volumes += s.volume_mb;
    }
    CHECK_THAT(out.migration_time_s, WithinRel(durations + out.downtime_s, 1e-9));
    CHECK_THAT(out.overhead_mb, WithinRel(volumes + out.stop_volume_mb, 1e-9));
  }
}
