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
#include <filesystem>
#include <fstream>
#include <random>

#include "migsim/tracekit.hpp"

using namespace migsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "migsim_tracekit_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("summary statistics") {
  const std::vector<double> toy{1.0, 2.0, 3.0};
  const TraceStats s = trace_stats(toy);
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);
  CHECK(s.median == 2.0);
  CHECK(s.mean == 2.0);
  CHECK_THAT(s.stddev, WithinRel(0.816496580927726, 1e-12));  // population std, sqrt(2/3)

  const TraceStats single = trace_stats(std::vector<double>{5.0});
  CHECK(single.min == 5.0);
  CHECK(single.max == 5.0);
  CHECK(single.median == 5.0);
  CHECK(single.mean == 5.0);
  CHECK(single.stddev == 0.0);

  CHECK(trace_stats(std::vector<double>{2.0, 2.0, 2.0, 2.0}).stddev == 0.0);
  CHECK(trace_stats(std::vector<double>{1.0, 2.0, 3.0, 4.0}).median == 2.5);

  CHECK_THROWS_AS(trace_stats(std::vector<double>{}), ModelError);
  try {
    series_mean(std::vector<double>{});
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::empty_series);
  }
}

TEST_CASE("uniform generation stays in bounds and is reproducible") {
  const SynthSpec spec{1000, Uniform{50.0, 150.0}, Shuffled{}, 7};
  const std::vector<double> a = generate_trace(spec);
  const std::vector<double> b = generate_trace(spec);
  REQUIRE(a.size() == 1000);
  CHECK(a == b);
  for (double v : a) {
    CHECK(v >= 50.0);
    CHECK(v <= 150.0);
  }
  CHECK(generate_trace(SynthSpec{1000, Uniform{50.0, 150.0}, Shuffled{}, 8}) != a);
}

TEST_CASE("truncated normal tracks the target mean on large samples") {
  // Truncating at [50, 150] pulls the sample mean a little below the target;
  // the band documents the best-effort contract.
  const SynthSpec spec{10000, TruncatedNormal{105.385, 29.79, 50.0, 150.0}, Shuffled{}, 0};
  const std::vector<double> values = generate_trace(spec);
  for (double v : values) {
    CHECK(v >= 50.0);
    CHECK(v <= 150.0);
  }
  CHECK_THAT(series_mean(values), WithinAbs(105.385, 2.0));
}

TEST_CASE("orderings") {
  const auto ascending = generate_trace(SynthSpec{100, Uniform{0.0, 1.0}, Ascending{}, 3});
  CHECK(std::is_sorted(ascending.begin(), ascending.end()));
  const auto descending = generate_trace(SynthSpec{100, Uniform{0.0, 1.0}, Descending{}, 3});
  CHECK(std::is_sorted(descending.rbegin(), descending.rend()));

  const OrderingFamily family = mean_preserving_permutations(std::vector<double>{1.0, 2.0, 3.0},
                                                             1.0 / 3.0);
  CHECK(family.original == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(family.ascending == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(family.descending == std::vector<double>{3.0, 2.0, 1.0});
  CHECK(family.front_loaded == std::vector<double>{3.0, 1.0, 2.0});
  CHECK(family.back_loaded == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("permutations preserve the statistics exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(0.0, 500.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> series;
    const std::size_t n = 2 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) series.push_back(value(rng));
    const OrderingFamily family = mean_preserving_permutations(series, 0.25);
    const TraceStats reference = trace_stats(series);
    for (const std::vector<double>* permuted :
         {&family.ascending, &family.descending, &family.front_loaded, &family.back_loaded}) {
      REQUIRE(permuted->size() == series.size());
      CHECK(trace_stats(*permuted) == reference);
      std::vector<double> sorted_a(series), sorted_b(*permuted);
      std::sort(sorted_a.begin(), sorted_a.end());
      std::sort(sorted_b.begin(), sorted_b.end());
      CHECK(sorted_a == sorted_b);  // same multiset
    }
  }

  const OrderingFamily pair = mean_preserving_permutations(std::vector<double>{50.0, 150.0});
  CHECK(pair.original == std::vector<double>{50.0, 150.0});
  CHECK(pair.descending == std::vector<double>{150.0, 50.0});
}

TEST_CASE("generation rejects malformed specs") {
  auto kind_of = [](const SynthSpec& spec) {
    try {
      generate_trace(spec);
    } catch (const ModelError& e) {
      return e.kind();
    }
    return errc::io_error;
  };
  CHECK(kind_of(SynthSpec{0, Uniform{0.0, 1.0}, Shuffled{}, 1}) == errc::invalid_spec);
  CHECK(kind_of(SynthSpec{5, Uniform{2.0, 1.0}, Shuffled{}, 1}) == errc::invalid_spec);
  CHECK(kind_of(SynthSpec{5, TruncatedNormal{0.0, 0.0, 0.0, 1.0}, Shuffled{}, 1}) ==
        errc::invalid_spec);
  CHECK(kind_of(SynthSpec{5, Uniform{0.0, 1.0}, FrontLoaded{0.0}, 1}) == errc::invalid_spec);
  CHECK(kind_of(SynthSpec{5, Uniform{0.0, 1.0}, BackLoaded{1.0}, 1}) == errc::invalid_spec);
  // a truncation window far outside the distribution cannot be sampled
  CHECK(kind_of(SynthSpec{5, TruncatedNormal{0.0, 1.0, 500.0, 501.0}, Shuffled{}, 1}) ==
        errc::invalid_spec);
}

TEST_CASE("trace CSV round-trips exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rate(1.0, 1000.0);
  std::uniform_real_distribution<double> frac(0.0, 0.99);
  for (int trial = 0; trial < 25; ++trial) {
    RateTrace trace;
    const std::size_t n = 1 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      TraceEvent e;
      e.rate_mbps = rate(rng);
      e.dirty_mbps = frac(rng) * e.rate_mbps;
      e.gap_s = frac(rng);
      trace.events.push_back(e);
    }
    const auto path = temp_file("roundtrip.csv");
    write_trace_csv(path, trace);
    CHECK(read_trace_csv(path) == trace);
  }
}

TEST_CASE("trace CSV errors") {
  try {
    read_trace_csv(temp_file("missing.csv"));
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::io_error);
  }

  const auto bad_header = temp_file("bad_header.csv");
  std::ofstream(bad_header) << "rate,dirty,gap\n1,2,3\n";
  try {
    read_trace_csv(bad_header);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::schema_violation);
  }

  const auto bad_field = temp_file("bad_field.csv");
  std::ofstream(bad_field) << "event,rate_mbps,dirty_mbps,gap_s\n1,abc,2,0\n";
  try {
    read_trace_csv(bad_field);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(e.kind() == errc::schema_violation);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  const auto short_row = temp_file("short_row.csv");
  std::ofstream(short_row) << "event,rate_mbps,dirty_mbps,gap_s\n1,100,2\n";
  CHECK_THROWS_AS(read_trace_csv(short_row), ModelError);
}
