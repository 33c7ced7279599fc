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
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "migsim/core.hpp"

/// Trace ingestion and serialization (CSV), summary statistics, seeded
/// synthetic trace generation, and mean-preserving reorderings.
namespace migsim {

// ---------------------------------------------------------------------------
// number formatting/parsing (locale-independent, shortest round-trip)

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double_field(std::string_view text, int line, const char* field) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ModelError(errc::schema_violation,
                     std::string("line ") + std::to_string(line) + ": field '" + field +
                         "' is not a number: '" + std::string(text) + "'");
  return value;
}

// ---------------------------------------------------------------------------
// summary statistics

namespace detail {

// Accumulation runs over the sorted values, shifted by the minimum, so the
// result is independent of the input order (permutations of a series get
// bit-identical statistics) and a constant series yields its value exactly.
inline double sorted_mean(const std::vector<double>& sorted) {
  const double lo = sorted.front();
  double acc = 0.0;
  for (double x : sorted) acc += x - lo;
  return lo + acc / static_cast<double>(sorted.size());
}

}  // namespace detail

inline double series_mean(std::span<const double> series) {
  if (series.empty()) throw ModelError(errc::empty_series, "series is empty");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  return detail::sorted_mean(sorted);
}

struct TraceStats {
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation

  bool operator==(const TraceStats&) const = default;
};

inline TraceStats trace_stats(std::span<const double> series) {
  if (series.empty()) throw ModelError(errc::empty_series, "series is empty");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  TraceStats stats;
  stats.min = sorted.front();
  stats.max = sorted.back();
  const std::size_t n = sorted.size();
  stats.median = (n % 2 == 1) ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  stats.mean = detail::sorted_mean(sorted);
  double acc = 0.0;
  for (double x : sorted) acc += (x - stats.mean) * (x - stats.mean);
  stats.stddev = std::sqrt(acc / static_cast<double>(n));
  return stats;
}

// ---------------------------------------------------------------------------
// synthetic generation

struct Uniform {
  double min = 0.0;
  double max = 1.0;
  bool operator==(const Uniform&) const = default;
};

/// Rejection-sampled normal clipped to [min, max]; matching of the target
/// mean/std is best effort (truncation shifts both).
struct TruncatedNormal {
  double mean = 0.0;
  double stddev = 1.0;
  double min = 0.0;
  double max = 1.0;
  bool operator==(const TruncatedNormal&) const = default;
};

using SynthDistribution = std::variant<Uniform, TruncatedNormal>;

struct Shuffled {
  bool operator==(const Shuffled&) const = default;
};
struct Ascending {
  bool operator==(const Ascending&) const = default;
};
struct Descending {
  bool operator==(const Descending&) const = default;
};
/// Places the top `fraction`-quantile of sampled values first, each group
/// keeping its sampled relative order.
struct FrontLoaded {
  double fraction = 0.25;
  bool operator==(const FrontLoaded&) const = default;
};
/// Places the top `fraction`-quantile last.
struct BackLoaded {
  double fraction = 0.25;
  bool operator==(const BackLoaded&) const = default;
};

using SynthOrdering = std::variant<Shuffled, Ascending, Descending, FrontLoaded, BackLoaded>;

struct SynthSpec {
  std::size_t length = 1;
  SynthDistribution distribution = Uniform{};
  SynthOrdering ordering = Shuffled{};
  std::uint64_t seed = 0;

  bool operator==(const SynthSpec&) const = default;
};

namespace detail {

// All sampling goes through explicit arithmetic on the mt19937_64 stream, so
// generated traces are identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline double sample_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
}

inline double sample_value(const SynthDistribution& dist, std::mt19937_64& rng) {
  if (const Uniform* u = std::get_if<Uniform>(&dist))
    return u->min + uniform01(rng) * (u->max - u->min);
  const TruncatedNormal& tn = std::get<TruncatedNormal>(dist);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = tn.mean + tn.stddev * sample_normal(rng);
    if (x >= tn.min && x <= tn.max) return x;
  }
  throw ModelError(errc::invalid_spec, "truncation bounds reject effectively every sample");
}

inline void validate_synth_spec(const SynthSpec& spec) {
  if (spec.length < 1) throw ModelError(errc::invalid_spec, "trace length must be >= 1");
  if (const Uniform* u = std::get_if<Uniform>(&spec.distribution)) {
    if (!(u->min < u->max)) throw ModelError(errc::invalid_spec, "uniform needs min < max");
  } else {
    const TruncatedNormal& tn = std::get<TruncatedNormal>(spec.distribution);
    if (!(tn.min < tn.max)) throw ModelError(errc::invalid_spec, "truncation needs min < max");
    if (!(tn.stddev > 0.0)) throw ModelError(errc::invalid_spec, "stddev must be > 0");
  }
  const double* fraction = nullptr;
  if (const FrontLoaded* f = std::get_if<FrontLoaded>(&spec.ordering)) fraction = &f->fraction;
  if (const BackLoaded* b = std::get_if<BackLoaded>(&spec.ordering)) fraction = &b->fraction;
  if (fraction && !(*fraction > 0.0 && *fraction < 1.0))
    throw ModelError(errc::invalid_spec, "loading fraction must lie in (0, 1)");
}

/// Indices of the k largest values (ties broken toward earlier indices).
inline std::vector<bool> top_quantile_mask(std::span<const double> values, double fraction) {
  const std::size_t n = values.size();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return mask;
}

inline std::vector<double> apply_ordering(std::vector<double> values, const SynthOrdering& ordering,
                                          std::mt19937_64& rng) {
  if (std::holds_alternative<Shuffled>(ordering)) {
    for (std::size_t i = values.size(); i > 1; --i)
      std::swap(values[i - 1], values[uniform_below(rng, i)]);
    return values;
  }
  if (std::holds_alternative<Ascending>(ordering)) {
    std::sort(values.begin(), values.end());
    return values;
  }
  if (std::holds_alternative<Descending>(ordering)) {
    std::sort(values.begin(), values.end(), std::greater<>());
    return values;
  }
  const bool front = std::holds_alternative<FrontLoaded>(ordering);
  const double fraction = front ? std::get<FrontLoaded>(ordering).fraction
                                : std::get<BackLoaded>(ordering).fraction;
  const std::vector<bool> top = top_quantile_mask(values, fraction);
  std::vector<double> result;
  result.reserve(values.size());
  for (int pass = 0; pass < 2; ++pass) {
    const bool want_top = front ? (pass == 0) : (pass == 1);
    for (std::size_t i = 0; i < values.size(); ++i)
      if (top[i] == want_top) result.push_back(values[i]);
  }
  return result;
}

}  // namespace detail

/// Samples one series; deterministic for a fixed spec (seed included), with
/// the ordering applied after sampling.
inline std::vector<double> generate_trace(const SynthSpec& spec) {
  detail::validate_synth_spec(spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<double> values;
  values.reserve(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i)
    values.push_back(detail::sample_value(spec.distribution, rng));
  return detail::apply_ordering(std::move(values), spec.ordering, rng);
}

/// The five standard reorderings of one series. All share the multiset of
/// values, hence identical summary statistics.
struct OrderingFamily {
  std::vector<double> original;
  std::vector<double> ascending;
  std::vector<double> descending;
  std::vector<double> front_loaded;
  std::vector<double> back_loaded;
};

inline OrderingFamily mean_preserving_permutations(std::span<const double> series,
                                                   double fraction = 0.25) {
  if (series.empty()) throw ModelError(errc::empty_series, "series is empty");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ModelError(errc::invalid_spec, "loading fraction must lie in (0, 1)");
  std::mt19937_64 unused(0);
  OrderingFamily family;
  family.original.assign(series.begin(), series.end());
  family.ascending = detail::apply_ordering(family.original, Ascending{}, unused);
  family.descending = detail::apply_ordering(family.original, Descending{}, unused);
  family.front_loaded = detail::apply_ordering(family.original, FrontLoaded{fraction}, unused);
  family.back_loaded = detail::apply_ordering(family.original, BackLoaded{fraction}, unused);
  return family;
}

// ---------------------------------------------------------------------------
// trace CSV files

inline constexpr const char* kTraceCsvHeader = "event,rate_mbps,dirty_mbps,gap_s";

inline void write_trace_csv(const std::filesystem::path& path, const RateTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ModelError(errc::io_error, "cannot open for writing: " + path.string());
  out << kTraceCsvHeader << '\n';
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& e = trace.events[i];
    out << (i + 1) << ',' << format_double(e.rate_mbps) << ',' << format_double(e.dirty_mbps)
        << ',' << format_double(e.gap_s) << '\n';
  }
  if (!out) throw ModelError(errc::io_error, "write failed: " + path.string());
}

inline RateTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(errc::io_error, "cannot open trace file: " + path.string());
  std::string line;
  int line_no = 0;
  RateTrace trace;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kTraceCsvHeader)
        throw ModelError(errc::schema_violation,
                         "line 1: expected header '" + std::string(kTraceCsvHeader) + "'");
      continue;
    }
    std::array<std::string_view, 4> fields;
    std::string_view rest = line;
    for (std::size_t f = 0; f < 4; ++f) {
      const std::size_t comma = rest.find(',');
      if (f < 3) {
        if (comma == std::string_view::npos)
          throw ModelError(errc::schema_violation,
                           "line " + std::to_string(line_no) + ": expected 4 fields");
        fields[f] = rest.substr(0, comma);
        rest.remove_prefix(comma + 1);
      } else {
        if (comma != std::string_view::npos)
          throw ModelError(errc::schema_violation,
                           "line " + std::to_string(line_no) + ": expected 4 fields");
        fields[f] = rest;
      }
    }
    TraceEvent event;
    event.rate_mbps = parse_double_field(fields[1], line_no, "rate_mbps");
    event.dirty_mbps = parse_double_field(fields[2], line_no, "dirty_mbps");
    event.gap_s = parse_double_field(fields[3], line_no, "gap_s");
    trace.events.push_back(event);
  }
  return trace;
}

}  // namespace migsim
