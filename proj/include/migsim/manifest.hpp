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

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "migsim/core.hpp"
#include "migsim/fleet.hpp"
#include "migsim/tracekit.hpp"

/// Fleet manifest (JSON) reading and writing, plus the synthetic-fleet
/// generator used by `gen-traces` and by seeded repeats.
///
/// Manifest shape:
///   {
///     "total_bandwidth_mbps": 1000,
///     "method": {"precopy": {"rounds": 10, "inter_round_delay_s": 0.1}}
///             | {"migrror": {"policy": {"fixed": 10} | {"deadline_s": 2.5}
///                                      | {"align": 10},
///                "align_delay_s": 0.1, "event_gap_s": 0.01}},
///     "containers": [
///       {"id": "c0", "memory_mb": 200, "handoff_rate_mbps": 50,
///        "averaged": {"avg_rate_mbps": 50, "avg_dirty_mbps": 25,
///                     "inter_round_delay_s": 0.1}},
///       {"id": "c1", "memory_mb": 200, "handoff_rate_mbps": 50,
///        "trace_file": "traces/c1.csv"}
///     ],
///     "generator": { ... written by gen-traces, consumed by --repeat ... }
///   }
///
/// Trace files are resolved relative to the manifest's directory. An
/// averaged container that omits inter_round_delay_s inherits the method's
/// inter_round_delay_s (pre-copy) or event_gap_s (mirroring).
namespace migsim {

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key))
    throw ModelError(errc::schema_violation, ctx + ": missing field '" + key + "'");
  return obj.at(key);
}

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  const nlohmann::json& v = require_field(obj, key, ctx);
  if (!v.is_number())
    throw ModelError(errc::schema_violation, ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline int require_int(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  const nlohmann::json& v = require_field(obj, key, ctx);
  if (!v.is_number_integer())
    throw ModelError(errc::schema_violation, ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& ctx) {
  const nlohmann::json& v = require_field(obj, key, ctx);
  if (!v.is_string())
    throw ModelError(errc::schema_violation, ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline double optional_number(const nlohmann::json& obj, const char* key, double fallback) {
  if (obj.is_object() && obj.contains(key) && obj.at(key).is_number())
    return obj.at(key).get<double>();
  return fallback;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// hand-off policy <-> JSON

inline nlohmann::json policy_to_json(const HandoffPolicy& policy) {
  nlohmann::json j;
  if (const FixedSteps* fs = std::get_if<FixedSteps>(&policy))
    j["fixed"] = fs->count;
  else if (const Deadline* dl = std::get_if<Deadline>(&policy))
    j["deadline_s"] = dl->budget_s;
  else
    j["align"] = std::get<AlignToPrecopy>(policy).rounds;
  return j;
}

inline HandoffPolicy policy_from_json(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_object()) throw ModelError(errc::schema_violation, ctx + ": policy must be an object");
  if (j.contains("fixed")) {
    const int count = detail::require_int(j, "fixed", ctx);
    if (count < 1) throw ModelError(errc::schema_violation, ctx + ": fixed must be >= 1");
    return FixedSteps{count};
  }
  if (j.contains("deadline_s")) {
    const double budget = detail::require_number(j, "deadline_s", ctx);
    if (!(budget > 0.0)) throw ModelError(errc::schema_violation, ctx + ": deadline_s must be > 0");
    return Deadline{budget};
  }
  if (j.contains("align")) {
    const int rounds = detail::require_int(j, "align", ctx);
    if (rounds < 1) throw ModelError(errc::schema_violation, ctx + ": align must be >= 1");
    return AlignToPrecopy{rounds};
  }
  throw ModelError(errc::schema_violation,
                   ctx + ": policy needs one of 'fixed', 'deadline_s', 'align'");
}

/// Parses the CLI-facing policy syntax fixed:N | deadline:SECONDS | align:M.
inline HandoffPolicy parse_policy_text(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    try {
      if (head == "fixed") return FixedSteps{std::stoi(tail)};
      if (head == "align") return AlignToPrecopy{std::stoi(tail)};
      if (head == "deadline") return Deadline{std::stod(tail)};
    } catch (const std::exception&) {
      throw ModelError(errc::invalid_spec, "bad policy value: '" + text + "'");
    }
  }
  throw ModelError(errc::invalid_spec,
                   "policy must be fixed:N, deadline:SECONDS, or align:M (got '" + text + "')");
}

// ---------------------------------------------------------------------------
// synthetic fleet generator

/// One per-event quantity: either a constant value or a sampled
/// distribution with an ordering. Build via fixed_series/sampled_series so
/// unused fields stay in their normalized defaults.
struct SeriesGenerator {
  bool fixed = false;
  double value = 0.0;
  SynthDistribution distribution = Uniform{50.0, 150.0};
  SynthOrdering ordering = Shuffled{};

  bool operator==(const SeriesGenerator&) const = default;
};

inline SeriesGenerator fixed_series(double value) {
  SeriesGenerator g;
  g.fixed = true;
  g.value = value;
  return g;
}

inline SeriesGenerator sampled_series(SynthDistribution distribution,
                                      SynthOrdering ordering = Shuffled{}) {
  SeriesGenerator g;
  g.distribution = distribution;
  g.ordering = ordering;
  return g;
}

/// Everything gen-traces needs to rebuild a fleet from a seed. Persisted in
/// the manifest so `--repeat` can re-seed trace generation per repeat.
struct GeneratorSpec {
  std::size_t count = 20;
  std::size_t events = 50;
  double memory_mb = 200.0;
  double handoff_rate_mbps = 50.0;
  double total_bandwidth_mbps = 1000.0;
  std::uint64_t seed = 0;
  SeriesGenerator rate = sampled_series(Uniform{50.0, 150.0});
  SeriesGenerator dirty = sampled_series(TruncatedNormal{28.979, 31.89, 0.02323, 145.076});
  SeriesGenerator gap = fixed_series(0.01);
  HandoffPolicy policy = FixedSteps{0};  // 0 is a sentinel: use every generated event

  bool operator==(const GeneratorSpec&) const = default;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<double> generate_series(const SeriesGenerator& gen, std::size_t length,
                                           std::uint64_t seed) {
  if (gen.fixed) return std::vector<double>(length, gen.value);
  return generate_trace(SynthSpec{length, gen.distribution, gen.ordering, seed});
}

}  // namespace detail

/// Builds the fleet in memory: one trace per container, seeded per
/// container and per quantity. Dirty-rate samples that would break the
/// per-event convergence constraint (previous dirty >= next rate) are
/// redrawn from the same distribution, deterministically.
inline FleetSpec build_generated_fleet(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.count == 0) throw ModelError(errc::invalid_spec, "container count must be >= 1");
  if (spec.events == 0) throw ModelError(errc::invalid_spec, "event count must be >= 1");
  FleetSpec fleet;
  fleet.total_bandwidth_mbps = spec.total_bandwidth_mbps;
  HandoffPolicy policy = spec.policy;
  if (const FixedSteps* fs = std::get_if<FixedSteps>(&policy); fs && fs->count < 1)
    policy = FixedSteps{static_cast<int>(spec.events)};
  fleet.method = MigrrorMethod{policy, 0.1, spec.gap.fixed ? spec.gap.value : 0.01};
  for (std::size_t c = 0; c < spec.count; ++c) {
    const std::vector<double> rates =
        detail::generate_series(spec.rate, spec.events, detail::mix_seed(seed, 3 * c));
    std::vector<double> dirties =
        detail::generate_series(spec.dirty, spec.events, detail::mix_seed(seed, 3 * c + 1));
    const std::vector<double> gaps =
        detail::generate_series(spec.gap, spec.events, detail::mix_seed(seed, 3 * c + 2));
    std::mt19937_64 redraw(detail::mix_seed(seed, 0x10000 + c));
    for (std::size_t i = 0; i + 1 < spec.events; ++i) {
      int attempts = 0;
      while (dirties[i] >= rates[i + 1]) {
        if (spec.dirty.fixed || ++attempts > 100000)
          throw ModelError(errc::invalid_spec,
                           "dirty-rate source cannot satisfy the per-event convergence "
                           "constraint against the sampled rates");
        dirties[i] = detail::sample_value(spec.dirty.distribution, redraw);
      }
    }
    RateTrace trace;
    trace.events.reserve(spec.events);
    for (std::size_t i = 0; i < spec.events; ++i)
      trace.events.push_back(TraceEvent{rates[i], dirties[i], gaps[i]});
    ContainerProfile profile;
    profile.id = "c" + std::to_string(c);
    profile.memory_mb = spec.memory_mb;
    profile.handoff_rate_mbps = spec.handoff_rate_mbps;
    profile.params = std::move(trace);
    fleet.containers.push_back(std::move(profile));
  }
  return fleet;
}

// ---------------------------------------------------------------------------
// generator <-> JSON

inline nlohmann::json series_generator_to_json(const SeriesGenerator& gen) {
  nlohmann::json j;
  if (gen.fixed) {
    j["fixed"] = gen.value;
    return j;
  }
  if (const Uniform* u = std::get_if<Uniform>(&gen.distribution)) {
    j["uniform"] = {{"min", u->min}, {"max", u->max}};
  } else {
    const TruncatedNormal& tn = std::get<TruncatedNormal>(gen.distribution);
    j["truncated_normal"] = {
        {"mean", tn.mean}, {"stddev", tn.stddev}, {"min", tn.min}, {"max", tn.max}};
  }
  if (std::holds_alternative<Shuffled>(gen.ordering))
    j["ordering"] = "shuffled";
  else if (std::holds_alternative<Ascending>(gen.ordering))
    j["ordering"] = "ascending";
  else if (std::holds_alternative<Descending>(gen.ordering))
    j["ordering"] = "descending";
  else if (const FrontLoaded* f = std::get_if<FrontLoaded>(&gen.ordering))
    j["ordering"] = "front-loaded:" + format_double(f->fraction);
  else
    j["ordering"] = "back-loaded:" + format_double(std::get<BackLoaded>(gen.ordering).fraction);
  return j;
}

/// Parses ordering syntax: shuffled | ascending | descending |
/// front-loaded[:FRACTION] | back-loaded[:FRACTION].
inline SynthOrdering parse_ordering_text(const std::string& text) {
  if (text == "shuffled") return Shuffled{};
  if (text == "ascending") return Ascending{};
  if (text == "descending") return Descending{};
  std::string head = text;
  double fraction = 0.25;
  if (const std::size_t colon = text.find(':'); colon != std::string::npos) {
    head = text.substr(0, colon);
    try {
      fraction = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw ModelError(errc::invalid_spec, "bad ordering fraction in '" + text + "'");
    }
  }
  if (head == "front-loaded") return FrontLoaded{fraction};
  if (head == "back-loaded") return BackLoaded{fraction};
  throw ModelError(errc::invalid_spec, "unknown ordering '" + text + "'");
}

inline SeriesGenerator series_generator_from_json(const nlohmann::json& j, const std::string& ctx) {
  SeriesGenerator gen;
  if (j.contains("fixed")) {
    gen.fixed = true;
    gen.value = detail::require_number(j, "fixed", ctx);
    return gen;
  }
  if (j.contains("uniform")) {
    const nlohmann::json& u = j.at("uniform");
    gen.distribution = Uniform{detail::require_number(u, "min", ctx),
                               detail::require_number(u, "max", ctx)};
  } else if (j.contains("truncated_normal")) {
    const nlohmann::json& tn = j.at("truncated_normal");
    gen.distribution = TruncatedNormal{
        detail::require_number(tn, "mean", ctx), detail::require_number(tn, "stddev", ctx),
        detail::require_number(tn, "min", ctx), detail::require_number(tn, "max", ctx)};
  } else {
    throw ModelError(errc::schema_violation,
                     ctx + ": series needs 'fixed', 'uniform', or 'truncated_normal'");
  }
  if (j.contains("ordering"))
    gen.ordering = parse_ordering_text(j.at("ordering").get<std::string>());
  return gen;
}

inline nlohmann::json generator_to_json(const GeneratorSpec& spec) {
  nlohmann::json j;
  j["count"] = spec.count;
  j["events"] = spec.events;
  j["memory_mb"] = spec.memory_mb;
  j["handoff_rate_mbps"] = spec.handoff_rate_mbps;
  j["total_bandwidth_mbps"] = spec.total_bandwidth_mbps;
  j["seed"] = spec.seed;
  j["rate"] = series_generator_to_json(spec.rate);
  j["dirty"] = series_generator_to_json(spec.dirty);
  j["gap"] = series_generator_to_json(spec.gap);
  // the whole-trace sentinel (fixed 0) stays implicit
  if (spec.policy != HandoffPolicy{FixedSteps{0}}) j["policy"] = policy_to_json(spec.policy);
  return j;
}

inline GeneratorSpec generator_from_json(const nlohmann::json& j) {
  const std::string ctx = "generator";
  GeneratorSpec spec;
  spec.count = static_cast<std::size_t>(detail::require_int(j, "count", ctx));
  spec.events = static_cast<std::size_t>(detail::require_int(j, "events", ctx));
  spec.memory_mb = detail::require_number(j, "memory_mb", ctx);
  spec.handoff_rate_mbps = detail::require_number(j, "handoff_rate_mbps", ctx);
  spec.total_bandwidth_mbps = detail::require_number(j, "total_bandwidth_mbps", ctx);
  spec.seed = detail::require_field(j, "seed", ctx).get<std::uint64_t>();
  spec.rate = series_generator_from_json(detail::require_field(j, "rate", ctx), ctx + ".rate");
  spec.dirty = series_generator_from_json(detail::require_field(j, "dirty", ctx), ctx + ".dirty");
  spec.gap = series_generator_from_json(detail::require_field(j, "gap", ctx), ctx + ".gap");
  spec.policy =
      j.contains("policy") ? policy_from_json(j.at("policy"), ctx + ".policy") : FixedSteps{0};
  return spec;
}

// ---------------------------------------------------------------------------
// manifest load/store

struct ManifestDocument {
  FleetSpec spec;
  std::optional<GeneratorSpec> generator;
};

inline ManifestDocument load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(errc::io_error, "cannot open manifest: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(errc::schema_violation, std::string("manifest is not valid JSON: ") + e.what());
  }

  ManifestDocument result;
  FleetSpec& spec = result.spec;
  spec.total_bandwidth_mbps = detail::require_number(doc, "total_bandwidth_mbps", "manifest");
  if (!(spec.total_bandwidth_mbps > 0.0))
    throw ModelError(errc::schema_violation, "total_bandwidth_mbps must be > 0");

  const nlohmann::json& method = detail::require_field(doc, "method", "manifest");
  double averaged_delay_fallback = 0.1;
  if (method.contains("precopy")) {
    const nlohmann::json& pre = method.at("precopy");
    PrecopyMethod m;
    m.rounds = pre.contains("rounds") ? detail::require_int(pre, "rounds", "method.precopy") : 10;
    if (m.rounds < 1) throw ModelError(errc::schema_violation, "method.precopy.rounds must be >= 1");
    m.inter_round_delay_s = detail::optional_number(pre, "inter_round_delay_s", 0.1);
    averaged_delay_fallback = m.inter_round_delay_s;
    spec.method = m;
  } else if (method.contains("migrror")) {
    const nlohmann::json& mir = method.at("migrror");
    MigrrorMethod m;
    m.policy = policy_from_json(detail::require_field(mir, "policy", "method.migrror"),
                                "method.migrror.policy");
    m.align_delay_s = detail::optional_number(mir, "align_delay_s", 0.1);
    m.event_gap_s = detail::optional_number(mir, "event_gap_s", 0.01);
    averaged_delay_fallback = m.event_gap_s;
    spec.method = m;
  } else {
    throw ModelError(errc::schema_violation, "method needs 'precopy' or 'migrror'");
  }

  const nlohmann::json& containers = detail::require_field(doc, "containers", "manifest");
  if (!containers.is_array() || containers.empty())
    throw ModelError(errc::schema_violation, "containers must be a non-empty array");
  const std::filesystem::path base_dir = path.parent_path();
  for (std::size_t i = 0; i < containers.size(); ++i) {
    const nlohmann::json& c = containers[i];
    const std::string ctx = "containers[" + std::to_string(i) + "]";
    ContainerProfile profile;
    profile.id = detail::require_string(c, "id", ctx);
    profile.memory_mb = detail::require_number(c, "memory_mb", ctx);
    profile.handoff_rate_mbps = detail::require_number(c, "handoff_rate_mbps", ctx);
    const bool has_averaged = c.contains("averaged");
    const bool has_trace = c.contains("trace_file");
    if (has_averaged == has_trace)
      throw ModelError(errc::schema_violation,
                       ctx + ": exactly one of 'averaged' or 'trace_file' is required");
    if (has_averaged) {
      const nlohmann::json& avg = c.at("averaged");
      AveragedParams params;
      params.avg_rate_mbps = detail::require_number(avg, "avg_rate_mbps", ctx + ".averaged");
      params.avg_dirty_mbps = detail::require_number(avg, "avg_dirty_mbps", ctx + ".averaged");
      params.inter_round_delay_s =
          detail::optional_number(avg, "inter_round_delay_s", averaged_delay_fallback);
      profile.params = params;
    } else {
      const std::string file = detail::require_string(c, "trace_file", ctx);
      profile.params = read_trace_csv(base_dir / file);
    }
    try {
      validate_profile(profile);
    } catch (const ModelError& e) {
      throw e.with_container(profile.id);
    }
    spec.containers.push_back(std::move(profile));
  }

  if (doc.contains("generator")) result.generator = generator_from_json(doc.at("generator"));
  return result;
}

inline FleetSpec parse_fleet_manifest(const std::filesystem::path& path) {
  return load_manifest(path).spec;
}

inline nlohmann::json method_to_json(const FleetMethod& method) {
  nlohmann::json j;
  if (const PrecopyMethod* pre = std::get_if<PrecopyMethod>(&method)) {
    j["precopy"] = {{"rounds", pre->rounds}, {"inter_round_delay_s", pre->inter_round_delay_s}};
  } else {
    const MigrrorMethod& mir = std::get<MigrrorMethod>(method);
    j["migrror"] = {{"policy", policy_to_json(mir.policy)},
                    {"align_delay_s", mir.align_delay_s},
                    {"event_gap_s", mir.event_gap_s}};
  }
  return j;
}

inline std::string sanitize_file_stem(const std::string& id) {
  std::string out;
  for (char ch : id)
    out.push_back((std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch
                                                                                           : '_');
  return out.empty() ? "container" : out;
}

/// Writes the manifest at `path`; traces of traced containers are written
/// next to it under traces/<id>.csv. Parsing the result reproduces an
/// equal FleetSpec.
inline void write_fleet_manifest(const std::filesystem::path& path, const FleetSpec& spec,
                                 const std::optional<GeneratorSpec>& generator = std::nullopt) {
  nlohmann::json doc;
  doc["total_bandwidth_mbps"] = spec.total_bandwidth_mbps;
  doc["method"] = method_to_json(spec.method);
  const std::filesystem::path base_dir = path.parent_path();
  bool made_trace_dir = false;
  nlohmann::json containers = nlohmann::json::array();
  for (const ContainerProfile& profile : spec.containers) {
    nlohmann::json c;
    c["id"] = profile.id;
    c["memory_mb"] = profile.memory_mb;
    c["handoff_rate_mbps"] = profile.handoff_rate_mbps;
    if (profile.is_averaged()) {
      const AveragedParams& p = profile.averaged();
      c["averaged"] = {{"avg_rate_mbps", p.avg_rate_mbps},
                       {"avg_dirty_mbps", p.avg_dirty_mbps},
                       {"inter_round_delay_s", p.inter_round_delay_s}};
    } else {
      if (!made_trace_dir) {
        std::error_code ec;
        std::filesystem::create_directories(base_dir / "traces", ec);
        made_trace_dir = true;
      }
      const std::string rel = "traces/" + sanitize_file_stem(profile.id) + ".csv";
      write_trace_csv(base_dir / rel, profile.trace());
      c["trace_file"] = rel;
    }
    containers.push_back(std::move(c));
  }
  doc["containers"] = std::move(containers);
  if (generator) doc["generator"] = generator_to_json(*generator);

  std::ofstream out(path);
  if (!out) throw ModelError(errc::io_error, "cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw ModelError(errc::io_error, "write failed: " + path.string());
}

}  // namespace migsim
